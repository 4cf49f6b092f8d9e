# quotient of fig3a.ts with b, d and e merged
states: [a] [c] [bde]
edges: [a]->[a] [a]->[bde] [a]->[c] [c]->[c] [bde]->[bde]
atom p: [bde]
