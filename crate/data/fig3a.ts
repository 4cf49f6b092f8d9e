# running example: five states, p holds on b, d and e
states: a b c d e
edges: a->a a->b a->c b->d b->e c->c d->d e->e
atom p: b d e
