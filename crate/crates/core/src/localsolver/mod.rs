//! Local, on-the-fly solving of the powerset game.
//!
//! The solver explores the game depth-first from one position, keeping a
//! playlist of the current path, assumptions for positions that recur on
//! the path, and decisions for positions whose winner is established.
//! Failed assumptions retract later decisions by timestamp.

mod counter;
mod trace;

pub use counter::{counter_lt, next_counter, Counter};
pub use trace::{Trace, TraceEvent, TRACE_VERSION};

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::eqsys::{EquationSystem, Sign};
use crate::error::{Error, Result};
use crate::game::{Player, Position, PowersetGame, DEFAULT_MOVE_BUDGET};
use crate::lattice::Lattice;

#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Node budget for each selection computation.
    pub move_budget: usize,
    /// Explore first the moves that already have a usable decision for the
    /// moving player.
    pub prefer_decided: bool,
    /// Record the exploration as a trace.
    pub trace: bool,
    /// Re-check justifications at every decision and after every forget.
    pub validate: bool,
    /// Abort after this many explored nodes.
    pub max_nodes: Option<usize>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            move_budget: DEFAULT_MOVE_BUDGET,
            prefer_decided: false,
            trace: false,
            validate: cfg!(debug_assertions),
            max_nodes: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub nodes: usize,
    pub assumptions: usize,
    pub decisions: usize,
    pub forgets: usize,
    pub forgotten_decisions: usize,
    pub max_depth: usize,
    /// Moves explored that a move hook offered as enhanced moves.
    pub upto_moves: usize,
    /// Explored positions that a move hook marks as jumps.
    pub jump_moves: usize,
}

impl Stats {
    /// Nodes of the game the hook encodes. Every jump adds a ∀-position
    /// and a copy of an ∃-position that the encoded game does not have.
    pub fn base_nodes(&self) -> usize {
        self.nodes - 2 * self.jump_moves
    }
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub winner: Player,
    pub stats: Stats,
    pub trace: Option<Trace>,
    /// Justification failures found when validation is on.
    pub violations: Vec<String>,
}

/// Read access to solver state for move hooks.
pub struct SolverView<'s> {
    signs: &'s [Sign],
    decisions: &'s [HashMap<usize, Vec<Decision>>; 2],
    on_playlist: &'s HashMap<usize, usize>,
    playlist: &'s [Entry],
}

impl SolverView<'_> {
    pub fn signs(&self) -> &[Sign] {
        self.signs
    }

    /// A decision for `player` at `pos` with counter `≤_player k`.
    pub fn has_usable_decision(&self, player: Player, pos: usize, k: &Counter) -> bool {
        self.decisions[slot(player)]
            .get(&pos)
            .is_some_and(|ds| ds.iter().any(|d| d.counter.le(k, player, self.signs)))
    }

    /// The counter of `pos` on the playlist, if it is there.
    pub fn playlist_counter(&self, pos: usize) -> Option<&Counter> {
        self.on_playlist.get(&pos).map(|&i| &self.playlist[i].counter)
    }
}

/// Replaces the selection at some ∃-positions.
pub trait MoveHook<L: Lattice> {
    /// Moves for the ∃-position `(b, i)` reached with counter `k`, or
    /// `None` to fall back to the selection. The first `enhanced` moves
    /// are counted in [`Stats::upto_moves`] when explored.
    fn exists_moves(
        &self,
        game: &mut PowersetGame<'_, L>,
        b: usize,
        i: usize,
        k: &Counter,
        view: &SolverView<'_>,
    ) -> Result<Option<HookMoves>>;

    /// Whether `pos` is a bookkeeping jump, counted in [`Stats::jump_moves`].
    fn is_jump(&self, _pos: &Position) -> bool {
        false
    }
}

pub struct HookMoves {
    pub moves: Vec<Position>,
    pub enhanced: usize,
}

#[derive(Clone, Debug)]
struct Decision {
    counter: Counter,
    justification: Vec<usize>,
    timestamp: u64,
}

#[derive(Clone, Debug)]
struct Assumption {
    counter: Counter,
    timestamp: u64,
}

#[derive(Clone, Debug)]
struct Entry {
    pos: usize,
    counter: Counter,
    moves: Vec<usize>,
    pending: VecDeque<(usize, Counter)>,
    enhanced: HashSet<usize>,
}

enum Step {
    Explore(usize, Counter),
    Backtrack(Player, usize),
}

fn slot(p: Player) -> usize {
    match p {
        Player::Exists => 0,
        Player::Forall => 1,
    }
}

/// Decides the winner from `(b, i)` (basis index, 0-based equation).
pub fn check<L: Lattice>(
    sys: &EquationSystem<L>,
    b: usize,
    i: usize,
    opts: &CheckOptions,
) -> Result<CheckResult> {
    LocalSolver::new(sys, opts.clone())?.run(Position::Exists { b, i })
}

/// One run of the local algorithm.
pub struct LocalSolver<'a, L: Lattice> {
    game: PowersetGame<'a, L>,
    opts: CheckOptions,
    signs: Vec<Sign>,
    hook: Option<&'a dyn MoveHook<L>>,
    playlist: Vec<Entry>,
    on_playlist: HashMap<usize, usize>,
    decisions: [HashMap<usize, Vec<Decision>>; 2],
    assumptions: [HashMap<usize, Vec<Assumption>>; 2],
    clock: u64,
    stats: Stats,
    trace: Option<Vec<TraceEvent>>,
    violations: Vec<String>,
}

impl<'a, L: Lattice> LocalSolver<'a, L> {
    pub fn new(sys: &'a EquationSystem<L>, opts: CheckOptions) -> Result<Self> {
        let game = PowersetGame::with_budget(sys, opts.move_budget)?;
        Ok(LocalSolver {
            game,
            signs: sys.signs(),
            trace: opts.trace.then(Vec::new),
            opts,
            hook: None,
            playlist: Vec::new(),
            on_playlist: HashMap::new(),
            decisions: [HashMap::new(), HashMap::new()],
            assumptions: [HashMap::new(), HashMap::new()],
            clock: 0,
            stats: Stats::default(),
            violations: Vec::new(),
        })
    }

    pub fn with_hook(mut self, hook: &'a dyn MoveHook<L>) -> Self {
        self.hook = Some(hook);
        self
    }

    /// Runs the algorithm from `root` and returns its winner.
    pub fn run(mut self, root: Position) -> Result<CheckResult> {
        let sys = self.game.system();
        let m = sys.len();
        if let Position::Exists { b, i } = &root {
            if *i >= m {
                return Err(Error::IndexOutOfRange { index: *i, len: m });
            }
            let nb = sys.lattice().basis()?.len();
            if *b >= nb {
                return Err(Error::InvalidArgument(format!(
                    "basis index {b} out of range for a basis of {nb} elements"
                )));
            }
        }
        let root_id = self.game.intern(root);
        let mut step = Step::Explore(root_id, Counter::zero(m));
        let winner = loop {
            step = match step {
                Step::Explore(c, k) => self.explore(c, k)?,
                Step::Backtrack(p, c) => match self.backtrack(p, c) {
                    Some(next) => next,
                    None => break p,
                },
            };
        };
        let trace = self.trace.take().map(|events| Trace {
            version: TRACE_VERSION,
            root: self.show(root_id),
            signs: self.signs.clone(),
            winner,
            stats: self.stats.clone(),
            events,
        });
        Ok(CheckResult {
            winner,
            stats: self.stats,
            trace,
            violations: self.violations,
        })
    }

    fn show(&self, id: usize) -> String {
        self.game.position(id).show(self.game.system().lattice())
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    fn record(&mut self, ev: impl FnOnce(&Self) -> TraceEvent) {
        if self.trace.is_some() {
            let e = ev(self);
            self.trace.as_mut().expect("tracing").push(e);
        }
    }

    fn moves_of(&mut self, c: usize, k: &Counter) -> Result<(Vec<usize>, HashSet<usize>)> {
        if let (Some(hook), Position::Exists { b, i }) = (self.hook, self.game.position(c).clone()) {
            let view = SolverView {
                signs: &self.signs,
                decisions: &self.decisions,
                on_playlist: &self.on_playlist,
                playlist: &self.playlist,
            };
            if let Some(hm) = hook.exists_moves(&mut self.game, b, i, k, &view)? {
                let mut ids = Vec::with_capacity(hm.moves.len());
                let mut enhanced = HashSet::new();
                for (n, p) in hm.moves.into_iter().enumerate() {
                    let id = self.game.intern(p);
                    if !ids.contains(&id) {
                        ids.push(id);
                        if n < hm.enhanced {
                            enhanced.insert(id);
                        }
                    }
                }
                return Ok((ids, enhanced));
            }
        }
        Ok((self.game.moves(c)?, HashSet::new()))
    }

    fn usable_decision(&self, c: usize, k: &Counter) -> Option<(Player, &Counter)> {
        [Player::Exists, Player::Forall].into_iter().find_map(|p| {
            self.decisions[slot(p)].get(&c).and_then(|ds| {
                ds.iter()
                    .find(|d| d.counter.le(k, p, &self.signs))
                    .map(|d| (p, &d.counter))
            })
        })
    }

    fn explore(&mut self, c: usize, k: Counter) -> Result<Step> {
        self.stats.nodes += 1;
        if let Some(limit) = self.opts.max_nodes {
            if self.stats.nodes > limit {
                return Err(Error::MoveBudgetExceeded {
                    budget: limit,
                    what: "explored nodes".into(),
                });
            }
        }
        self.record(|s| TraceEvent::Explore {
            position: s.show(c),
            counter: k.clone(),
        });
        if self.hook.is_some_and(|h| h.is_jump(self.game.position(c))) {
            self.stats.jump_moves += 1;
        }
        let (moves, enhanced) = self.moves_of(c, &k)?;
        let owner = self.game.position(c).owner();
        if moves.is_empty() {
            let p = owner.opponent();
            self.decide(p, c, k, Vec::new());
            return Ok(Step::Backtrack(p, c));
        }
        if let Some((p, k2)) = self.usable_decision(c, &k) {
            let k2 = k2.clone();
            self.record(|s| TraceEvent::Reuse {
                player: p,
                position: s.show(c),
                counter: k2,
            });
            return Ok(Step::Backtrack(p, c));
        }
        if let Some(&idx) = self.on_playlist.get(&c) {
            let k_prev = self.playlist[idx].counter.clone();
            let p = if k_prev.lt(&k, Player::Exists, &self.signs) {
                Player::Exists
            } else {
                Player::Forall
            };
            self.assume(p, c, k_prev);
            return Ok(Step::Backtrack(p, c));
        }
        let k_next = k.next(self.game.position(c).priority());
        let mut ordered = moves.clone();
        if self.opts.prefer_decided {
            let signs = &self.signs;
            let decisions = &self.decisions[slot(owner)];
            ordered.sort_by_key(|m| {
                let ready = decisions
                    .get(m)
                    .is_some_and(|ds| ds.iter().any(|d| d.counter.le(&k_next, owner, signs)));
                !ready
            });
        }
        let first = ordered[0];
        let pending = ordered[1..].iter().map(|&m| (m, k_next.clone())).collect();
        if enhanced.contains(&first) {
            self.stats.upto_moves += 1;
        }
        self.on_playlist.insert(c, self.playlist.len());
        self.playlist.push(Entry {
            pos: c,
            counter: k,
            moves,
            pending,
            enhanced,
        });
        self.stats.max_depth = self.stats.max_depth.max(self.playlist.len());
        Ok(Step::Explore(first, k_next))
    }

    /// Pops the playlist after `p` was found to win from `c`. Returns
    /// `None` once the root has been passed.
    fn backtrack(&mut self, p: Player, c: usize) -> Option<Step> {
        let top = self.playlist.last_mut()?;
        let owner = self.game.position(top.pos).owner();
        if owner != p {
            if let Some((next, k)) = top.pending.pop_front() {
                if top.enhanced.contains(&next) {
                    self.stats.upto_moves += 1;
                }
                return Some(Step::Explore(next, k));
            }
        }
        let entry = self.playlist.pop().expect("non-empty playlist");
        self.on_playlist.remove(&entry.pos);
        let justification = if owner == p { vec![c] } else { entry.moves.clone() };
        let (cp, kp) = (entry.pos, entry.counter);
        self.decide(p, cp, kp.clone(), justification);
        remove_pair(&mut self.assumptions[slot(p)], cp, &kp);
        let q = p.opponent();
        if let Some(ts) = self.assumption_time(q, cp, &kp) {
            self.forget(q, cp, &kp, ts);
            remove_pair(&mut self.assumptions[slot(q)], cp, &kp);
        }
        Some(Step::Backtrack(p, cp))
    }

    fn assumption_time(&self, p: Player, c: usize, k: &Counter) -> Option<u64> {
        self.assumptions[slot(p)]
            .get(&c)?
            .iter()
            .find(|a| a.counter == *k)
            .map(|a| a.timestamp)
    }

    fn decide(&mut self, p: Player, c: usize, k: Counter, justification: Vec<usize>) {
        let exists = self.decisions[slot(p)]
            .get(&c)
            .is_some_and(|ds| ds.iter().any(|d| d.counter == k));
        self.record(|s| TraceEvent::Decide {
            player: p,
            position: s.show(c),
            counter: k.clone(),
            justification: justification.iter().map(|&j| s.show(j)).collect(),
        });
        if exists {
            return;
        }
        if self.opts.validate {
            let next = k.next(self.game.position(c).priority());
            for &j in &justification {
                if !self.justified(p, j, &next, None) {
                    self.violations.push(format!(
                        "decision {} {} for {p} justified by {} which is neither decided nor assumed",
                        self.show(c),
                        k,
                        self.show(j)
                    ));
                }
            }
        }
        let timestamp = self.tick();
        self.stats.decisions += 1;
        self.decisions[slot(p)].entry(c).or_default().push(Decision {
            counter: k,
            justification,
            timestamp,
        });
    }

    fn assume(&mut self, p: Player, c: usize, k: Counter) {
        self.record(|s| TraceEvent::Assume {
            player: p,
            position: s.show(c),
            counter: k.clone(),
        });
        let list = self.assumptions[slot(p)].entry(c).or_default();
        if list.iter().any(|a| a.counter == k) {
            return;
        }
        self.clock += 1;
        list.push(Assumption {
            counter: k,
            timestamp: self.clock,
        });
        self.stats.assumptions += 1;
    }

    /// Drops every decision of `p` taken after the failed assumption.
    fn forget(&mut self, p: Player, c: usize, k: &Counter, since: u64) {
        self.stats.forgets += 1;
        let mut removed = Vec::new();
        for (&pos, ds) in self.decisions[slot(p)].iter_mut() {
            ds.retain(|d| {
                let keep = d.timestamp < since;
                if !keep {
                    removed.push((pos, d.counter.clone(), d.timestamp));
                }
                keep
            });
        }
        self.decisions[slot(p)].retain(|_, ds| !ds.is_empty());
        removed.sort_by_key(|r| r.2);
        self.stats.forgotten_decisions += removed.len();
        self.record(|s| TraceEvent::Forget {
            player: p,
            assumption: s.show(c),
            counter: k.clone(),
            removed: removed
                .iter()
                .map(|(pos, kk, _)| format!("{} {}", s.show(*pos), kk))
                .collect(),
        });
        if self.opts.validate {
            self.check_sound_forget(p, c, k);
        }
    }

    /// Whether `j` has a decision for `p` with counter `≤_p bound`, or an
    /// assumption other than `skip` with counter `<_p bound`.
    fn justified(&self, p: Player, j: usize, bound: &Counter, skip: Option<(usize, &Counter)>) -> bool {
        let by_decision = self.decisions[slot(p)]
            .get(&j)
            .is_some_and(|ds| ds.iter().any(|d| d.counter.le(bound, p, &self.signs)));
        let by_assumption = self.assumptions[slot(p)].get(&j).is_some_and(|as_| {
            as_.iter().any(|a| {
                skip != Some((j, &a.counter)) && a.counter.lt(bound, p, &self.signs)
            })
        });
        by_decision || by_assumption
    }

    fn check_sound_forget(&mut self, p: Player, failed: usize, fk: &Counter) {
        let mut bad = Vec::new();
        for (&pos, ds) in &self.decisions[slot(p)] {
            for d in ds {
                let bound = d.counter.next(self.game.position(pos).priority());
                for &j in &d.justification {
                    if !self.justified(p, j, &bound, Some((failed, fk))) {
                        bad.push(format!(
                            "after forgetting {} {}: decision {} {} for {p} lost its justification {}",
                            self.show(failed),
                            fk,
                            self.show(pos),
                            d.counter,
                            self.show(j)
                        ));
                    }
                }
            }
        }
        bad.sort();
        self.violations.extend(bad);
    }
}

fn remove_pair(map: &mut HashMap<usize, Vec<Assumption>>, c: usize, k: &Counter) {
    if let Some(list) = map.get_mut(&c) {
        list.retain(|a| a.counter != *k);
        if list.is_empty() {
            map.remove(&c);
        }
    }
}
