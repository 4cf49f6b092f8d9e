//! Equation systems `x⃗ =η⃗ f⃗(x⃗)` and their global solution.
//!
//! [`solve`] computes the solution by the nested scheme: the last
//! equation's fixpoint is taken over the function obtained by solving the
//! remaining prefix parametrically. It is the reference against which the
//! game-based solvers are tested.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, MetricLattice};

/// Default number of sampled pairs used to validate monotonicity.
pub const DEFAULT_MONOTONICITY_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Mu,
    Nu,
}

impl Sign {
    pub fn is_nu(self) -> bool {
        self == Sign::Nu
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Mu => "mu",
            Sign::Nu => "nu",
        })
    }
}

type Eval<E> = Arc<dyn Fn(&[E]) -> E + Send + Sync>;

/// An m-ary function on lattice elements, assumed monotone.
pub struct MonotoneFunction<E> {
    arity: usize,
    description: String,
    eval: Eval<E>,
}

impl<E> Clone for MonotoneFunction<E> {
    fn clone(&self) -> Self {
        MonotoneFunction {
            arity: self.arity,
            description: self.description.clone(),
            eval: Arc::clone(&self.eval),
        }
    }
}

impl<E> fmt::Debug for MonotoneFunction<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneFunction")
            .field("arity", &self.arity)
            .field("description", &self.description)
            .finish()
    }
}

impl<E> MonotoneFunction<E> {
    pub fn new(
        arity: usize,
        description: impl Into<String>,
        eval: impl Fn(&[E]) -> E + Send + Sync + 'static,
    ) -> Self {
        MonotoneFunction {
            arity,
            description: description.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn apply(&self, args: &[E]) -> E {
        debug_assert_eq!(args.len(), self.arity, "{}", self.description);
        (self.eval)(args)
    }
}

impl<E: Clone + Send + Sync + 'static> MonotoneFunction<E> {
    pub fn constant(arity: usize, description: impl Into<String>, value: E) -> Self {
        MonotoneFunction::new(arity, description, move |_| value.clone())
    }

    /// The projection onto argument `j`.
    pub fn projection(arity: usize, j: usize, description: impl Into<String>) -> Self {
        MonotoneFunction::new(arity, description, move |x: &[E]| x[j].clone())
    }
}

#[derive(Clone, Debug)]
pub struct Equation<E> {
    pub name: String,
    pub sign: Sign,
    pub function: MonotoneFunction<E>,
}

impl<E> Equation<E> {
    pub fn new(name: impl Into<String>, sign: Sign, function: MonotoneFunction<E>) -> Self {
        Equation {
            name: name.into(),
            sign,
            function,
        }
    }
}

/// An ordered list of equations over one lattice. Order matters.
pub struct EquationSystem<L: Lattice> {
    lattice: Arc<L>,
    equations: Vec<Equation<L::Elem>>,
}

impl<L: Lattice> Clone for EquationSystem<L> {
    fn clone(&self) -> Self {
        EquationSystem {
            lattice: Arc::clone(&self.lattice),
            equations: self.equations.clone(),
        }
    }
}

impl<L: Lattice> fmt::Debug for EquationSystem<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for e in &self.equations {
            list.entry(&format_args!("{} ={} {}", e.name, e.sign, e.function.description));
        }
        list.finish()
    }
}

impl<L: Lattice> EquationSystem<L> {
    /// Builds a system, checking arities and sampling each function for
    /// monotonicity violations.
    pub fn new(lattice: Arc<L>, equations: Vec<Equation<L::Elem>>) -> Result<Self> {
        Self::with_samples(lattice, equations, DEFAULT_MONOTONICITY_SAMPLES)
    }

    /// As [`EquationSystem::new`] with a configurable sample count.
    pub fn with_samples(
        lattice: Arc<L>,
        equations: Vec<Equation<L::Elem>>,
        samples: usize,
    ) -> Result<Self> {
        let sys = Self::unchecked(lattice, equations)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f6e6f);
        for eq in &sys.equations {
            check_monotone(&*sys.lattice, &eq.function, samples, &mut rng)?;
        }
        Ok(sys)
    }

    /// Builds a system checking arities only.
    pub fn unchecked(lattice: Arc<L>, equations: Vec<Equation<L::Elem>>) -> Result<Self> {
        let m = equations.len();
        for eq in &equations {
            if eq.function.arity != m {
                return Err(Error::ArityMismatch {
                    name: eq.function.description.clone(),
                    expected: m,
                    found: eq.function.arity,
                });
            }
        }
        Ok(EquationSystem { lattice, equations })
    }

    pub fn lattice(&self) -> &L {
        &self.lattice
    }

    pub fn lattice_arc(&self) -> &Arc<L> {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn equations(&self) -> &[Equation<L::Elem>] {
        &self.equations
    }

    pub fn sign(&self, i: usize) -> Sign {
        self.equations[i].sign
    }

    pub fn signs(&self) -> Vec<Sign> {
        self.equations.iter().map(|e| e.sign).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.equations.iter().position(|e| e.name == name)
    }

    /// Evaluates `f_i` at the tuple `x`.
    pub fn eval(&self, i: usize, x: &[L::Elem]) -> L::Elem {
        self.equations[i].function.apply(x)
    }

    /// Removes equation `i` (0-based) and fixes `x_i` to `l` in the others.
    pub fn substitute(&self, i: usize, l: L::Elem) -> Result<Self>
    where
        L::Elem: 'static,
    {
        let m = self.len();
        if i >= m {
            return Err(Error::IndexOutOfRange { index: i, len: m });
        }
        let equations = self
            .equations
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, eq)| {
                let f = eq.function.clone();
                let l = l.clone();
                let g = MonotoneFunction::new(
                    m - 1,
                    format!("{}[x{} := {:?}]", f.description, i + 1, l),
                    move |x: &[L::Elem]| {
                        let mut full = Vec::with_capacity(m);
                        full.extend_from_slice(&x[..i]);
                        full.push(l.clone());
                        full.extend_from_slice(&x[i..]);
                        f.apply(&full)
                    },
                );
                Equation::new(eq.name.clone(), eq.sign, g)
            })
            .collect();
        Ok(EquationSystem {
            lattice: Arc::clone(&self.lattice),
            equations,
        })
    }
}

/// Samples pairs `x⃗ ≤ y⃗` and checks `f(x⃗) ≤ f(y⃗)`.
pub fn check_monotone<L: Lattice>(
    lat: &L,
    f: &MonotoneFunction<L::Elem>,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let m = f.arity();
    let pool = {
        let mut p = lat.sample(rng, samples.max(2));
        p.push(lat.bot());
        p.push(lat.top());
        p
    };
    let pick = |rng: &mut ChaCha8Rng| pool[rng.gen_range(0..pool.len())].clone();
    for _ in 0..samples {
        let x: Vec<L::Elem> = (0..m).map(|_| pick(rng)).collect();
        let y: Vec<L::Elem> = x.iter().map(|xi| lat.join(xi, &pick(rng))).collect();
        let (fx, fy) = (f.apply(&x), f.apply(&y));
        if !lat.leq(&fx, &fy) {
            let show = |v: &[L::Elem]| {
                v.iter().map(|e| lat.show(e)).collect::<Vec<_>>().join(", ")
            };
            return Err(Error::NotMonotone {
                name: f.description().to_string(),
                witness: format!(
                    "({}) ≤ ({}) but f gives {} ⋢ {}",
                    show(&x),
                    show(&y),
                    lat.show(&fx),
                    lat.show(&fy)
                ),
            });
        }
    }
    Ok(())
}

/// Least or greatest fixpoint of a unary monotone function by iteration
/// from bottom or top.
///
/// Finite lattices need no budget. Other lattices must pass
/// `max_iterations`; exhausting it yields [`Error::NonConvergence`].
pub fn kleene<L: Lattice>(
    lat: &L,
    f: impl FnMut(&L::Elem) -> L::Elem,
    sign: Sign,
    max_iterations: Option<usize>,
) -> Result<L::Elem> {
    if !lat.is_finite() && max_iterations.is_none() {
        return Err(Error::Unsupported(
            "fixpoint iteration on a non-finite lattice needs an iteration budget".into(),
        ));
    }
    kleene_count(lat, f, sign, max_iterations).map(|(v, _)| v)
}

fn kleene_count<L: Lattice>(
    lat: &L,
    mut f: impl FnMut(&L::Elem) -> L::Elem,
    sign: Sign,
    max_iterations: Option<usize>,
) -> Result<(L::Elem, usize)> {
    let mut x = match sign {
        Sign::Mu => lat.bot(),
        Sign::Nu => lat.top(),
    };
    let mut steps = 0;
    loop {
        let y = f(&x);
        steps += 1;
        if y == x {
            return Ok((x, steps));
        }
        if max_iterations.is_some_and(|budget| steps >= budget) {
            return Err(Error::NonConvergence {
                iterations: steps,
                last: lat.show(&y),
            });
        }
        x = y;
    }
}

/// The solution of `E` on a finite lattice.
pub fn solve<L: Lattice>(sys: &EquationSystem<L>) -> Result<Vec<L::Elem>> {
    if !sys.lattice().is_finite() {
        return Err(Error::Unsupported(
            "global solving needs a finite lattice; use solve_epsilon".into(),
        ));
    }
    let mut memo = HashMap::new();
    solve_prefix(sys, sys.len(), &[], &mut memo)
}

type Memo<E> = HashMap<(usize, Vec<E>), Vec<E>>;

/// Solves equations `0..k` with `x_k..` fixed to `suffix`.
fn solve_prefix<L: Lattice>(
    sys: &EquationSystem<L>,
    k: usize,
    suffix: &[L::Elem],
    memo: &mut Memo<L::Elem>,
) -> Result<Vec<L::Elem>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if let Some(hit) = memo.get(&(k, suffix.to_vec())) {
        return Ok(hit.clone());
    }
    let lat = sys.lattice();
    let with = |x: &L::Elem| {
        let mut s = Vec::with_capacity(suffix.len() + 1);
        s.push(x.clone());
        s.extend_from_slice(suffix);
        s
    };
    let mut err = None;
    let fixed = kleene(
        lat,
        |x| {
            let rest = with(x);
            match solve_prefix(sys, k - 1, &rest, memo) {
                Ok(mut full) => {
                    full.extend(rest);
                    sys.eval(k - 1, &full)
                }
                Err(e) => {
                    err.get_or_insert(e);
                    x.clone()
                }
            }
        },
        sys.sign(k - 1),
        None,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let rest = with(&fixed);
    let mut out = solve_prefix(sys, k - 1, &rest, memo)?;
    out.push(fixed);
    memo.insert((k, suffix.to_vec()), out.clone());
    Ok(out)
}

/// Iteration statistics for one equation under ε-iteration.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LoopStats {
    pub equation: String,
    /// Number of fixpoint loops run for this equation.
    pub loops: usize,
    /// Iterations summed over all loops.
    pub iterations: usize,
    /// Longest single loop.
    pub max_iterations: usize,
    /// Whether every loop reached an exact fixpoint.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsilonReport<E> {
    pub values: Vec<E>,
    pub converged: bool,
    pub stats: Vec<LoopStats>,
}

/// Approximate solution on a metric lattice.
///
/// Every fixpoint loop stops once two successive iterates are closer than
/// `tol`, or after `max_iter` iterations, in which case the report has
/// `converged = false` and carries the last iterates. Least fixpoints are
/// approached from below and greatest ones from above.
pub fn solve_epsilon<L: MetricLattice>(
    sys: &EquationSystem<L>,
    tol: &BigRational,
    max_iter: usize,
) -> Result<EpsilonReport<L::Elem>> {
    if *tol <= BigRational::zero() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let mut run = EpsRun {
        sys,
        tol,
        max_iter,
        converged: true,
        stats: sys
            .equations()
            .iter()
            .map(|e| LoopStats {
                equation: e.name.clone(),
                exact: true,
                ..LoopStats::default()
            })
            .collect(),
    };
    let values = run.prefix(sys.len(), &[]);
    Ok(EpsilonReport {
        values,
        converged: run.converged,
        stats: run.stats,
    })
}

struct EpsRun<'a, L: MetricLattice> {
    sys: &'a EquationSystem<L>,
    tol: &'a BigRational,
    max_iter: usize,
    converged: bool,
    stats: Vec<LoopStats>,
}

impl<L: MetricLattice> EpsRun<'_, L> {
    fn prefix(&mut self, k: usize, suffix: &[L::Elem]) -> Vec<L::Elem> {
        if k == 0 {
            return Vec::new();
        }
        let lat = self.sys.lattice();
        let with = |x: &L::Elem| {
            let mut s = Vec::with_capacity(suffix.len() + 1);
            s.push(x.clone());
            s.extend_from_slice(suffix);
            s
        };
        let mut x = match self.sys.sign(k - 1) {
            Sign::Mu => lat.bot(),
            Sign::Nu => lat.top(),
        };
        let mut inner_at_x;
        let mut steps = 0;
        let mut exact = false;
        loop {
            let rest = with(&x);
            inner_at_x = self.prefix(k - 1, &rest);
            let mut full = inner_at_x.clone();
            full.extend(rest);
            let y = self.sys.eval(k - 1, &full);
            steps += 1;
            if y == x {
                exact = true;
                break;
            }
            let close = lat.distance(&x, &y) < *self.tol;
            x = y;
            if close {
                break;
            }
            if steps >= self.max_iter {
                self.converged = false;
                break;
            }
        }
        let st = &mut self.stats[k - 1];
        st.loops += 1;
        st.iterations += steps;
        st.max_iterations = st.max_iterations.max(steps);
        st.exact &= exact;
        let mut out = if exact {
            inner_at_x
        } else {
            self.prefix(k - 1, &with(&x))
        };
        out.push(x);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Grid, Pointwise, Powerset, RationalInterval, TableLattice};
    use num_bigint::BigInt;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn kleene_identity() {
        let g = Grid::new(10).unwrap();
        assert_eq!(kleene(&g, |x| *x, Sign::Mu, None).unwrap(), 0);
        assert_eq!(kleene(&g, |x| *x, Sign::Nu, None).unwrap(), 10);
    }

    #[test]
    fn kleene_meet_half() {
        let g = Grid::new(10).unwrap();
        let nu = kleene(&g, |x| (*x).min(5), Sign::Nu, None).unwrap();
        // brute force: greatest element with f(x) = x
        let oracle = (0..=10u32).filter(|x| (*x).min(5) == *x).max().unwrap();
        assert_eq!(nu, oracle);
        assert_eq!(nu, 5);
    }

    #[test]
    fn kleene_needs_budget_on_rationals() {
        let r = RationalInterval;
        assert!(matches!(
            kleene(&r, |x| x.clone(), Sign::Mu, None),
            Err(Error::Unsupported(_))
        ));
        let half = q(1, 2);
        // x ↦ (x + 1)/2 approaches 1 without reaching it
        let res = kleene(&r, |x| (x + BigRational::from_integer(1.into())) * &half, Sign::Mu, Some(20));
        assert!(matches!(res, Err(Error::NonConvergence { iterations: 20, .. })));
    }

    #[test]
    fn empty_system() {
        let sys = EquationSystem::new(Arc::new(Grid::new(3).unwrap()), vec![]).unwrap();
        assert_eq!(solve(&sys).unwrap(), Vec::<u32>::new());
    }

    #[test]
    fn arity_checked() {
        let f = MonotoneFunction::constant(2, "c", 1u32);
        let err = EquationSystem::new(
            Arc::new(Grid::new(3).unwrap()),
            vec![Equation::new("x", Sign::Mu, f)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { expected: 1, found: 2, .. }));
    }

    #[test]
    fn non_monotone_rejected() {
        let f = MonotoneFunction::new(1, "negation", |x: &[u32]| 3 - x[0]);
        let err = EquationSystem::new(
            Arc::new(Grid::new(3).unwrap()),
            vec![Equation::new("x", Sign::Mu, f)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotMonotone { .. }));
    }

    #[test]
    fn substitute_removes_equation() {
        let g = Arc::new(Grid::new(4).unwrap());
        let sys = EquationSystem::new(
            g.clone(),
            vec![Equation::new("x", Sign::Mu, MonotoneFunction::projection(1, 0, "x"))],
        )
        .unwrap();
        let s = sys.substitute(0, 2).unwrap();
        assert!(s.is_empty());
        assert!(matches!(sys.substitute(1, 2), Err(Error::IndexOutOfRange { index: 1, len: 1 })));
    }

    #[test]
    fn substitute_is_monotone_in_the_value() {
        let g = Arc::new(Grid::new(4).unwrap());
        let f = MonotoneFunction::new(2, "min", |x: &[u32]| x[0].min(x[1]));
        let sys = EquationSystem::new(
            g.clone(),
            vec![
                Equation::new("x", Sign::Nu, f.clone()),
                Equation::new("y", Sign::Nu, f),
            ],
        )
        .unwrap();
        let lo = sys.substitute(1, 1).unwrap();
        let hi = sys.substitute(1, 3).unwrap();
        for x in 0..=4u32 {
            assert!(lo.eval(0, &[x]) <= hi.eval(0, &[x]));
        }
        assert_eq!(solve(&lo).unwrap(), vec![1]);
        assert_eq!(solve(&hi).unwrap(), vec![3]);
    }

    /// Order sensitivity: `x1 =μ x2; x2 =ν x1` versus the same equations
    /// listed the other way round.
    #[test]
    fn order_matters() {
        let two = Arc::new(TableLattice::chain(2).unwrap());
        let proj = |j| MonotoneFunction::projection(2, j, format!("x{}", j + 1));
        // search all sign assignments of the copy system for a pair whose
        // solutions differ when the equations are swapped
        let mut found = None;
        for s1 in [Sign::Mu, Sign::Nu] {
            for s2 in [Sign::Mu, Sign::Nu] {
                let a = EquationSystem::new(
                    two.clone(),
                    vec![Equation::new("x1", s1, proj(1)), Equation::new("x2", s2, proj(0))],
                )
                .unwrap();
                // swapped: x2 comes first; variable slots follow the new order
                let b = EquationSystem::new(
                    two.clone(),
                    vec![Equation::new("x2", s2, proj(1)), Equation::new("x1", s1, proj(0))],
                )
                .unwrap();
                let sa = solve(&a).unwrap();
                let mut sb = solve(&b).unwrap();
                sb.reverse();
                if sa != sb && found.is_none() {
                    found = Some((s1, s2, sa, sb));
                }
            }
        }
        let (s1, s2, sa, sb) = found.expect("some ordering changes the solution");
        assert_ne!(s1, s2, "same-sign blocks are order independent");
        assert_ne!(sa, sb);
    }

    #[test]
    fn solve_matches_brute_force_on_mixed_system() {
        // x1 =ν x1 ⊓ x2, x2 =μ x1 ⊔ 1/4 over the grid with n = 4
        let g = Arc::new(Grid::new(4).unwrap());
        let sys = EquationSystem::new(
            g,
            vec![
                Equation::new("x1", Sign::Nu, MonotoneFunction::new(2, "x1 ⊓ x2", |x: &[u32]| x[0].min(x[1]))),
                Equation::new("x2", Sign::Mu, MonotoneFunction::new(2, "x1 ⊔ 1/4", |x: &[u32]| x[0].max(1))),
            ],
        )
        .unwrap();
        // x1 given x2 is x2 (greatest fixpoint of y ↦ y ⊓ x2), so x2 = μ(x ↦ x ⊔ 1/4) = 1/4
        assert_eq!(solve(&sys).unwrap(), vec![1, 1]);
    }

    #[test]
    fn constant_epsilon_is_exact() {
        let sys = EquationSystem::new(
            Arc::new(RationalInterval),
            vec![Equation::new("x", Sign::Mu, MonotoneFunction::constant(1, "1/2", q(1, 2)))],
        )
        .unwrap();
        let rep = solve_epsilon(&sys, &q(1, 1_000_000), 100).unwrap();
        assert_eq!(rep.values, vec![q(1, 2)]);
        assert!(rep.converged);
        assert!(rep.stats[0].exact);
        assert_eq!(rep.stats[0].iterations, 2);
    }

    #[test]
    fn epsilon_reports_non_convergence() {
        let sys = EquationSystem::new(
            Arc::new(RationalInterval),
            vec![Equation::new(
                "x",
                Sign::Mu,
                MonotoneFunction::new(1, "(x+1)/2", |x: &[BigRational]| {
                    (&x[0] + BigRational::from_integer(1.into())) / BigRational::from_integer(2.into())
                }),
            )],
        )
        .unwrap();
        let rep = solve_epsilon(&sys, &q(1, 1 << 40), 10).unwrap();
        assert!(!rep.converged);
        assert!(rep.values[0] < q(1, 1));
        assert!(solve_epsilon(&sys, &q(0, 1), 10).is_err());
    }

    #[test]
    fn epsilon_on_pointwise_rationals() {
        let lat = Arc::new(Pointwise::new(["a", "b"], RationalInterval));
        let sys = EquationSystem::new(
            lat,
            vec![Equation::new(
                "x",
                Sign::Nu,
                MonotoneFunction::new(1, "swap ⊓ 1/3", |x: &[Vec<BigRational>]| {
                    let third = BigRational::new(1.into(), 3.into());
                    vec![x[0][1].clone().min(third.clone()), x[0][0].clone().min(third)]
                }),
            )],
        )
        .unwrap();
        let rep = solve_epsilon(&sys, &q(1, 100), 10).unwrap();
        assert_eq!(rep.values[0], vec![q(1, 3), q(1, 3)]);
    }

    #[test]
    fn solve_refuses_infinite_lattice() {
        let sys = EquationSystem::new(Arc::new(RationalInterval), vec![]).unwrap();
        assert!(matches!(solve(&sys), Err(Error::Unsupported(_))));
    }

    #[test]
    fn powerset_solution() {
        let p = Arc::new(Powerset::new(["a", "b"]));
        let pp = p.clone();
        let f = MonotoneFunction::new(1, "x ∪ {a}", move |x: &[crate::lattice::StateSet]| {
            pp.join(&x[0], &pp.set_of([0]))
        });
        let sys = EquationSystem::new(p.clone(), vec![Equation::new("x", Sign::Mu, f)]).unwrap();
        assert_eq!(solve(&sys).unwrap(), vec![p.set_of([0])]);
    }
}
