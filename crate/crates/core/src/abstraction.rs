//! Galois connections between lattices and executable checks of the
//! conditions under which an abstract system soundly or completely
//! approximates a concrete one.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eqsys::{Equation, EquationSystem, MonotoneFunction, Sign};
use crate::error::{Error, Result};
use crate::lattice::{
    check_domain, check_partners, tuples, Grid, Lattice, Pointwise, Powerset, RationalInterval,
    CHECK_SAMPLES,
};

/// Element-wise checks enumerate lattices up to this many elements.
pub const EXHAUSTIVE_LIMIT: usize = 1 << 16;
/// Pairwise checks enumerate lattices up to this many elements.
pub const PAIRWISE_LIMIT: usize = 256;
/// Condition checks enumerate `L^m` up to this many tuples.
pub const TUPLE_LIMIT: usize = 1 << 16;

/// A pair `α : C → A`, `γ : A → C` meant to satisfy
/// `α(c) ≤ a ⟺ c ⊑ γ(a)`. Construction does not verify it; see
/// [`verify_connection`].
pub struct GaloisConnection<C: Lattice, A: Lattice> {
    concrete: Arc<C>,
    abstract_: Arc<A>,
    name: String,
    alpha: Arc<dyn Fn(&C::Elem) -> A::Elem + Send + Sync>,
    gamma: Arc<dyn Fn(&A::Elem) -> C::Elem + Send + Sync>,
}

impl<C: Lattice, A: Lattice> Clone for GaloisConnection<C, A> {
    fn clone(&self) -> Self {
        GaloisConnection {
            concrete: Arc::clone(&self.concrete),
            abstract_: Arc::clone(&self.abstract_),
            name: self.name.clone(),
            alpha: Arc::clone(&self.alpha),
            gamma: Arc::clone(&self.gamma),
        }
    }
}

impl<C: Lattice, A: Lattice> fmt::Debug for GaloisConnection<C, A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GaloisConnection({})", self.name)
    }
}

impl<C: Lattice, A: Lattice> GaloisConnection<C, A> {
    pub fn new(
        concrete: Arc<C>,
        abstract_: Arc<A>,
        name: impl Into<String>,
        alpha: impl Fn(&C::Elem) -> A::Elem + Send + Sync + 'static,
        gamma: impl Fn(&A::Elem) -> C::Elem + Send + Sync + 'static,
    ) -> Self {
        GaloisConnection {
            concrete,
            abstract_,
            name: name.into(),
            alpha: Arc::new(alpha),
            gamma: Arc::new(gamma),
        }
    }

    /// Completes a join-preserving `α` between finite lattices with its
    /// right adjoint `γ(a) = ⨆{c | α(c) ≤ a}`, tabulated.
    pub fn from_alpha(
        concrete: Arc<C>,
        abstract_: Arc<A>,
        name: impl Into<String>,
        alpha: impl Fn(&C::Elem) -> A::Elem + Send + Sync + 'static,
    ) -> Result<Self>
    where
        A::Elem: 'static,
        C::Elem: 'static,
    {
        let cs = concrete.elements()?;
        let table: HashMap<A::Elem, C::Elem> = abstract_
            .elements()?
            .into_iter()
            .map(|a| {
                let below = cs.iter().filter(|c| abstract_.leq(&alpha(c), &a));
                let g = concrete.join_all(below);
                (a, g)
            })
            .collect();
        Ok(GaloisConnection::new(concrete, abstract_, name, alpha, move |a| {
            table[a].clone()
        }))
    }

    pub fn alpha(&self, c: &C::Elem) -> A::Elem {
        (self.alpha)(c)
    }

    pub fn gamma(&self, a: &A::Elem) -> C::Elem {
        (self.gamma)(a)
    }

    pub fn concrete(&self) -> &Arc<C> {
        &self.concrete
    }

    pub fn abstract_lattice(&self) -> &Arc<A> {
        &self.abstract_
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// `⟨id, id⟩ : L → L`.
pub fn identity_connection<L: Lattice>(lat: Arc<L>) -> GaloisConnection<L, L> {
    GaloisConnection::new(Arc::clone(&lat), lat, "id", |c: &L::Elem| c.clone(), |a: &L::Elem| a.clone())
}

/// `α_n(x) = ⌈n·x⌉/n` with `γ_n` the inclusion of the grid into `[0, 1]`.
pub fn grid_connection(n: u32) -> Result<GaloisConnection<RationalInterval, Grid>> {
    let grid = Arc::new(Grid::new(n)?);
    let (ga, gg) = (Arc::clone(&grid), Arc::clone(&grid));
    Ok(GaloisConnection::new(
        Arc::new(RationalInterval),
        grid,
        format!("grid-alpha:{n}"),
        move |x| ga.alpha(x),
        move |k| gg.value(*k),
    ))
}

/// [`grid_connection`] applied state by state.
pub fn pointwise_grid_connection<I, S>(
    states: I,
    n: u32,
) -> Result<GaloisConnection<Pointwise<RationalInterval>, Pointwise<Grid>>>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let states: Vec<String> = states.into_iter().map(Into::into).collect();
    let grid = Grid::new(n)?;
    let (ga, gg) = (grid.clone(), grid.clone());
    Ok(GaloisConnection::new(
        Arc::new(Pointwise::new(states.clone(), RationalInterval)),
        Arc::new(Pointwise::new(states, grid)),
        format!("grid-alpha:{n} pointwise"),
        move |v: &Vec<_>| v.iter().map(|x| ga.alpha(x)).collect(),
        move |v: &Vec<u32>| v.iter().map(|k| gg.value(*k)).collect(),
    ))
}

/// `⟨⨆, ↓(·) ∩ B_L⟩ : 𝒫(B_L) → L`, with basis elements named by the
/// lattice's rendering.
pub fn basis_connection<L: Lattice + 'static>(lat: Arc<L>) -> Result<GaloisConnection<Powerset, L>> {
    let basis = lat.basis()?.to_vec();
    let sets = Arc::new(Powerset::new(basis.iter().map(|b| lat.show(b))));
    let (la, lg) = (Arc::clone(&lat), Arc::clone(&lat));
    let (ba, bg) = (basis.clone(), basis);
    let sg = Arc::clone(&sets);
    Ok(GaloisConnection::new(
        sets,
        lat,
        "basis",
        move |x: &crate::lattice::StateSet| la.join_all(x.ones().map(|i| &ba[i])),
        move |l: &L::Elem| sg.set_of((0..bg.len()).filter(|&i| lg.leq(&bg[i], l))),
    ))
}

/// `⟨♦_{R⁻¹}, ■_R⟩ : 𝒫(S_C) → 𝒫(S_A)` for a relation `R ⊆ S_C × S_A`
/// given as index pairs.
pub fn simulation_connection(
    concrete: Arc<Powerset>,
    abstract_: Arc<Powerset>,
    r: &[(usize, usize)],
) -> Result<GaloisConnection<Powerset, Powerset>> {
    let (nc, na) = (concrete.len(), abstract_.len());
    if let Some(&(x, y)) = r.iter().find(|&&(x, y)| x >= nc || y >= na) {
        return Err(Error::InvalidArgument(format!(
            "pair ({x},{y}) outside {nc} concrete and {na} abstract states"
        )));
    }
    let mut image = vec![Vec::new(); nc];
    for &(x, y) in r {
        image[x].push(y);
    }
    let image2 = image.clone();
    let (ca, aa) = (Arc::clone(&concrete), Arc::clone(&abstract_));
    Ok(GaloisConnection::new(
        concrete,
        abstract_,
        "simulation",
        move |xs| aa.set_of(xs.ones().flat_map(|x| image[x].iter().copied())),
        move |ys| ca.set_of((0..nc).filter(|&x| image2[x].iter().all(|&y| ys.contains(y)))),
    ))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConnectionReport {
    /// `α(c) ≤ a ⟺ c ⊑ γ(a)`, checked as monotonicity of both maps with
    /// `c ⊑ γ(α(c))` and `α(γ(a)) ≤ a`.
    pub adjoint: bool,
    /// `α ∘ γ = id`.
    pub insertion: bool,
    pub alpha_strict: bool,
    /// `α(x ⊔ y) = α(x) ⊔ α(y)`.
    pub alpha_preserves_joins: bool,
    pub gamma_costrict: bool,
    /// `γ(a ⊓ b) = γ(a) ⊓ γ(b)`.
    pub gamma_preserves_meets: bool,
    /// Whether both lattices were enumerated.
    pub exhaustive: bool,
    pub violations: Vec<String>,
}

/// Checks the adjunction and the derived preservation facts.
pub fn verify_connection<C: Lattice, A: Lattice>(gc: &GaloisConnection<C, A>) -> ConnectionReport {
    let (c, a) = (&*gc.concrete, &*gc.abstract_);
    let (mut cs, c_all) = check_domain(c, EXHAUSTIVE_LIMIT);
    let (as_, a_all) = check_domain(a, EXHAUSTIVE_LIMIT);
    if !c_all {
        // concretisations are where adjunction failures show up
        cs.extend(as_.iter().map(|x| gc.gamma(x)));
        cs.sort();
        cs.dedup();
    }
    let mut r = ConnectionReport {
        adjoint: true,
        insertion: true,
        alpha_strict: true,
        alpha_preserves_joins: true,
        gamma_costrict: true,
        gamma_preserves_meets: true,
        exhaustive: c_all && a_all,
        violations: Vec::new(),
    };
    let mut violations = Vec::new();
    // keeps the first witness per property
    let mut fail = |flag: &mut bool, msg: String| {
        if std::mem::replace(flag, false) {
            violations.push(msg);
        }
    };

    for x in &cs {
        let ax = gc.alpha(x);
        let gax = gc.gamma(&ax);
        if !c.leq(x, &gax) {
            fail(&mut r.adjoint, format!("{} ⋢ γ(α({})) = {}", c.show(x), c.show(x), c.show(&gax)));
        }
        for y in check_partners(&cs, PAIRWISE_LIMIT) {
            let z = c.join(x, y);
            let az = gc.alpha(&z);
            if !a.leq(&ax, &az) {
                fail(&mut r.adjoint, format!("α is not monotone at {} ⊑ {}", c.show(x), c.show(&z)));
            }
            let joined = a.join(&ax, &gc.alpha(y));
            if joined != az {
                fail(
                    &mut r.alpha_preserves_joins,
                    format!("α({} ⊔ {}) = {} ≠ {}", c.show(x), c.show(y), a.show(&az), a.show(&joined)),
                );
            }
        }
    }
    for x in &as_ {
        let gx = gc.gamma(x);
        let agx = gc.alpha(&gx);
        if !a.leq(&agx, x) {
            fail(&mut r.adjoint, format!("α(γ({})) = {} ≰ {}", a.show(x), a.show(&agx), a.show(x)));
        }
        if agx != *x {
            fail(&mut r.insertion, format!("α(γ({})) = {}", a.show(x), a.show(&agx)));
        }
        for y in check_partners(&as_, PAIRWISE_LIMIT) {
            let z = a.meet(x, y);
            let gz = gc.gamma(&z);
            if !c.leq(&gz, &gx) {
                fail(&mut r.adjoint, format!("γ is not monotone at {} ≤ {}", a.show(&z), a.show(x)));
            }
            let met = c.meet(&gx, &gc.gamma(y));
            if met != gz {
                fail(
                    &mut r.gamma_preserves_meets,
                    format!("γ({} ⊓ {}) = {} ≠ {}", a.show(x), a.show(y), c.show(&gz), c.show(&met)),
                );
            }
        }
    }
    let ab = gc.alpha(&c.bot());
    if !a.is_bot(&ab) {
        fail(&mut r.alpha_strict, format!("α(⊥) = {}", a.show(&ab)));
    }
    let gt = gc.gamma(&a.top());
    if gt != c.top() {
        fail(&mut r.gamma_costrict, format!("γ(⊤) = {}", c.show(&gt)));
    }
    r.violations = violations;
    r
}

/// A concrete and an abstract system of equal shape, with one connection
/// per equation.
pub struct AbstractedSystem<C: Lattice, A: Lattice> {
    pub concrete: EquationSystem<C>,
    pub abstract_: EquationSystem<A>,
    pub connections: Vec<GaloisConnection<C, A>>,
}

impl<C: Lattice, A: Lattice> AbstractedSystem<C, A> {
    pub fn new(
        concrete: EquationSystem<C>,
        abstract_: EquationSystem<A>,
        connections: Vec<GaloisConnection<C, A>>,
    ) -> Result<Self> {
        let m = concrete.len();
        if abstract_.len() != m || connections.len() != m {
            return Err(Error::InvalidArgument(format!(
                "{m} concrete equations, {} abstract equations, {} connections",
                abstract_.len(),
                connections.len()
            )));
        }
        if concrete.signs() != abstract_.signs() {
            return Err(Error::InvalidArgument(
                "concrete and abstract systems have different fixpoint signs".into(),
            ));
        }
        Ok(AbstractedSystem {
            concrete,
            abstract_,
            connections,
        })
    }

    pub fn len(&self) -> usize {
        self.concrete.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concrete.is_empty()
    }

    pub fn alpha_tuple(&self, cs: &[C::Elem]) -> Vec<A::Elem> {
        cs.iter().zip(&self.connections).map(|(c, g)| g.alpha(c)).collect()
    }

    pub fn gamma_tuple(&self, as_: &[A::Elem]) -> Vec<C::Elem> {
        as_.iter().zip(&self.connections).map(|(a, g)| g.gamma(a)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Abstraction,
    Concretisation,
}

#[derive(Clone, Debug, Serialize)]
pub struct Obligation {
    /// 0-based equation index.
    pub equation: usize,
    pub property: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    /// The condition and every obligation hold.
    pub holds: bool,
    pub condition_holds: bool,
    pub exhaustive: bool,
    pub checked: usize,
    pub witness: Option<String>,
    pub obligations: Vec<Obligation>,
}

/// Tuples to check a condition on: all of `L^m` when small, else samples.
fn tuple_domain<L: Lattice>(lat: &L, m: usize, extra: Vec<L::Elem>) -> (Vec<Vec<L::Elem>>, bool) {
    let (mut elems, all) = check_domain(lat, EXHAUSTIVE_LIMIT);
    if !all {
        elems.extend(extra);
        elems.sort();
        elems.dedup();
    }
    match (elems.len() as u128).checked_pow(m as u32) {
        Some(t) if all && t <= TUPLE_LIMIT as u128 => (tuples(&elems, m), true),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x6162_7374);
            let mut pts: Vec<Vec<L::Elem>> = (0..CHECK_SAMPLES)
                .map(|_| (0..m).map(|_| elems[rng.gen_range(0..elems.len())].clone()).collect())
                .collect();
            // constant tuples cover the diagonal deterministically
            pts.extend(elems.iter().map(|e| vec![e.clone(); m]));
            (pts, false)
        }
    }
}

fn show_tuple<L: Lattice>(lat: &L, xs: &[L::Elem]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| lat.show(x)).collect();
    format!("({})", parts.join(", "))
}

/// Co-strictness or strictness of one map, with (co-)continuity, which
/// holds for every monotone map whose domain is finite.
fn obligation(equation: usize, name: &str, preserves_extreme: bool, domain_finite: bool, dual: bool) -> Vec<Obligation> {
    let (strict, cont) = if dual {
        ("co-strict", "co-continuous")
    } else {
        ("strict", "continuous")
    };
    vec![
        Obligation {
            equation,
            property: format!("{name} {strict}"),
            holds: preserves_extreme,
        },
        Obligation {
            equation,
            property: format!("{name} {cont}"),
            holds: domain_finite,
        },
    ]
}

/// Soundness `f⃗^C ∘ γ⃗× ⊑ γ⃗× ∘ f⃗^A`, checked on abstract tuples, with `γ_i`
/// co-strict and co-continuous at greatest-fixpoint equations. For Galois
/// connections this is equivalent to `α⃗× ∘ f⃗^C ≤ f⃗^A ∘ α⃗×`.
pub fn check_soundness<C: Lattice, A: Lattice>(abs: &AbstractedSystem<C, A>) -> ConditionReport {
    let m = abs.len();
    let (c, a) = (abs.concrete.lattice(), abs.abstract_.lattice());
    let (points, exhaustive) = tuple_domain(a, m, Vec::new());
    let mut witness = None;
    'outer: for xs in &points {
        let gx = abs.gamma_tuple(xs);
        for i in 0..m {
            let lhs = abs.concrete.eval(i, &gx);
            let rhs = abs.connections[i].gamma(&abs.abstract_.eval(i, xs));
            if !c.leq(&lhs, &rhs) {
                witness = Some(format!(
                    "at {}: f^C_{}(γ(x)) = {} ⋢ γ(f^A_{}(x)) = {}",
                    show_tuple(a, xs),
                    i + 1,
                    c.show(&lhs),
                    i + 1,
                    c.show(&rhs)
                ));
                break 'outer;
            }
        }
    }
    let obligations = (0..m)
        .filter(|&i| abs.concrete.sign(i) == Sign::Nu)
        .flat_map(|i| {
            let g = &abs.connections[i];
            obligation(i, &format!("γ_{}", i + 1), g.gamma(&a.top()) == c.top(), a.is_finite(), true)
        })
        .collect();
    finish("f^C ∘ γ ⊑ γ ∘ f^A", witness, exhaustive, points.len(), obligations)
}

/// Completeness conditions: for [`Side::Abstraction`]
/// `f⃗^A ∘ α⃗× ≤ α⃗× ∘ f⃗^C` with `α_i` co-strict and co-continuous at
/// greatest-fixpoint equations; for [`Side::Concretisation`]
/// `γ⃗× ∘ f⃗^A ⊑ f⃗^C ∘ γ⃗×` with `γ_i` strict and continuous at
/// least-fixpoint equations.
pub fn check_completeness<C: Lattice, A: Lattice>(abs: &AbstractedSystem<C, A>, side: Side) -> ConditionReport {
    let m = abs.len();
    let (c, a) = (abs.concrete.lattice(), abs.abstract_.lattice());
    match side {
        Side::Abstraction => {
            let extra = abs.connections[0..m.min(1)]
                .iter()
                .flat_map(|g| check_domain(a, EXHAUSTIVE_LIMIT).0.into_iter().map(|x| g.gamma(&x)).collect::<Vec<_>>())
                .collect();
            let (points, exhaustive) = tuple_domain(c, m, extra);
            let mut witness = None;
            'outer: for xs in &points {
                let ax = abs.alpha_tuple(xs);
                for i in 0..m {
                    let lhs = abs.abstract_.eval(i, &ax);
                    let rhs = abs.connections[i].alpha(&abs.concrete.eval(i, xs));
                    if !a.leq(&lhs, &rhs) {
                        witness = Some(format!(
                            "at {}: f^A_{}(α(x)) = {} ≰ α(f^C_{}(x)) = {}",
                            show_tuple(c, xs),
                            i + 1,
                            a.show(&lhs),
                            i + 1,
                            a.show(&rhs)
                        ));
                        break 'outer;
                    }
                }
            }
            let obligations = (0..m)
                .filter(|&i| abs.concrete.sign(i) == Sign::Nu)
                .flat_map(|i| {
                    let g = &abs.connections[i];
                    obligation(i, &format!("α_{}", i + 1), g.alpha(&c.top()) == a.top(), c.is_finite(), true)
                })
                .collect();
            finish("f^A ∘ α ≤ α ∘ f^C", witness, exhaustive, points.len(), obligations)
        }
        Side::Concretisation => {
            let (points, exhaustive) = tuple_domain(a, m, Vec::new());
            let mut witness = None;
            'outer2: for xs in &points {
                let gx = abs.gamma_tuple(xs);
                for i in 0..m {
                    let lhs = abs.connections[i].gamma(&abs.abstract_.eval(i, xs));
                    let rhs = abs.concrete.eval(i, &gx);
                    if !c.leq(&lhs, &rhs) {
                        witness = Some(format!(
                            "at {}: γ(f^A_{}(x)) = {} ⋢ f^C_{}(γ(x)) = {}",
                            show_tuple(a, xs),
                            i + 1,
                            c.show(&lhs),
                            i + 1,
                            c.show(&rhs)
                        ));
                        break 'outer2;
                    }
                }
            }
            let obligations = (0..m)
                .filter(|&i| abs.concrete.sign(i) == Sign::Mu)
                .flat_map(|i| {
                    let g = &abs.connections[i];
                    obligation(i, &format!("γ_{}", i + 1), c.is_bot(&g.gamma(&a.bot())), a.is_finite(), false)
                })
                .collect();
            finish("γ ∘ f^A ⊑ f^C ∘ γ", witness, exhaustive, points.len(), obligations)
        }
    }
}

fn finish(
    condition: &str,
    witness: Option<String>,
    exhaustive: bool,
    checked: usize,
    obligations: Vec<Obligation>,
) -> ConditionReport {
    let condition_holds = witness.is_none();
    ConditionReport {
        condition: condition.to_string(),
        holds: condition_holds && obligations.iter().all(|o| o.holds),
        condition_holds,
        exhaustive,
        checked,
        witness,
        obligations,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OperatorReport {
    /// `α(f^C(x⃗)) ≤ f^A(α(x⃗))` everywhere checked.
    pub sound: bool,
    /// `f^A(α(x⃗)) ≤ α(f^C(x⃗))` everywhere checked.
    pub complete: bool,
    pub exhaustive: bool,
    pub sound_witness: Option<String>,
    /// A point where `α(f^C(x⃗)) < f^A(α(x⃗))` strictly.
    pub incompleteness_witness: Option<String>,
}

/// Compares one concrete operator with an abstract counterpart through a
/// single connection used on every argument.
pub fn check_operator<C: Lattice, A: Lattice>(
    gc: &GaloisConnection<C, A>,
    fc: &MonotoneFunction<C::Elem>,
    fa: &MonotoneFunction<A::Elem>,
) -> Result<OperatorReport> {
    if fc.arity() != fa.arity() {
        return Err(Error::ArityMismatch {
            name: fa.description().to_string(),
            expected: fc.arity(),
            found: fa.arity(),
        });
    }
    let (c, a) = (&*gc.concrete, &*gc.abstract_);
    let k = fc.arity();
    let extra: Vec<C::Elem> = check_domain(a, EXHAUSTIVE_LIMIT).0.iter().map(|x| gc.gamma(x)).collect();
    let (points, exhaustive) = tuple_domain(c, k, extra);
    let mut report = OperatorReport {
        sound: true,
        complete: true,
        exhaustive,
        sound_witness: None,
        incompleteness_witness: None,
    };
    for xs in &points {
        let lhs = gc.alpha(&fc.apply(xs));
        let ax: Vec<A::Elem> = xs.iter().map(|x| gc.alpha(x)).collect();
        let rhs = fa.apply(&ax);
        if report.sound && !a.leq(&lhs, &rhs) {
            report.sound = false;
            report.sound_witness = Some(format!(
                "at {}: α(f(x)) = {} ≰ f#(α(x)) = {}",
                show_tuple(c, xs),
                a.show(&lhs),
                a.show(&rhs)
            ));
        }
        if report.complete && !a.leq(&rhs, &lhs) {
            report.complete = false;
            report.incompleteness_witness = Some(format!(
                "at {}: α(f(x)) = {} but f#(α(x)) = {}",
                show_tuple(c, xs),
                a.show(&lhs),
                a.show(&rhs)
            ));
        }
    }
    Ok(report)
}

/// The best abstraction `f⃗^# = α⃗× ∘ f⃗ ∘ γ⃗×` of a concrete system.
pub fn best_abstraction<C, A>(
    concrete: &EquationSystem<C>,
    connections: Vec<GaloisConnection<C, A>>,
) -> Result<AbstractedSystem<C, A>>
where
    C: Lattice + 'static,
    A: Lattice + 'static,
{
    let m = concrete.len();
    if connections.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} connections for {m} equations",
            connections.len()
        )));
    }
    let Some(first) = connections.first() else {
        return Err(Error::InvalidArgument("the system has no equations".into()));
    };
    let alat = Arc::clone(&first.abstract_);
    if !alat.is_finite() {
        return Err(Error::Unsupported("best abstractions need a finite abstract lattice".into()));
    }
    let gs: Arc<Vec<GaloisConnection<C, A>>> = Arc::new(connections.clone());
    let equations = concrete
        .equations()
        .iter()
        .enumerate()
        .map(|(i, eq)| {
            let f = eq.function.clone();
            let gs = Arc::clone(&gs);
            Equation::new(
                eq.name.clone(),
                eq.sign,
                MonotoneFunction::new(m, format!("α ∘ ({}) ∘ γ", f.description()), move |xs: &[A::Elem]| {
                    let gx: Vec<C::Elem> = xs.iter().zip(gs.iter()).map(|(x, g)| g.gamma(x)).collect();
                    gs[i].alpha(&f.apply(&gx))
                }),
            )
        })
        .collect();
    let abstract_ = EquationSystem::unchecked(alat, equations)?;
    AbstractedSystem::new(concrete.clone(), abstract_, connections)
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionReport {
    pub concrete: Vec<String>,
    pub abstract_: Vec<String>,
    pub alpha_of_concrete: Vec<String>,
    pub soundness: ConditionReport,
    pub completeness: ConditionReport,
    /// `α⃗×(s⃗^C) ≤ s⃗^A`.
    pub sound_bound: bool,
    /// `s⃗^A ≤ α⃗×(s⃗^C)`.
    pub complete_bound: bool,
    /// Every bound implied by a passing condition holds.
    pub consistent: bool,
}

/// Relates given solutions of the two systems to the conditions that
/// hold for them.
pub fn verify_solution_relation<C: Lattice, A: Lattice>(
    abs: &AbstractedSystem<C, A>,
    concrete_solution: &[C::Elem],
    abstract_solution: &[A::Elem],
) -> SolutionReport {
    let (c, a) = (abs.concrete.lattice(), abs.abstract_.lattice());
    let alpha_sc = abs.alpha_tuple(concrete_solution);
    let sound_bound = alpha_sc.iter().zip(abstract_solution).all(|(x, y)| a.leq(x, y));
    let complete_bound = alpha_sc.iter().zip(abstract_solution).all(|(x, y)| a.leq(y, x));
    let soundness = check_soundness(abs);
    let completeness = check_completeness(abs, Side::Abstraction);
    let consistent = (!soundness.holds || sound_bound) && (!completeness.holds || complete_bound);
    SolutionReport {
        concrete: concrete_solution.iter().map(|x| c.show(x)).collect(),
        abstract_: abstract_solution.iter().map(|x| a.show(x)).collect(),
        alpha_of_concrete: alpha_sc.iter().map(|x| a.show(x)).collect(),
        soundness,
        completeness,
        sound_bound,
        complete_bound,
        consistent,
    }
}

/// [`verify_solution_relation`] with both systems solved globally.
pub fn verify_solved<C: Lattice, A: Lattice>(abs: &AbstractedSystem<C, A>) -> Result<SolutionReport> {
    let sc = crate::eqsys::solve(&abs.concrete)?;
    let sa = crate::eqsys::solve(&abs.abstract_)?;
    Ok(verify_solution_relation(abs, &sc, &sa))
}
