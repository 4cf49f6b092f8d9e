//! Up-to functions: compatibility checks, least closures, the extended
//! system `E⟨u⃗⟩` and the up-to variant of the local algorithm.
//!
//! Properties are checked exhaustively when the lattice is small enough to
//! enumerate and on seeded samples otherwise; reports say which.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eqsys::{kleene, Equation, EquationSystem, MonotoneFunction, Sign};
use crate::error::{Error, Result};
use crate::game::{minimal_subsets, move_key, Position, PowersetGame};
use crate::lattice::{check_domain, check_partners, tuples, BasisSubset, Lattice, Powerset, CHECK_SAMPLES};
use crate::localsolver::{
    CheckOptions, CheckResult, Counter, HookMoves, LocalSolver, MoveHook, SolverView,
};
use crate::game::Player;

/// Unary checks enumerate lattices up to this many elements.
pub const EXHAUSTIVE_LIMIT: usize = 1 << 16;
/// Pairwise checks enumerate lattices up to this many elements.
pub const PAIRWISE_LIMIT: usize = 256;
/// Tuple checks enumerate `L^m` up to this many tuples.
pub const TUPLE_LIMIT: usize = 1 << 16;
const SAMPLE_SEED: u64 = 0x7570_746f;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct UpToFlags {
    pub extensive: bool,
    pub idempotent: bool,
    pub continuous: bool,
    pub strict: bool,
}

impl UpToFlags {
    pub const NONE: UpToFlags = UpToFlags {
        extensive: false,
        idempotent: false,
        continuous: false,
        strict: false,
    };
    pub const ALL: UpToFlags = UpToFlags {
        extensive: true,
        idempotent: true,
        continuous: true,
        strict: true,
    };
    pub const CONTINUOUS_STRICT: UpToFlags = UpToFlags {
        extensive: false,
        idempotent: false,
        continuous: true,
        strict: true,
    };

    fn entries(&self) -> [(&'static str, bool); 4] {
        [
            ("extensive", self.extensive),
            ("idempotent", self.idempotent),
            ("continuous", self.continuous),
            ("strict", self.strict),
        ]
    }
}

impl fmt::Display for UpToFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let on: Vec<&str> = self.entries().iter().filter(|e| e.1).map(|e| e.0).collect();
        if on.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&on.join(", "))
        }
    }
}

/// A monotone function `L → L` used to enhance fixpoint checks.
pub struct UpToFunction<L: Lattice> {
    lattice: Arc<L>,
    name: String,
    flags: UpToFlags,
    eval: Arc<dyn Fn(&L::Elem) -> L::Elem + Send + Sync>,
}

impl<L: Lattice> Clone for UpToFunction<L> {
    fn clone(&self) -> Self {
        UpToFunction {
            lattice: Arc::clone(&self.lattice),
            name: self.name.clone(),
            flags: self.flags,
            eval: Arc::clone(&self.eval),
        }
    }
}

impl<L: Lattice> fmt::Debug for UpToFunction<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.name, self.flags)
    }
}

impl<L: Lattice> UpToFunction<L> {
    /// Builds an up-to function, verifying monotonicity and every declared
    /// flag. The stored flags are all properties that were found to hold.
    pub fn new(
        lattice: Arc<L>,
        name: impl Into<String>,
        declared: UpToFlags,
        eval: impl Fn(&L::Elem) -> L::Elem + Send + Sync + 'static,
    ) -> Result<Self> {
        let mut u = UpToFunction {
            lattice,
            name: name.into(),
            flags: UpToFlags::NONE,
            eval: Arc::new(eval),
        };
        let report = verify_flags(&u);
        if let Some(w) = &report.monotone_witness {
            return Err(Error::NotMonotone {
                name: u.name.clone(),
                witness: w.clone(),
            });
        }
        for ((prop, want), (_, have)) in declared.entries().iter().zip(report.holds.entries()) {
            if *want && !have {
                let witness = report
                    .witnesses
                    .iter()
                    .find(|(p, _)| p == prop)
                    .map_or_else(|| "not verifiable on this lattice".to_string(), |(_, w)| w.clone());
                return Err(Error::UpToProperty {
                    name: u.name.clone(),
                    property: prop.to_string(),
                    witness,
                });
            }
        }
        u.flags = report.holds;
        Ok(u)
    }

    pub fn identity(lattice: Arc<L>) -> Self {
        UpToFunction {
            lattice,
            name: "id".into(),
            flags: UpToFlags::ALL,
            eval: Arc::new(|x: &L::Elem| x.clone()),
        }
    }

    /// The constant-⊥ function, compatible with every system.
    pub fn bottom(lattice: Arc<L>) -> Self
    where
        L: 'static,
    {
        let l = Arc::clone(&lattice);
        UpToFunction {
            lattice,
            name: "⊥".into(),
            flags: UpToFlags::CONTINUOUS_STRICT,
            eval: Arc::new(move |_: &L::Elem| l.bot()),
        }
    }

    pub fn apply(&self, x: &L::Elem) -> L::Elem {
        (self.eval)(x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> UpToFlags {
        self.flags
    }

    pub fn lattice(&self) -> &Arc<L> {
        &self.lattice
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlagReport {
    pub holds: UpToFlags,
    pub monotone_witness: Option<String>,
    /// Whether every element was checked.
    pub exhaustive: bool,
    /// Failed properties with a counterexample each.
    pub witnesses: Vec<(String, String)>,
}

/// Checks monotonicity and the four flags of `u`.
///
/// On a finite lattice every directed set has a greatest element, so
/// continuity coincides with monotonicity there. On other lattices it is
/// reported as not holding, since it cannot be checked.
pub fn verify_flags<L: Lattice>(u: &UpToFunction<L>) -> FlagReport {
    let lat = &*u.lattice;
    let (dom, exhaustive) = check_domain(lat, EXHAUSTIVE_LIMIT);
    let show = |e: &L::Elem| lat.show(e);
    let mut witnesses = Vec::new();

    let mut monotone_witness = None;
    let partners = check_partners(&dom, PAIRWISE_LIMIT);
    'outer: for x in &dom {
        let ux = u.apply(x);
        for y in &partners {
            let z = lat.join(x, y);
            let uz = u.apply(&z);
            if !lat.leq(&ux, &uz) {
                monotone_witness = Some(format!(
                    "{} ⊑ {} but u gives {} ⋢ {}",
                    show(x),
                    show(&z),
                    show(&ux),
                    show(&uz)
                ));
                break 'outer;
            }
        }
    }

    let mut extensive = true;
    let mut idempotent = true;
    for x in &dom {
        let ux = u.apply(x);
        if extensive && !lat.leq(x, &ux) {
            extensive = false;
            witnesses.push(("extensive".into(), format!("{} ⋢ u({}) = {}", show(x), show(x), show(&ux))));
        }
        if idempotent {
            let uux = u.apply(&ux);
            if uux != ux {
                idempotent = false;
                witnesses.push((
                    "idempotent".into(),
                    format!("u({}) = {} but u(u({})) = {}", show(x), show(&ux), show(x), show(&uux)),
                ));
            }
        }
    }
    let ubot = u.apply(&lat.bot());
    let strict = lat.is_bot(&ubot);
    if !strict {
        witnesses.push(("strict".into(), format!("u(⊥) = {}", show(&ubot))));
    }
    let continuous = lat.is_finite() && monotone_witness.is_none();
    if !lat.is_finite() {
        witnesses.push((
            "continuous".into(),
            "continuity is only checked on finite lattices".into(),
        ));
    }
    FlagReport {
        holds: UpToFlags {
            extensive,
            idempotent,
            continuous,
            strict,
        },
        monotone_witness,
        exhaustive,
        witnesses,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatReport {
    pub compatible: bool,
    pub exhaustive: bool,
    pub checked: usize,
    pub witness: Option<String>,
}

/// Checks `u ∘ f ⊑ f ∘ u` for a unary `f`.
pub fn check_compatibility<L: Lattice>(
    u: &UpToFunction<L>,
    f: &MonotoneFunction<L::Elem>,
) -> Result<CompatReport> {
    if f.arity() != 1 {
        return Err(Error::ArityMismatch {
            name: f.description().to_string(),
            expected: 1,
            found: f.arity(),
        });
    }
    let lat = &*u.lattice;
    let (dom, exhaustive) = check_domain(lat, EXHAUSTIVE_LIMIT);
    for x in &dom {
        let lhs = u.apply(&f.apply(std::slice::from_ref(x)));
        let rhs = f.apply(&[u.apply(x)]);
        if !lat.leq(&lhs, &rhs) {
            return Ok(CompatReport {
                compatible: false,
                exhaustive,
                checked: dom.len(),
                witness: Some(format!(
                    "at {}: u(f(x)) = {} ⋢ f(u(x)) = {}",
                    lat.show(x),
                    lat.show(&lhs),
                    lat.show(&rhs)
                )),
            });
        }
    }
    Ok(CompatReport {
        compatible: true,
        exhaustive,
        checked: dom.len(),
        witness: None,
    })
}

/// Checks `u⃗× ∘ f⃗ ⊑ f⃗ ∘ u⃗×` componentwise, and that `u_i` is continuous
/// and strict wherever equation `i` is a least fixpoint.
pub fn check_system_compatibility<L: Lattice>(
    sys: &EquationSystem<L>,
    us: &[UpToFunction<L>],
) -> Result<CompatReport> {
    let m = sys.len();
    if us.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} up-to functions for {m} equations",
            us.len()
        )));
    }
    let lat = sys.lattice();
    let fail = |exhaustive, checked, w: String| CompatReport {
        compatible: false,
        exhaustive,
        checked,
        witness: Some(w),
    };
    for (i, u) in us.iter().enumerate() {
        if sys.sign(i) == Sign::Mu && !(u.flags.continuous && u.flags.strict) {
            return Ok(fail(
                true,
                0,
                format!(
                    "{} is used at least-fixpoint equation {} but is not continuous and strict",
                    u.name,
                    sys.equations()[i].name
                ),
            ));
        }
    }
    let (elems, small) = check_domain(lat, EXHAUSTIVE_LIMIT);
    let total = (elems.len() as u128).checked_pow(m as u32);
    let (points, exhaustive) = match total {
        Some(t) if small && t <= TUPLE_LIMIT as u128 => (tuples(&elems, m), true),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED ^ 2);
            let pts = (0..CHECK_SAMPLES)
                .map(|_| (0..m).map(|_| elems[rng.gen_range(0..elems.len())].clone()).collect())
                .collect();
            (pts, false)
        }
    };
    for x in &points {
        let ux: Vec<L::Elem> = x.iter().zip(us).map(|(xi, u)| u.apply(xi)).collect();
        for (i, u) in us.iter().enumerate() {
            let lhs = u.apply(&sys.eval(i, x));
            let rhs = sys.eval(i, &ux);
            if !lat.leq(&lhs, &rhs) {
                let shown: Vec<String> = x.iter().map(|e| lat.show(e)).collect();
                return Ok(fail(
                    exhaustive,
                    points.len(),
                    format!(
                        "at ({}): {}(f_{}(x)) = {} ⋢ f_{}(u(x)) = {}",
                        shown.join(", "),
                        u.name,
                        i + 1,
                        lat.show(&lhs),
                        i + 1,
                        lat.show(&rhs)
                    ),
                ));
            }
        }
    }
    Ok(CompatReport {
        compatible: true,
        exhaustive,
        checked: points.len(),
        witness: None,
    })
}

/// A tuple of up-to functions verified compatible with a system.
#[derive(Clone, Debug)]
pub struct CompatibleTuple<L: Lattice> {
    us: Vec<UpToFunction<L>>,
    exhaustive: bool,
}

impl<L: Lattice> CompatibleTuple<L> {
    pub fn new(sys: &EquationSystem<L>, us: Vec<UpToFunction<L>>) -> Result<Self> {
        let report = check_system_compatibility(sys, &us)?;
        if !report.compatible {
            return Err(Error::Incompatible(report.witness.unwrap_or_default()));
        }
        Ok(CompatibleTuple {
            us,
            exhaustive: report.exhaustive,
        })
    }

    pub fn identities(sys: &EquationSystem<L>) -> Self {
        CompatibleTuple {
            us: (0..sys.len())
                .map(|_| UpToFunction::identity(Arc::clone(sys.lattice_arc())))
                .collect(),
            exhaustive: true,
        }
    }

    pub fn functions(&self) -> &[UpToFunction<L>] {
        &self.us
    }

    /// Whether compatibility was verified on every tuple.
    pub fn exhaustive(&self) -> bool {
        self.exhaustive
    }
}

/// The least closure above `u`: `ū(x) = μy. u(y) ⊔ x`.
pub fn least_closure<L>(u: &UpToFunction<L>) -> Result<UpToFunction<L>>
where
    L: Lattice + 'static,
{
    if !u.lattice.is_finite() {
        return Err(Error::Unsupported("least closures need a finite lattice".into()));
    }
    let lat = Arc::clone(&u.lattice);
    let inner = u.clone();
    let l = Arc::clone(&lat);
    let closure = UpToFunction::new(
        lat,
        format!("closure({})", u.name),
        UpToFlags {
            extensive: true,
            idempotent: true,
            ..UpToFlags::NONE
        },
        move |x: &L::Elem| {
            kleene(&*l, |y| l.join(&inner.apply(y), x), Sign::Mu, None)
                .expect("finite lattices need no iteration budget")
        },
    )?;
    let (dom, _) = check_domain(&*closure.lattice, EXHAUSTIVE_LIMIT);
    for x in &dom {
        if !closure.lattice.leq(&u.apply(x), &closure.apply(x)) {
            return Err(Error::UpToProperty {
                name: closure.name.clone(),
                property: "dominates u".into(),
                witness: closure.lattice.show(x),
            });
        }
    }
    Ok(closure)
}

/// The system `E⟨u⃗⟩`: `y_i =μ u_i(y_i) ⊔ x_i` for every `i`, followed by
/// `x_i =η_i f_i(y⃗)`. Equation `i` of `E` becomes equation `m + i`.
pub fn transform_system<L>(sys: &EquationSystem<L>, tuple: &CompatibleTuple<L>) -> Result<EquationSystem<L>>
where
    L: Lattice + 'static,
{
    let m = sys.len();
    if tuple.us.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} up-to functions for {m} equations",
            tuple.us.len()
        )));
    }
    let lat = Arc::clone(sys.lattice_arc());
    let mut equations = Vec::with_capacity(2 * m);
    for (i, u) in tuple.us.iter().enumerate() {
        let (u, l) = (u.clone(), Arc::clone(&lat));
        let name = &sys.equations()[i].name;
        equations.push(Equation::new(
            format!("y{}", i + 1),
            Sign::Mu,
            MonotoneFunction::new(
                2 * m,
                format!("{}(y{}) ⊔ {name}", u.name, i + 1),
                move |v: &[L::Elem]| l.join(&u.apply(&v[i]), &v[m + i]),
            ),
        ));
    }
    for eq in sys.equations() {
        let f = eq.function.clone();
        equations.push(Equation::new(
            eq.name.clone(),
            eq.sign,
            MonotoneFunction::new(
                2 * m,
                format!("{}[y/x]", f.description()),
                move |v: &[L::Elem]| f.apply(&v[..m]),
            ),
        ));
    }
    EquationSystem::unchecked(lat, equations)
}

/// Restricts ∃-moves at `y_i` positions to a jump `X_i = {b}` and to sets
/// `Y_i` whose positions are immediately settled by a decision or an
/// assumption. The latter come first.
struct UpToHook<'a, L: Lattice> {
    m: usize,
    us: &'a [UpToFunction<L>],
}

impl<L: Lattice> MoveHook<L> for UpToHook<'_, L> {
    fn exists_moves(
        &self,
        game: &mut PowersetGame<'_, L>,
        b: usize,
        i: usize,
        k: &Counter,
        view: &SolverView<'_>,
    ) -> Result<Option<HookMoves>> {
        let m = self.m;
        if i >= m {
            return Ok(None);
        }
        let lat = game.system().lattice();
        let basis = lat.basis()?;
        let next = k.next(i + 1);
        let settled = |b2: usize| {
            game.lookup(&Position::Exists { b: b2, i }).is_some_and(|id| {
                view.has_usable_decision(Player::Exists, id, &next)
                    || view
                        .playlist_counter(id)
                        .is_some_and(|k2| k2.lt(&next, Player::Exists, view.signs()))
            })
        };
        let candidates: Vec<usize> = (0..basis.len()).filter(|&b2| b2 != b && settled(b2)).collect();
        let u = &self.us[i];
        let target = &basis[b];
        let covers = |items: &[usize]| -> Result<bool> {
            let joined = lat.join_all(items.iter().map(|&t| &basis[candidates[t]]));
            Ok(lat.leq(target, &u.apply(&joined)))
        };
        let mut found = minimal_subsets(
            candidates.len(),
            covers,
            game.budget(),
            &format!("up-to moves at ({b},{})", i + 1),
        )?;
        found.sort();
        found.dedup();
        let minimal: Vec<&Vec<usize>> = found
            .iter()
            .filter(|s| !found.iter().any(|o| o != *s && o.iter().all(|x| s.contains(x))))
            .collect();
        let mut enhanced: Vec<Vec<BasisSubset>> = minimal
            .into_iter()
            .map(|s| {
                let mut xs = vec![BasisSubset::empty(); 2 * m];
                xs[i] = s.iter().map(|&t| candidates[t]).collect();
                xs
            })
            .collect();
        enhanced.sort_by_cached_key(|xs| move_key(xs));
        let n = enhanced.len();
        let mut jump = vec![BasisSubset::empty(); 2 * m];
        jump[m + i] = BasisSubset::singleton(b);
        let moves = enhanced
            .into_iter()
            .chain(std::iter::once(jump))
            .map(Position::Forall)
            .collect();
        Ok(Some(HookMoves { moves, enhanced: n }))
    }

    fn is_jump(&self, pos: &Position) -> bool {
        match pos {
            Position::Forall(xs) => {
                xs[..self.m].iter().all(BasisSubset::is_empty) && xs[self.m..].iter().any(|x| !x.is_empty())
            }
            Position::Exists { .. } => false,
        }
    }
}

/// Decides `b ⊑ sol(E)_i` by the local algorithm on `E⟨u⃗⟩` from the
/// position of `x_i`, with up-to moves at the `y` positions.
pub fn up_to_check<L>(
    sys: &EquationSystem<L>,
    tuple: &CompatibleTuple<L>,
    b: usize,
    i: usize,
    opts: &CheckOptions,
) -> Result<CheckResult>
where
    L: Lattice + 'static,
{
    let m = sys.len();
    if i >= m {
        return Err(Error::IndexOutOfRange { index: i, len: m });
    }
    let ext = transform_system(sys, tuple)?;
    let hook = UpToHook { m, us: &tuple.us };
    LocalSolver::new(&ext, opts.clone())?
        .with_hook(&hook)
        .run(Position::Exists { b, i: m + i })
}

fn relation_states(lat: &Powerset) -> Result<usize> {
    lat.relation_states()
        .map(<[String]>::len)
        .ok_or_else(|| Error::InvalidArgument("expected a relation lattice".into()))
}

/// `u_tr(R) = R ∘ R` on a relation lattice.
pub fn u_tr(lat: Arc<Powerset>) -> Result<UpToFunction<Powerset>> {
    let n = relation_states(&lat)?;
    let l = Arc::clone(&lat);
    UpToFunction::new(lat, "u_tr", UpToFlags::CONTINUOUS_STRICT, move |r| {
        let mut out = l.empty_set();
        for x in 0..n {
            for y in 0..n {
                if r.contains(l.pair(x, y)) {
                    for z in 0..n {
                        if r.contains(l.pair(y, z)) {
                            out.insert(l.pair(x, z));
                        }
                    }
                }
            }
        }
        out
    })
}

fn upward_image(
    lat: Arc<Powerset>,
    name: &str,
    pairs: &[(usize, usize)],
    declared: UpToFlags,
) -> Result<UpToFunction<Powerset>> {
    let n = lat.len();
    if let Some(&(x, y)) = pairs.iter().find(|&&(x, y)| x >= n || y >= n) {
        return Err(Error::InvalidArgument(format!("pair ({x},{y}) outside {n} states")));
    }
    let mut succ = vec![Vec::new(); n];
    for &(x, y) in pairs {
        succ[x].push(y);
    }
    UpToFunction::new(lat, name, declared, move |set| {
        let mut out = set.clone();
        out.clear();
        for x in set.ones() {
            for &y in &succ[x] {
                out.insert(y);
            }
        }
        out
    })
}

/// `u_≾(X) = {s | ∃s' ∈ X. s' ≾ s}` for a preorder given as pairs
/// `(s', s)`.
pub fn u_sim(lat: Arc<Powerset>, preorder: &[(usize, usize)]) -> Result<UpToFunction<Powerset>> {
    upward_image(lat, "u_sim", preorder, UpToFlags::ALL)
}

/// `u_∼(X) = {s | ∃s' ∈ X. s ∼ s'}` for an equivalence given as pairs.
pub fn u_bisim(lat: Arc<Powerset>, equivalence: &[(usize, usize)]) -> Result<UpToFunction<Powerset>> {
    let sym: Vec<(usize, usize)> = equivalence
        .iter()
        .flat_map(|&(x, y)| [(x, y), (y, x)])
        .collect();
    upward_image(lat, "u_bisim", &sym, UpToFlags::ALL)
}
