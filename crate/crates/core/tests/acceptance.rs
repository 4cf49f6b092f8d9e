//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::Signed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use fixgame::abstraction::{best_abstraction, check_operator, check_soundness, grid_connection, AbstractedSystem};
use fixgame::apps::bisim::{bisimilarity, similarity};
use fixgame::apps::lukas::{evaluate, Mode, Term};
use fixgame::apps::mucalc::{model_check, to_system, Engine, Formula, McOptions, McUpTo};
use fixgame::apps::nfa::{language_equiv, Nfa};
use fixgame::apps::pndt::Pndt;
use fixgame::apps::system::SystemFile;
use fixgame::apps::ts::TransitionSystem;
use fixgame::eqsys::{solve, Equation, EquationSystem, MonotoneFunction, Sign};
use fixgame::game::Player;
use fixgame::lattice::{tuple_leq, Grid, Lattice, RationalInterval};
use fixgame::localsolver::{check, CheckOptions, Counter};
use fixgame::random::{random_compatible_tuple, random_connection, random_instance, random_lattice, random_system, rng};
use fixgame::upto::{transform_system, u_bisim, up_to_check, CompatibleTuple};

const FIG3A: &str = include_str!("../../../data/fig3a.ts");
const FIG3C: &str = include_str!("../../../data/fig3c.sys");
const FIG4A: &str = include_str!("../../../data/fig4a.pndt");
const EX36: &str = include_str!("../../../data/ex36.term");
const PHI: &str = include_str!("../../../data/phi.term");
const PHI_PRIME: &str = include_str!("../../../data/phi_prime.term");
const UNION_NFA: &str = include_str!("../../../data/union.nfa");
const GOLDEN: &str = include_str!("golden/fig3c_a_x2.trace.json");
const MU_PHI: &str = "mu x2. ((nu x1. (p & [] x1)) | <> x2)";

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn parse_q(s: &str) -> Result<BigRational, String> {
    s.parse().map_err(e2s)
}

fn within(x: &BigRational, target: &BigRational, tol: &BigRational) -> bool {
    (x - target).abs() <= *tol
}

fn timed(limit: Duration, start: Instant) -> Result<String, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))?;
    Ok(format!("{:.0?}", t))
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let sys = SystemFile::parse(FIG3C).map_err(e2s)?.powerset_system().map_err(e2s)?;
    let sol = solve(&sys).map_err(e2s)?;
    let lat = sys.lattice();
    let shown: Vec<String> = sol.iter().map(|s| lat.show(s)).collect();
    ensure(shown == ["{b,d,e}", "{a,b,d,e}"], || format!("solution {shown:?}"))?;
    let ts = TransitionSystem::parse(FIG3A).map_err(e2s)?;
    let phi = Formula::parse(MU_PHI).map_err(e2s)?;
    let expected = ["a", "b", "d", "e"];
    for (s, name) in ts.states().iter().enumerate() {
        for engine in [Engine::Global, Engine::Local] {
            let opts = McOptions { engine, ..McOptions::default() };
            let r = model_check(&ts, &Default::default(), &phi, s, &opts).map_err(e2s)?;
            ensure(r.target == "x2", || format!("target {}", r.target))?;
            ensure(r.holds == expected.contains(&name.as_str()), || format!("{engine:?} verdict at {name}"))?;
        }
    }
    let t = timed(Duration::from_secs(1), start)?;
    Ok(format!("x1={}, x2={}, a,b,d,e hold and c fails under both engines, {t}", shown[0], shown[1]))
}

fn criterion2() -> Outcome {
    let sys = SystemFile::parse(FIG3C).map_err(e2s)?.powerset_system().map_err(e2s)?;
    let opts = CheckOptions {
        trace: true,
        validate: true,
        ..CheckOptions::default()
    };
    let r = check(&sys, 0, 1, &opts).map_err(e2s)?;
    ensure(r.winner == Player::Exists, || "∀ wins (a,2)".into())?;
    ensure(r.violations.is_empty(), || format!("{:?}", r.violations))?;
    let trace = r.trace.ok_or("no trace")?;
    let assumptions = trace.assumptions();
    for s in ["(d,1)", "(e,1)"] {
        let a = (Player::Exists, s.to_string(), Counter(vec![1, 2]));
        ensure(assumptions.contains(&a), || format!("no assumption ({s},(1,2)) in {assumptions:?}"))?;
    }
    ensure(trace.to_json() + "\n" == GOLDEN, || "trace differs from the golden file".into())?;
    Ok(format!("∃ wins, assumptions ((d,1),(1,2)) and ((e,1),(1,2)), {} events match the golden trace", trace.events.len()))
}

/// Reflexive-transitive closure by Warshall's algorithm.
fn rt_closure(n: usize, pairs: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let mut m = vec![vec![false; n]; n];
    for (x, row) in m.iter_mut().enumerate() {
        row[x] = true;
    }
    for &(x, y) in pairs {
        m[x][y] = true;
    }
    for k in 0..n {
        for x in 0..n {
            for y in 0..n {
                if m[x][k] && m[k][y] {
                    m[x][y] = true;
                }
            }
        }
    }
    (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| m[x][y]).collect()
}

fn criterion3() -> Outcome {
    let ts = TransitionSystem::parse(FIG3A).map_err(e2s)?;
    let idx = |s: &str| ts.state_index(s).unwrap();
    let gens: Vec<(usize, usize)> = [("c", "a"), ("a", "b"), ("b", "d"), ("d", "e"), ("e", "b")]
        .iter()
        .map(|(x, y)| (idx(x), idx(y)))
        .collect();
    let expected = rt_closure(ts.len(), &gens);
    let sim = similarity(&ts).map_err(e2s)?;
    ensure(sim.pairs == expected, || format!("similarity {:?}", sim.show_pairs()))?;
    let bis = bisimilarity(&ts).map_err(e2s)?;
    let classes = bis.show_classes();
    let got: BTreeSet<&str> = classes.iter().map(String::as_str).collect();
    let want: BTreeSet<&str> = ["{a}", "{c}", "{b,d,e}"].into_iter().collect();
    ensure(got == want, || format!("bisimilarity classes {classes:?}"))?;
    Ok(format!("similarity has {} pairs as expected, bisimilarity classes {}", expected.len(), classes.join(" ")))
}

fn criterion4() -> Outcome {
    let start = Instant::now();
    let t = Term::parse(EX36.trim()).map_err(e2s)?;
    let mut shown = Vec::new();
    for (n, expected) in [(10, "4/5"), (100, "11/50"), (1000, "201/1000")] {
        let r = evaluate(&t, None, &Mode::Grid(n)).map_err(e2s)?;
        let v = r.value_at("*").ok_or("no value")?;
        ensure(v == expected, || format!("grid {n}: {v}, expected {expected}"))?;
        shown.push(format!("n={n}: {v}"));
    }
    let tol = q(1, 1_000_000);
    let r = evaluate(&t, None, &Mode::Epsilon(tol.clone())).map_err(e2s)?;
    ensure(r.converged, || "ε-iteration did not converge".into())?;
    let v = parse_q(r.value_at("*").ok_or("no value")?)?;
    ensure(within(&v, &q(1, 5), &tol), || format!("ε value {v}"))?;
    let t = timed(Duration::from_secs(5), start)?;
    Ok(format!("{}, ε: {:.9}, {t}", shown.join(", "), r.values[0].decimal))
}

fn criterion5() -> Outcome {
    let pndt = Pndt::parse(FIG4A).map_err(e2s)?;
    let tol = q(1, 1_000_000);
    let mut out = Vec::new();
    for (name, src, exact) in [("φ", PHI, q(1, 2)), ("φ′", PHI_PRIME, q(1, 4))] {
        let t = Term::parse(src.trim()).map_err(e2s)?;
        let r = evaluate(&t, Some(&pndt), &Mode::Epsilon(tol.clone())).map_err(e2s)?;
        let v = parse_q(r.value_at("a").ok_or("no value at a")?)?;
        ensure(r.converged && within(&v, &exact, &tol), || format!("{name}(a) = {v}, expected {exact}"))?;
        out.push(format!("{name}(a) ≈ {:.9}", r.values[0].decimal));
    }
    let t = Term::parse(PHI_PRIME.trim()).map_err(e2s)?;
    for (n, expected) in [(10, "3/10"), (15, "4/15")] {
        let r = evaluate(&t, Some(&pndt), &Mode::Grid(n)).map_err(e2s)?;
        let v = r.value_at("a").ok_or("no value at a")?;
        ensure(v == expected, || format!("φ′ on grid {n}: {v}, expected {expected}"))?;
        out.push(format!("φ′ grid {n}: {v}"));
    }
    Ok(out.join(", "))
}

/// Runs criterion 6 and collects the validation outcome for criterion 10.
struct OracleRun {
    systems: usize,
    checks: usize,
    forgets: usize,
    violations: Vec<String>,
}

fn oracle_run() -> Result<OracleRun, String> {
    let mut r = rng(0x0ac6);
    let opts = CheckOptions {
        validate: true,
        ..CheckOptions::default()
    };
    let mut run = OracleRun {
        systems: 0,
        checks: 0,
        forgets: 0,
        violations: Vec::new(),
    };
    for _ in 0..200 {
        let sys = random_instance(&mut r, 8, 3).map_err(e2s)?;
        let sol = solve(&sys).map_err(e2s)?;
        let lat = sys.lattice();
        let basis = lat.basis().map_err(e2s)?.to_vec();
        for (bi, b) in basis.iter().enumerate() {
            for (i, s) in sol.iter().enumerate() {
                let res = check(&sys, bi, i, &opts).map_err(e2s)?;
                ensure((res.winner == Player::Exists) == lat.leq(b, s), || {
                    format!("mismatch at ({bi},{i}) in {sys:?}")
                })?;
                run.checks += 1;
                run.forgets += res.stats.forgets;
                run.violations.extend(res.violations);
            }
        }
        run.systems += 1;
    }
    Ok(run)
}

fn criterion6(run: &Result<OracleRun, String>, elapsed: Duration) -> Outcome {
    let run = run.as_ref().map_err(Clone::clone)?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} systems, {} checks, zero mismatches, {:.0?}",
        run.systems, run.checks, elapsed
    ))
}

fn criterion7() -> Outcome {
    let mut r = rng(0x0a07);
    let (mut nontrivial, mut checks) = (0, 0);
    let opts = CheckOptions::default();
    for _ in 0..100 {
        let sys = random_instance(&mut r, 8, 3).map_err(e2s)?;
        let (tuple, found) = random_compatible_tuple(&mut r, &sys, 32).map_err(e2s)?;
        nontrivial += usize::from(found);
        let sol = solve(&sys).map_err(e2s)?;
        let ext = transform_system(&sys, &tuple).map_err(e2s)?;
        let ext_sol = solve(&ext).map_err(e2s)?;
        ensure(ext_sol == [sol.clone(), sol.clone()].concat(), || format!("extended solution differs for {sys:?}"))?;
        let nb = sys.lattice().basis().map_err(e2s)?.len();
        for b in 0..nb {
            for i in 0..sys.len() {
                let plain = check(&sys, b, i, &opts).map_err(e2s)?.winner;
                let up = up_to_check(&sys, &tuple, b, i, &opts).map_err(e2s)?.winner;
                ensure(plain == up, || format!("up-to verdict differs at ({b},{i}) in {sys:?}"))?;
                checks += 1;
            }
        }
    }
    ensure(nontrivial >= 50, || format!("only {nontrivial} non-identity tuples"))?;
    // the running example up to bisimilarity
    let ts = TransitionSystem::parse(FIG3A).map_err(e2s)?;
    let phi = Formula::parse(MU_PHI).map_err(e2s)?;
    let sys = to_system(&phi, &ts, &Default::default()).map_err(e2s)?.system;
    let bis = bisimilarity(&ts).map_err(e2s)?;
    let u = u_bisim(Arc::clone(ts.lattice()), &bis.pairs.iter().copied().collect::<Vec<_>>()).map_err(e2s)?;
    let tuple = CompatibleTuple::new(&sys, vec![u.clone(), u]).map_err(e2s)?;
    let up = up_to_check(&sys, &tuple, 0, 1, &opts).map_err(e2s)?;
    let jump = up_to_check(&sys, &CompatibleTuple::identities(&sys), 0, 1, &opts).map_err(e2s)?;
    let plain = check(&sys, 0, 1, &opts).map_err(e2s)?;
    let local = McOptions { engine: Engine::Local, upto: McUpTo::Bisim, ..McOptions::default() };
    ensure(model_check(&ts, &Default::default(), &phi, 0, &local).map_err(e2s)?.holds, || "up-to verdict at a".into())?;
    ensure(up.winner == Player::Exists && plain.winner == Player::Exists, || "verdicts at (a,2)".into())?;
    ensure(jump.stats.base_nodes() == plain.stats.nodes, || "jump-only run does not retrace the plain run".into())?;
    ensure(up.stats.base_nodes() < plain.stats.nodes, || {
        format!("up-to explores {} base nodes, plain {}", up.stats.base_nodes(), plain.stats.nodes)
    })?;
    Ok(format!(
        "{nontrivial}/100 non-identity tuples, {checks} checks agree; running example nodes: up-to {} ({} base), jump-only {} ({} base), plain {}",
        up.stats.nodes,
        up.stats.base_nodes(),
        jump.stats.nodes,
        jump.stats.base_nodes(),
        plain.stats.nodes
    ))
}

fn random_nfa(r: &mut ChaCha8Rng) -> Nfa {
    let n = r.gen_range(1..=6);
    let k = r.gen_range(1..=2);
    let mut trans = Vec::new();
    for s in 0..n {
        for a in 0..k {
            for t in 0..n {
                if r.gen_bool(0.25) {
                    trans.push((s, a, t));
                }
            }
        }
    }
    let finals: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.4)).collect();
    let names = |p: &str, m: usize| (0..m).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    Nfa::new(names("q", n), names("a", k), &trans, &finals).expect("valid NFA")
}

/// Language equivalence by exploring the product of the two subset
/// automata, as bitmasks, from `({q1},{q2})`.
fn product_dfa_oracle(nfa: &Nfa, q1: usize, q2: usize) -> bool {
    let n = nfa.len();
    let step = |m: u32, a: usize| -> u32 {
        (0..n)
            .filter(|&s| m >> s & 1 == 1)
            .flat_map(|s| nfa.post(&nfa.singleton(s), a).ones().collect::<Vec<_>>())
            .fold(0, |acc, t| acc | 1 << t)
    };
    let accepts = |m: u32| (0..n).any(|s| m >> s & 1 == 1 && nfa.is_final(s));
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([(1u32 << q1, 1u32 << q2)]);
    while let Some((x, y)) = queue.pop_front() {
        if !seen.insert((x, y)) {
            continue;
        }
        if accepts(x) != accepts(y) {
            return false;
        }
        for a in 0..nfa.alphabet().len() {
            queue.push_back((step(x, a), step(y, a)));
        }
    }
    true
}

fn criterion8() -> Outcome {
    let mut r = rng(0x0a08);
    let (mut equal, mut strict) = (0, 0);
    for _ in 0..100 {
        let nfa = random_nfa(&mut r);
        let q1 = r.gen_range(0..nfa.len());
        let q2 = r.gen_range(0..nfa.len());
        let expected = product_dfa_oracle(&nfa, q1, q2);
        let plain = language_equiv(&nfa, q1, q2, false).map_err(e2s)?;
        let up = language_equiv(&nfa, q1, q2, true).map_err(e2s)?;
        ensure(plain.equivalent == expected && up.equivalent == expected, || {
            format!("verdict differs from the oracle on {nfa:?} at ({q1},{q2})")
        })?;
        ensure(up.visited <= plain.visited, || "up-to visits more pairs".into())?;
        equal += usize::from(expected);
        strict += usize::from(up.visited < plain.visited);
    }
    let nfa = Nfa::parse(UNION_NFA).map_err(e2s)?;
    let plain = language_equiv(&nfa, 0, 1, false).map_err(e2s)?;
    let up = language_equiv(&nfa, 0, 1, true).map_err(e2s)?;
    ensure(plain.equivalent && up.equivalent && up.visited < plain.visited, || {
        format!("union instance: plain {} up-to {}", plain.visited, up.visited)
    })?;
    Ok(format!(
        "100 NFAs agree with the oracle ({equal} equivalent), strict pruning on {strict} of them; union instance visits {} vs {}",
        up.visited, plain.visited
    ))
}

fn criterion9() -> Outcome {
    let mut r = rng(0x0a09);
    let (mut sound, mut best) = (0, 0);
    for round in 0..100 {
        let c = Arc::new(random_lattice(&mut r, 6));
        let a = Arc::new(random_lattice(&mut r, 5));
        let m = 1 + round % 2;
        let sys_c = random_system(&mut r, &c, m).map_err(e2s)?;
        let gcs = (0..m).map(|_| random_connection(&mut r, &c, &a)).collect::<Result<Vec<_>, _>>().map_err(e2s)?;
        let sc = solve(&sys_c).map_err(e2s)?;
        // an arbitrary abstract system with the same signs
        let sys_a = random_system(&mut r, &a, m).map_err(e2s)?;
        let eqs = sys_a
            .equations()
            .iter()
            .zip(sys_c.signs())
            .map(|(e, s)| Equation::new(e.name.clone(), s, e.function.clone()))
            .collect();
        let sys_a = EquationSystem::unchecked(Arc::clone(&a), eqs).map_err(e2s)?;
        let candidates = [
            AbstractedSystem::new(sys_c.clone(), sys_a, gcs.clone()).map_err(e2s)?,
            best_abstraction(&sys_c, gcs).map_err(e2s)?,
        ];
        for (k, abs) in candidates.iter().enumerate() {
            let report = check_soundness(abs);
            if k == 1 {
                ensure(report.holds, || format!("best abstraction unsound: {:?}", report.witness))?;
                best += 1;
            }
            if report.holds {
                let sa = solve(&abs.abstract_).map_err(e2s)?;
                let alpha: Vec<usize> = sc.iter().zip(&abs.connections).map(|(x, g)| g.alpha(x)).collect();
                ensure(tuple_leq(&*a, &alpha, &sa), || format!("α(s^C) ≰ s^A for {:?}", abs.concrete))?;
                sound += 1;
            }
        }
    }
    let gc = grid_connection(10).map_err(e2s)?;
    let oplus = MonotoneFunction::new(2, "⊕", |x: &[BigRational]| RationalInterval::clamp(&x[0] + &x[1]));
    let g = Grid::new(10).map_err(e2s)?;
    let grid_oplus = MonotoneFunction::new(2, "⊕", move |x: &[u32]| (x[0] + x[1]).min(g.resolution()));
    let report = check_operator(&gc, &oplus, &grid_oplus).map_err(e2s)?;
    ensure(report.sound && !report.complete, || format!("⊕ on the grid: {report:?}"))?;
    let witness = report.incompleteness_witness.ok_or("no witness")?;
    Ok(format!(
        "{sound} sound abstractions bound the solution, {best} best abstractions sound; ⊕ witness {witness}"
    ))
}

fn criterion10(run: &Result<OracleRun, String>) -> Outcome {
    let mut r = rng(0x0a10);
    let mut checked = 0;
    for _ in 0..10_000 {
        let m = r.gen_range(1..=5);
        let signs: Vec<Sign> = (0..m).map(|_| if r.gen_bool(0.5) { Sign::Nu } else { Sign::Mu }).collect();
        let a = Counter((0..m).map(|_| r.gen_range(0..4)).collect());
        let b = Counter((0..m).map(|_| r.gen_range(0..4)).collect());
        let i = r.gen_range(0..=m);
        for p in [Player::Exists, Player::Forall] {
            ensure(!a.lt(&a, p, &signs), || format!("{a} < {a}"))?;
            let (ab, ba) = (a.lt(&b, p, &signs), b.lt(&a, p, &signs));
            ensure(!(ab && ba) && (ab || ba) == (a != b), || format!("order on {a}, {b} under {signs:?}"))?;
            if a.le(&b, p, &signs) {
                ensure(a.next(i).le(&b.next(i), p, &signs), || format!("next({a},{i}) vs next({b},{i})"))?;
            }
        }
        ensure(a.lt(&b, Player::Forall, &signs) == b.lt(&a, Player::Exists, &signs), || "reversal".into())?;
        // next resets the components below i, bumps i and keeps the rest
        let n = a.next(i);
        for j in 0..m {
            let expect = if i == 0 || j + 1 > i {
                a.0[j]
            } else if j + 1 == i {
                a.0[j] + 1
            } else {
                0
            };
            ensure(n.0[j] == expect, || format!("next({a},{i}) = {n}"))?;
        }
        checked += 1;
    }
    let run = run.as_ref().map_err(Clone::clone)?;
    ensure(run.violations.is_empty(), || format!("forget violations: {:?}", run.violations))?;
    Ok(format!(
        "{checked} counters, Forget sound across {} validated checks ({} forgets)",
        run.checks, run.forgets
    ))
}

fn run(n: usize, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match outcome {
        Ok(detail) => {
            println!("criterion {n}: PASS: {detail}");
            true
        }
        Err(why) => {
            println!("criterion {n}: FAIL: {why}");
            false
        }
    }
}

fn main() {
    let start = Instant::now();
    let oracle = oracle_run();
    let oracle_time = start.elapsed();
    let results = [
        run(1, criterion1),
        run(2, criterion2),
        run(3, criterion3),
        run(4, criterion4),
        run(5, criterion5),
        run(6, || criterion6(&oracle, oracle_time)),
        run(7, criterion7),
        run(8, criterion8),
        run(9, criterion9),
        run(10, || criterion10(&oracle)),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
