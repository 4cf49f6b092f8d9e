//! One function per subcommand, each returning a JSON document and an
//! exit code.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use fixgame::abstraction::{
    check_completeness, check_soundness, pointwise_grid_connection, simulation_connection, verify_connection,
    verify_solution_relation, AbstractedSystem, Side,
};
use fixgame::adjoint::{case1_check, case2_check, MeetPreservingEquation};
use fixgame::apps::bisim::{bisimilarity, check_pair, similarity, Behaviour, PairUpTo};
use fixgame::apps::lukas::{evaluate, Mode, Term, DEFAULT_MAX_ITER};
use fixgame::apps::mucalc::{model_check, Engine, Formula, McOptions, McUpTo};
use fixgame::apps::nfa::{language_equiv, Nfa};
use fixgame::apps::pndt::Pndt;
use fixgame::apps::system::{Domain, SystemFile};
use fixgame::apps::ts::TransitionSystem;
use fixgame::eqsys::{solve, solve_epsilon, EquationSystem, Sign};
use fixgame::game::{forall_moves, selection, Player, Position};
use fixgame::lattice::{Grid, Lattice, Pointwise, Powerset};
use fixgame::localsolver::{check, CheckOptions, Stats};
use fixgame::upto::{
    check_system_compatibility, u_bisim, u_sim, u_tr, up_to_check, verify_flags, CompatibleTuple, UpToFlags,
    UpToFunction,
};

use crate::input::{
    grid_element, input_error, parse_file, parse_map, parse_table, parse_text, read, state_element, tolerance,
    variable,
};
use crate::{
    AdjointArgs, CheckArgs, Command, ConnectionSpec, EngineArg, GaloisArgs, GameKind, LukasArgs, McCheckArgs, McUpToArg,
    ModeArgs, NfaArgs, NfaUpToArg, PairArgs, PairUpToArg, PositionArgs, SolveArgs, SolverArgs, UpToSpec, UptoArgs,
};

pub fn run(cmd: Command) -> Result<(Value, u8)> {
    match cmd {
        Command::McCheck(a) => mc_check(a),
        Command::BisimCheck(a) => pair_check(a, Behaviour::Bisimilarity),
        Command::SimCheck(a) => pair_check(a, Behaviour::Similarity),
        Command::NfaEquiv(a) => nfa_equiv(a),
        Command::LukasEval(a) => lukas_eval(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Check(a) => check_cmd(a),
        Command::GameMoves(a) => game_moves(a),
        Command::AdjointCheck(a) => adjoint_check(a),
        Command::VerifyGalois(a) => verify_galois(a),
        Command::VerifyUpto(a) => verify_upto(a),
    }
}

fn verdict(holds: bool) -> u8 {
    if holds {
        0
    } else {
        1
    }
}

fn stats_json(stats: &Stats) -> Value {
    let mut v = serde_json::to_value(stats).expect("stats serialize");
    v["base_nodes"] = json!(stats.base_nodes());
    v
}

fn check_options(s: &SolverArgs) -> CheckOptions {
    let mut opts = CheckOptions::default();
    if let Some(b) = s.move_budget {
        opts.move_budget = b;
    }
    opts.max_nodes = s.max_nodes;
    opts.validate |= s.validate;
    opts
}

/// Maps `f` over `items` on up to `jobs` threads, keeping the order.
fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker threads do not panic"))
            .collect()
    })
}

fn mode_of(m: &ModeArgs, default: Option<&Mode>) -> Result<Mode> {
    Ok(match (m.grid, &m.epsilon) {
        (Some(n), _) => Mode::Grid(n),
        (None, Some(e)) => Mode::Epsilon(tolerance(e)?),
        (None, None) => default
            .cloned()
            .unwrap_or_else(|| Mode::Epsilon(SystemFile::default_tolerance())),
    })
}

fn load_system(path: &Path) -> Result<SystemFile> {
    parse_file(path, SystemFile::parse)
}

fn mucalc_ts<'a>(sf: &'a SystemFile, path: &Path) -> Result<&'a TransitionSystem> {
    sf.transition_system()
        .ok_or_else(|| input_error(format!("{}: expected 'domain: mucalc'", path.display())))
}

fn ts_state(ts: &TransitionSystem, name: &str) -> Result<usize> {
    ts.state_index(name).map_err(|_| input_error(format!("unknown state '{name}'")))
}

fn mc_check(a: McCheckArgs) -> Result<(Value, u8)> {
    let ts = parse_file(&a.ts, TransitionSystem::parse)?;
    let phi = parse_text(&a.formula, Formula::parse)?;
    let states = a.states.iter().map(|s| ts_state(&ts, s)).collect::<Result<Vec<_>>>()?;
    let opts = McOptions {
        engine: match a.engine {
            EngineArg::Global => Engine::Global,
            EngineArg::Local => Engine::Local,
        },
        upto: match a.upto {
            McUpToArg::None => McUpTo::None,
            McUpToArg::Bisim => McUpTo::Bisim,
        },
        check: check_options(&a.solver),
    };
    let rho = BTreeMap::new();
    let results = par_map(&states, a.jobs, |&s| model_check(&ts, &rho, &phi, s, &opts));
    let mut all = true;
    let mut per_state = Vec::new();
    for (name, r) in a.states.iter().zip(results) {
        let r = r?;
        all &= r.holds;
        let mut v = json!({ "state": name, "holds": r.holds, "target": r.target });
        if let Some(sol) = &r.solution {
            v["solution"] = json!(sol);
        }
        if let Some(st) = &r.stats {
            v["stats"] = stats_json(st);
        }
        per_state.push(v);
    }
    Ok((
        json!({
            "formula": phi.to_string(),
            "engine": opts.engine,
            "upto": opts.upto,
            "holds": all,
            "results": per_state,
        }),
        verdict(all),
    ))
}

fn pair_check(a: PairArgs, kind: Behaviour) -> Result<(Value, u8)> {
    let ts = parse_file(&a.ts, TransitionSystem::parse)?;
    let (s1, s2) = (ts_state(&ts, &a.s1)?, ts_state(&ts, &a.s2)?);
    let upto = match a.upto {
        PairUpToArg::None => PairUpTo::None,
        PairUpToArg::Tr => PairUpTo::Tr,
    };
    let r = check_pair(&ts, kind, s1, s2, upto, &check_options(&a.solver))?;
    Ok((
        json!({
            "s1": a.s1,
            "s2": a.s2,
            "relation": r.relation,
            "upto": r.upto,
            "holds": r.holds,
            "stats": stats_json(&r.stats),
        }),
        verdict(r.holds),
    ))
}

fn nfa_equiv(a: NfaArgs) -> Result<(Value, u8)> {
    let nfa = parse_file(&a.nfa, Nfa::parse)?;
    let q = |name: &str| nfa.state_index(name).map_err(|_| input_error(format!("unknown state '{name}'")));
    let (q1, q2) = (q(&a.q1)?, q(&a.q2)?);
    let r = language_equiv(&nfa, q1, q2, matches!(a.upto, NfaUpToArg::Congruence))?;
    let mut v = serde_json::to_value(&r)?;
    v["q1"] = json!(a.q1);
    v["q2"] = json!(a.q2);
    Ok((v, verdict(r.equivalent)))
}

fn lukas_eval(a: LukasArgs) -> Result<(Value, u8)> {
    let t = parse_text(&a.term, Term::parse)?;
    let pndt = a.pndt.as_deref().map(|p| parse_file(p, Pndt::parse)).transpose()?;
    if t.is_modal() && pndt.is_none() {
        bail!(input_error("the term uses propositions or modalities; pass --pndt"));
    }
    let r = evaluate(&t, pndt.as_ref(), &mode_of(&a.mode, None)?)?;
    let code = verdict(r.converged);
    Ok((serde_json::to_value(&r)?, code))
}

fn solve_cmd(a: SolveArgs) -> Result<(Value, u8)> {
    let sf = load_system(&a.system)?;
    match &sf.domain {
        Domain::MuCalculus(ts) => {
            let sys = sf.powerset_system()?;
            let sol = solve(&sys)?;
            let lat = ts.lattice();
            let vars: serde_json::Map<String, Value> = sys
                .equations()
                .iter()
                .zip(&sol)
                .map(|(e, s)| (e.name.clone(), json!(lat.members(s).collect::<Vec<_>>())))
                .collect();
            Ok((json!({ "domain": "mucalc", "solution": vars }), 0))
        }
        Domain::Lukasiewicz { .. } => match mode_of(&a.mode, sf.mode())? {
            Mode::Grid(n) => {
                let sys = sf.grid_system(n)?;
                let sol = solve(&sys)?;
                Ok((
                    json!({
                        "domain": "lukas",
                        "mode": format!("grid:{n}"),
                        "converged": true,
                        "solution": shown(&sys, &sol),
                    }),
                    0,
                ))
            }
            Mode::Epsilon(tol) => {
                let sys = sf.exact_system()?;
                let r = solve_epsilon(&sys, &tol, a.max_iter)?;
                Ok((
                    json!({
                        "domain": "lukas",
                        "mode": format!("epsilon:{}", fixgame::lattice::show_rational(&tol)),
                        "converged": r.converged,
                        "solution": shown(&sys, &r.values),
                        "loops": r.stats,
                    }),
                    verdict(r.converged),
                ))
            }
        },
    }
}

fn shown<L: Lattice>(sys: &EquationSystem<L>, sol: &[L::Elem]) -> serde_json::Map<String, Value> {
    sys.equations()
        .iter()
        .zip(sol)
        .map(|(e, s)| (e.name.clone(), json!(sys.lattice().show(s))))
        .collect()
}

/// A system file resolved to a concrete finite system and a position.
enum Located {
    Sets(EquationSystem<Powerset>, usize, usize, TransitionSystem),
    Grid(EquationSystem<Pointwise<Grid>>, usize, usize),
}

fn locate(p: &PositionArgs) -> Result<Located> {
    let sf = load_system(&p.system)?;
    match &sf.domain {
        Domain::MuCalculus(ts) => {
            let sys = sf.powerset_system()?;
            let i = variable(&sys, &p.variable)?;
            let b = state_element(sys.lattice(), &p.element)?;
            Ok(Located::Sets(sys, b, i, ts.clone()))
        }
        Domain::Lukasiewicz { .. } => {
            let n = match (p.grid, sf.mode()) {
                (Some(n), _) | (None, Some(&Mode::Grid(n))) => n,
                _ => bail!(input_error("local checking of a lukas system needs a grid; pass --grid")),
            };
            let sys = sf.grid_system(n)?;
            let i = variable(&sys, &p.variable)?;
            let b = grid_element(sys.lattice(), &p.element)?;
            Ok(Located::Grid(sys, b, i))
        }
    }
}

fn check_cmd(a: CheckArgs) -> Result<(Value, u8)> {
    let mut opts = check_options(&a.solver);
    opts.trace = a.trace;
    opts.prefer_decided = a.prefer_decided;
    match locate(&a.position)? {
        Located::Sets(sys, b, i, ts) => {
            let tuple = match upto_function(&ts, &a.upto)? {
                None => None,
                Some(u) => Some(CompatibleTuple::new(&sys, vec![u; sys.len()])?),
            };
            check_at(&sys, b, i, &opts, tuple.as_ref(), &a.upto)
        }
        Located::Grid(sys, b, i) => {
            if a.upto != UpToSpec::None {
                bail!(input_error("up-to functions apply to mucalc systems only"));
            }
            check_at(&sys, b, i, &opts, None, &a.upto)
        }
    }
}

fn check_at<L: Lattice + 'static>(
    sys: &EquationSystem<L>,
    b: usize,
    i: usize,
    opts: &CheckOptions,
    tuple: Option<&CompatibleTuple<L>>,
    spec: &UpToSpec,
) -> Result<(Value, u8)> {
    let r = match tuple {
        Some(t) => up_to_check(sys, t, b, i, opts)?,
        None => check(sys, b, i, opts)?,
    };
    let holds = r.winner == Player::Exists;
    let mut v = json!({
        "position": Position::Exists { b, i }.show(sys.lattice()),
        "variable": sys.equations()[i].name,
        "upto": spec_name(spec),
        "winner": r.winner,
        "holds": holds,
        "stats": stats_json(&r.stats),
    });
    if opts.validate {
        v["violations"] = json!(r.violations);
    }
    if let Some(t) = &r.trace {
        v["trace"] = serde_json::to_value(t)?;
    }
    Ok((v, verdict(holds)))
}

fn game_moves(p: PositionArgs) -> Result<(Value, u8)> {
    match locate(&p)? {
        Located::Sets(sys, b, i, _) => moves_at(&sys, b, i),
        Located::Grid(sys, b, i) => moves_at(&sys, b, i),
    }
}

fn moves_at<L: Lattice>(sys: &EquationSystem<L>, b: usize, i: usize) -> Result<(Value, u8)> {
    let lat = sys.lattice();
    let moves = selection(sys, b, i, fixgame::game::DEFAULT_MOVE_BUDGET)?;
    let out: Vec<Value> = moves
        .iter()
        .map(|xs| {
            let answers: Vec<String> = forall_moves(xs).iter().map(|q| q.show(lat)).collect();
            json!({
                "move": Position::Forall(xs.clone()).show(lat),
                "forall_answers": answers,
            })
        })
        .collect();
    Ok((
        json!({
            "position": Position::Exists { b, i }.show(lat),
            "variable": sys.equations()[i].name,
            "moves": out,
        }),
        0,
    ))
}

/// The up-to function named by `spec` on the subsets of `ts`'s states.
fn upto_function(ts: &TransitionSystem, spec: &UpToSpec) -> Result<Option<UpToFunction<Powerset>>> {
    let lat = Arc::clone(ts.lattice());
    Ok(Some(match spec {
        UpToSpec::None => return Ok(None),
        UpToSpec::Tr => u_tr(lat)?,
        UpToSpec::Bisim => {
            let pairs: Vec<(usize, usize)> = bisimilarity(ts)?.pairs.into_iter().collect();
            u_bisim(lat, &pairs)?
        }
        UpToSpec::Sim => {
            let pairs: Vec<(usize, usize)> = similarity(ts)?.pairs.into_iter().collect();
            u_sim(lat, &pairs)?
        }
        UpToSpec::File(path) => {
            let table = parse_table(&read(path)?, &lat).with_context(|| path.display().to_string())?;
            let name = format!("file:{}", path.display());
            UpToFunction::new(lat, name, UpToFlags::NONE, move |x| table.get(x).cloned().unwrap_or_else(|| x.clone()))?
        }
    }))
}

fn spec_name(spec: &UpToSpec) -> String {
    match spec {
        UpToSpec::None => "none".into(),
        UpToSpec::Tr => "tr".into(),
        UpToSpec::Sim => "sim".into(),
        UpToSpec::Bisim => "bisim".into(),
        UpToSpec::File(p) => format!("file:{}", p.display()),
    }
}

fn adjoint_check(a: AdjointArgs) -> Result<(Value, u8)> {
    let sf = load_system(&a.system)?;
    let ts = mucalc_ts(&sf, &a.system)?;
    let sys = Arc::new(sf.powerset_system()?);
    if sys.len() != 1 || sys.sign(0) != Sign::Nu {
        bail!(input_error("adjoint-check needs exactly one greatest fixpoint equation"));
    }
    let lat = Arc::clone(sys.lattice_arc());
    let b = state_element(&lat, &a.state)?;
    let f = Arc::clone(&sys);
    let eq = MeetPreservingEquation::from_function(Arc::clone(&lat), move |x| f.eval(0, std::slice::from_ref(x)))?;
    let (result, holds) = match a.game {
        GameKind::Chain => {
            let elem = lat.basis()?[b].clone();
            let r = case1_check(&eq, &elem)?;
            let holds = r.winner == Player::Exists;
            (serde_json::to_value(&r)?, holds)
        }
        GameKind::Tree => {
            let u = upto_function(ts, &a.upto)?;
            let r = case2_check(&eq, b, u.as_ref())?;
            let holds = r.winner == Some(Player::Exists);
            (serde_json::to_value(&r)?, holds)
        }
    };
    Ok((
        json!({
            "state": a.state,
            "variable": sys.equations()[0].name,
            "game": format!("{:?}", a.game).to_lowercase(),
            "upto": spec_name(&a.upto),
            "holds": holds,
            "result": result,
        }),
        verdict(holds),
    ))
}

fn verify_galois(a: GaloisArgs) -> Result<(Value, u8)> {
    let sf = load_system(&a.concrete)?;
    let asf = a.abstract_.as_deref().map(load_system).transpose()?;
    match &a.connection {
        ConnectionSpec::Sim(map_path) => {
            let (Some(asf), Some(abs_path)) = (asf, &a.abstract_) else {
                bail!(input_error("sim:<file> needs an abstract system file"));
            };
            mucalc_ts(&sf, &a.concrete)?;
            mucalc_ts(&asf, abs_path)?;
            let conc = sf.powerset_system()?;
            let abs = asf.powerset_system()?;
            let pairs = parse_map(&read(map_path)?, conc.lattice(), abs.lattice())
                .with_context(|| map_path.display().to_string())?;
            let gc = simulation_connection(Arc::clone(conc.lattice_arc()), Arc::clone(abs.lattice_arc()), &pairs)?;
            let connection = verify_connection(&gc);
            let m = conc.len();
            let sc = solve(&conc)?;
            let sa = solve(&abs)?;
            let absys = AbstractedSystem::new(conc, abs, vec![gc; m])?;
            let report = verify_solution_relation(&absys, &sc, &sa);
            let holds = connection.adjoint && report.consistent;
            Ok((
                json!({
                    "connection": connection,
                    "solutions": report,
                    "concretisation_completeness": check_completeness(&absys, Side::Concretisation),
                    "holds": holds,
                }),
                verdict(holds),
            ))
        }
        &ConnectionSpec::GridAlpha(n) => {
            if !matches!(sf.domain, Domain::Lukasiewicz { .. }) {
                bail!(input_error("grid-alpha:<n> needs a lukas system; use sim:<file> for mucalc"));
            }
            let conc = sf.exact_system()?;
            let abs = match &asf {
                Some(asf) => asf.grid_system(n)?,
                None => sf.grid_system(n)?,
            };
            let gc = pointwise_grid_connection(conc.lattice().states().to_vec(), n)?;
            let connection = verify_connection(&gc);
            let tol = tolerance(&a.epsilon)?;
            let eps = solve_epsilon(&conc, &tol, DEFAULT_MAX_ITER)?;
            let sa = solve(&abs)?;
            let m = conc.len();
            let absys = AbstractedSystem::new(conc, abs, vec![gc; m])?;
            let report = verify_solution_relation(&absys, &eps.values, &sa);
            let soundness = check_soundness(&absys);
            let holds = connection.adjoint && report.consistent;
            Ok((
                json!({
                    "connection": connection,
                    "solutions": report,
                    "soundness": soundness,
                    "concrete_converged": eps.converged,
                    "note": format!(
                        "concrete solution approximated to within {}; checks on [0,1] are sampled",
                        a.epsilon
                    ),
                    "holds": holds,
                }),
                verdict(holds),
            ))
        }
    }
}

fn verify_upto(a: UptoArgs) -> Result<(Value, u8)> {
    let sf = load_system(&a.system)?;
    let ts = mucalc_ts(&sf, &a.system)?;
    let sys = sf.powerset_system()?;
    let u = upto_function(ts, &a.upto)?
        .ok_or_else(|| input_error("verify-upto needs an up-to function, not none"))?;
    let flags = verify_flags(&u);
    let compat = check_system_compatibility(&sys, &vec![u.clone(); sys.len()])?;
    let holds = compat.compatible;
    Ok((
        json!({
            "function": u.name(),
            "flags": flags,
            "compatibility": compat,
            "holds": holds,
        }),
        verdict(holds),
    ))
}
