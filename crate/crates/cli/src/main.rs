//! `fixgame`: command-line front-end for fixpoint checking.
//!
//! Every command prints one JSON document on stdout. Exit codes: 0 when
//! the property holds (or the command only reports values), 1 when it
//! fails, 2 on malformed input, 3 when a search limit stopped the check.

mod commands;
mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use input::InputError;

#[derive(Parser, Debug)]
#[command(name = "fixgame", version, about = "Fixpoint equation systems: solving, local checking, abstraction and up-to techniques")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Model check a μ-calculus formula at one or more states.
    McCheck(McCheckArgs),
    /// Check that two states are bisimilar.
    BisimCheck(PairArgs),
    /// Check that the second state simulates the first.
    SimCheck(PairArgs),
    /// Check language equivalence of two NFA states.
    NfaEquiv(NfaArgs),
    /// Evaluate a closed Łukasiewicz term, over a PNDT when it is modal.
    LukasEval(LukasArgs),
    /// Solve an equation system file.
    Solve(SolveArgs),
    /// Decide `element ⊑ solution(variable)` with the local solver.
    Check(CheckArgs),
    /// List ∃'s selected moves at a position and ∀'s answers.
    GameMoves(PositionArgs),
    /// Check a single greatest fixpoint equation with the adjoint games.
    AdjointCheck(AdjointArgs),
    /// Check a Galois connection and the abstraction conditions.
    VerifyGalois(GaloisArgs),
    /// Check an up-to function's properties and its compatibility.
    VerifyUpto(UptoArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum EngineArg {
    Global,
    Local,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum McUpToArg {
    None,
    Bisim,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum PairUpToArg {
    None,
    Tr,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum NfaUpToArg {
    None,
    Congruence,
}

/// `none`, `tr`, `sim`, `bisim` or `file:<path>` with a tabulated function.
#[derive(Clone, Debug, PartialEq, Eq)]
enum UpToSpec {
    None,
    Tr,
    Sim,
    Bisim,
    File(PathBuf),
}

fn parse_upto_spec(s: &str) -> Result<UpToSpec, String> {
    Ok(match s {
        "none" => UpToSpec::None,
        "tr" => UpToSpec::Tr,
        "sim" => UpToSpec::Sim,
        "bisim" => UpToSpec::Bisim,
        _ => match s.strip_prefix("file:") {
            Some(p) if !p.is_empty() => UpToSpec::File(PathBuf::from(p)),
            _ => return Err(format!("expected none, tr, sim, bisim or file:<path>, found '{s}'")),
        },
    })
}

/// `grid-alpha:<n>` or `sim:<relation file>`.
#[derive(Clone, Debug, PartialEq, Eq)]
enum ConnectionSpec {
    GridAlpha(u32),
    Sim(PathBuf),
}

fn parse_connection_spec(s: &str) -> Result<ConnectionSpec, String> {
    if let Some(n) = s.strip_prefix("grid-alpha:") {
        return n
            .parse()
            .map(ConnectionSpec::GridAlpha)
            .map_err(|_| format!("expected a grid resolution after 'grid-alpha:', found '{n}'"));
    }
    match s.strip_prefix("sim:") {
        Some(p) if !p.is_empty() => Ok(ConnectionSpec::Sim(PathBuf::from(p))),
        _ => Err(format!("expected grid-alpha:<n> or sim:<file>, found '{s}'")),
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum GameKind {
    /// The chain game, for lattices whose non-⊥ elements are all basis elements.
    Chain,
    /// The tree game.
    Tree,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Abort after this many explored nodes.
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Budget of predicate evaluations per move computation.
    #[arg(long)]
    move_budget: Option<usize>,
    /// Re-check decisions and forgets while solving.
    #[arg(long)]
    validate: bool,
}

#[derive(Args, Debug)]
struct McCheckArgs {
    /// Transition system file.
    ts: PathBuf,
    /// Formula text, or `@file`.
    formula: String,
    /// States to check.
    #[arg(required = true)]
    states: Vec<String>,
    #[arg(long, value_enum, default_value = "global")]
    engine: EngineArg,
    #[arg(long, value_enum, default_value = "none")]
    upto: McUpToArg,
    /// Worker threads for independent states.
    #[arg(long, env = "FIXGAME_JOBS", default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct PairArgs {
    /// Transition system file.
    ts: PathBuf,
    s1: String,
    s2: String,
    #[arg(long, value_enum, default_value = "none")]
    upto: PairUpToArg,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct NfaArgs {
    /// NFA file.
    nfa: PathBuf,
    q1: String,
    q2: String,
    #[arg(long, value_enum, default_value = "none")]
    upto: NfaUpToArg,
}

#[derive(Args, Debug)]
#[group(id = "mode", multiple = false)]
struct ModeArgs {
    /// Evaluate on the grid {0, 1/n, ..., 1}.
    #[arg(long, group = "mode")]
    grid: Option<u32>,
    /// Iterate over exact rationals until steps are below this tolerance.
    #[arg(long, group = "mode")]
    epsilon: Option<String>,
}

#[derive(Args, Debug)]
struct LukasArgs {
    /// Term text, or `@file`.
    term: String,
    /// PNDT file, for terms with propositions and modalities.
    #[arg(long)]
    pndt: Option<PathBuf>,
    #[command(flatten)]
    mode: ModeArgs,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Equation system file.
    system: PathBuf,
    #[command(flatten)]
    mode: ModeArgs,
    /// Iteration limit per fixpoint loop in epsilon mode.
    #[arg(long, default_value_t = fixgame::apps::lukas::DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Args, Debug)]
struct PositionArgs {
    /// Equation system file.
    system: PathBuf,
    /// A state for μ-calculus systems, `state=value` on a grid.
    element: String,
    /// Equation variable.
    variable: String,
    /// Grid resolution for Łukasiewicz systems, overriding the file.
    #[arg(long)]
    grid: Option<u32>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    position: PositionArgs,
    /// Include the exploration trace in the output.
    #[arg(long)]
    trace: bool,
    /// Explore moves with a usable decision first.
    #[arg(long)]
    prefer_decided: bool,
    /// Up-to function for every equation: none, tr, sim, bisim or file:<path>.
    #[arg(long, value_parser = parse_upto_spec, default_value = "none")]
    upto: UpToSpec,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct AdjointArgs {
    /// μ-calculus system file with one greatest fixpoint equation.
    system: PathBuf,
    /// State to check.
    state: String,
    #[arg(long, value_enum, default_value = "tree")]
    game: GameKind,
    /// Stop test up to an up-to function: none, sim, bisim or file:<path>.
    #[arg(long, value_parser = parse_upto_spec, default_value = "none")]
    upto: UpToSpec,
}

#[derive(Args, Debug)]
struct GaloisArgs {
    /// Concrete equation system file.
    concrete: PathBuf,
    /// Abstract equation system file. With `grid-alpha:n` it defaults to
    /// the operator-wise grid abstraction of the concrete system.
    #[arg(name = "ABSTRACT")]
    abstract_: Option<PathBuf>,
    /// Connection: grid-alpha:<n>, or sim:<file> with lines
    /// `state -> abstract states` defining the relation R.
    #[arg(long, value_parser = parse_connection_spec)]
    connection: ConnectionSpec,
    /// Tolerance for the concrete solution of a Łukasiewicz system.
    #[arg(long, default_value = "1e-6")]
    epsilon: String,
}

#[derive(Args, Debug)]
struct UptoArgs {
    /// μ-calculus system file.
    system: PathBuf,
    /// Up-to function for every equation: tr, sim, bisim or file:<path>.
    #[arg(long, value_parser = parse_upto_spec, default_value = "bisim")]
    upto: UpToSpec,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok((json, code)) => {
            let text = serde_json::to_string_pretty(&json).expect("JSON values serialize");
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let input = e.downcast_ref::<InputError>().is_some()
                || matches!(
                    e.downcast_ref::<fixgame::Error>(),
                    Some(fixgame::Error::Parse { .. } | fixgame::Error::InvalidArgument(_))
                );
            let limit = matches!(
                e.downcast_ref::<fixgame::Error>(),
                Some(fixgame::Error::MoveBudgetExceeded { .. } | fixgame::Error::NonConvergence { .. })
            );
            ExitCode::from(if limit && !input { 3 } else { 2 })
        }
    }
}
