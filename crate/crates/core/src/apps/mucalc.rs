//! The modal μ-calculus over unlabelled transition systems.
//!
//! ```text
//! mu x2. ((nu x1. (p & [] x1)) | <> x2)
//! ```
//!
//! `|` binds weakest, then `&`, then the prefix operators `[]` and `<>`.
//! A fixpoint body extends as far right as possible. Identifiers bound by
//! an enclosing fixpoint are variables; all others are atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::bisim::bisimilarity;
use super::lexer::{lex_at, Cursor, Tok};
use super::ts::TransitionSystem;
use crate::eqsys::{solve, Equation, EquationSystem, MonotoneFunction, Sign};
use crate::error::{Error, Result};
use crate::game::Player;
use crate::lattice::{Lattice, Powerset, StateSet};
use crate::localsolver::{check, CheckOptions, Stats};
use crate::upto::{u_bisim, up_to_check, CompatibleTuple};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Var(String),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Box(Box<Formula>),
    Diamond(Box<Formula>),
    Fix(Sign, String, Box<Formula>),
}

impl Formula {
    pub fn parse(src: &str) -> Result<Formula> {
        Formula::parse_in(src, 1, 0, &[])
    }

    /// Parses text found `offset` characters into line `line`, with
    /// `vars` already bound.
    pub(crate) fn parse_in(src: &str, line: usize, offset: usize, vars: &[String]) -> Result<Formula> {
        let mut p = Parser {
            cur: Cursor::new(lex_at(src, line, offset)?),
            scope: vars.iter().map(|v| (v.clone(), v.clone())).collect(),
            binders: vars.iter().cloned().collect(),
        };
        let f = p.or()?;
        p.cur.expect_end()?;
        Ok(f)
    }

    /// Number of fixpoint subformulas.
    pub fn fixpoints(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) | Formula::Var(_) => 0,
            Formula::And(a, b) | Formula::Or(a, b) => a.fixpoints() + b.fixpoints(),
            Formula::Box(a) | Formula::Diamond(a) => a.fixpoints(),
            Formula::Fix(_, _, a) => 1 + a.fixpoints(),
        }
    }

    /// True when the formula uses no `[]`, no `ν` and no `ff`.
    pub fn is_mu_diamond(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) | Formula::Var(_) => true,
            Formula::False | Formula::Box(_) => false,
            Formula::And(a, b) | Formula::Or(a, b) => a.is_mu_diamond() && b.is_mu_diamond(),
            Formula::Diamond(a) => a.is_mu_diamond(),
            Formula::Fix(s, _, a) => *s == Sign::Mu && a.is_mu_diamond(),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Box(a) | Formula::Diamond(a) | Formula::Fix(_, _, a) => a.collect_atoms(out),
            _ => {}
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "tt"),
            Formula::False => write!(f, "ff"),
            Formula::Atom(a) | Formula::Var(a) => write!(f, "{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Box(a) => write!(f, "[] {a}"),
            Formula::Diamond(a) => write!(f, "<> {a}"),
            Formula::Fix(s, x, a) => write!(f, "({} {x}. {a})", if *s == Sign::Mu { "mu" } else { "nu" }),
        }
    }
}

struct Parser {
    cur: Cursor,
    /// Source name and internal name of each enclosing binder.
    scope: Vec<(String, String)>,
    binders: BTreeSet<String>,
}

impl Parser {
    fn or(&mut self) -> Result<Formula> {
        let mut f = self.and()?;
        while self.cur.eat_sym("|") {
            f = Formula::Or(Box::new(f), Box::new(self.and()?));
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut f = self.prefix()?;
        while self.cur.eat_sym("&") {
            f = Formula::And(Box::new(f), Box::new(self.prefix()?));
        }
        Ok(f)
    }

    fn prefix(&mut self) -> Result<Formula> {
        if self.cur.eat_sym("[]") {
            return Ok(Formula::Box(Box::new(self.prefix()?)));
        }
        if self.cur.eat_sym("<>") {
            return Ok(Formula::Diamond(Box::new(self.prefix()?)));
        }
        if self.cur.eat_sym("(") {
            let f = self.or()?;
            self.cur.expect_sym(")")?;
            return Ok(f);
        }
        let name = match self.cur.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return Err(self.cur.error("expected a formula")),
        };
        self.cur.next();
        match name.as_str() {
            "tt" => Ok(Formula::True),
            "ff" => Ok(Formula::False),
            "mu" | "nu" => {
                let sign = if name == "mu" { Sign::Mu } else { Sign::Nu };
                let x = self.cur.ident()?;
                self.cur.expect_sym(".")?;
                // α-rename binders that reuse a name
                let mut internal = x.clone();
                let mut k = 2;
                while self.binders.contains(&internal) {
                    internal = format!("{x}_{k}");
                    k += 1;
                }
                self.binders.insert(internal.clone());
                self.scope.push((x, internal.clone()));
                let body = self.or()?;
                self.scope.pop();
                Ok(Formula::Fix(sign, internal, Box::new(body)))
            }
            _ => Ok(match self.scope.iter().rev().find(|(s, _)| *s == name) {
                Some((_, internal)) => Formula::Var(internal.clone()),
                None => Formula::Atom(name),
            }),
        }
    }
}

/// Right-hand sides with nested fixpoints replaced by their variables.
#[derive(Clone, Debug)]
enum Rhs {
    Const(StateSet),
    Var(usize),
    And(Box<Rhs>, Box<Rhs>),
    Or(Box<Rhs>, Box<Rhs>),
    Box(Box<Rhs>),
    Diamond(Box<Rhs>),
}

impl Rhs {
    fn eval(&self, ts: &TransitionSystem, x: &[StateSet]) -> StateSet {
        match self {
            Rhs::Const(s) => s.clone(),
            Rhs::Var(i) => x[*i].clone(),
            Rhs::And(a, b) => {
                let mut s = a.eval(ts, x);
                s.intersect_with(&b.eval(ts, x));
                s
            }
            Rhs::Or(a, b) => {
                let mut s = a.eval(ts, x);
                s.union_with(&b.eval(ts, x));
                s
            }
            Rhs::Box(a) => ts.boxed(&a.eval(ts, x)),
            Rhs::Diamond(a) => ts.diamond(&a.eval(ts, x)),
        }
    }
}

/// An equation system for a formula, with the index of its outermost
/// variable.
pub struct Translation {
    pub system: EquationSystem<Powerset>,
    pub target: usize,
}

struct Builder<'a> {
    ts: &'a TransitionSystem,
    rho: &'a BTreeMap<String, StateSet>,
    /// Binder name to equation index, assigned before translation.
    index: BTreeMap<String, usize>,
    equations: Vec<Option<(String, Sign, Rhs, String)>>,
}

impl Builder<'_> {
    /// Assigns indices in post-order, so inner fixpoints come first.
    fn number(&mut self, f: &Formula) {
        match f {
            Formula::And(a, b) | Formula::Or(a, b) => {
                self.number(a);
                self.number(b);
            }
            Formula::Box(a) | Formula::Diamond(a) => self.number(a),
            Formula::Fix(_, x, a) => {
                self.number(a);
                let k = self.index.len();
                self.index.insert(x.clone(), k);
            }
            _ => {}
        }
    }

    fn rhs(&mut self, f: &Formula) -> Result<(Rhs, String)> {
        let lat = self.ts.lattice();
        Ok(match f {
            Formula::True => (Rhs::Const(lat.top()), "𝕊".into()),
            Formula::False => (Rhs::Const(lat.empty_set()), "∅".into()),
            Formula::Atom(a) => {
                let s = self
                    .rho
                    .get(a)
                    .or_else(|| self.ts.atom(a))
                    .ok_or_else(|| Error::InvalidArgument(format!("free variable '{a}' has no valuation")))?;
                (Rhs::Const(s.clone()), lat.show(s))
            }
            Formula::Var(x) => (Rhs::Var(self.index[x]), x.clone()),
            Formula::And(a, b) => {
                let ((ra, da), (rb, db)) = (self.rhs(a)?, self.rhs(b)?);
                (Rhs::And(Box::new(ra), Box::new(rb)), format!("({da} ∩ {db})"))
            }
            Formula::Or(a, b) => {
                let ((ra, da), (rb, db)) = (self.rhs(a)?, self.rhs(b)?);
                (Rhs::Or(Box::new(ra), Box::new(rb)), format!("({da} ∪ {db})"))
            }
            Formula::Box(a) => {
                let (r, d) = self.rhs(a)?;
                (Rhs::Box(Box::new(r)), format!("■{d}"))
            }
            Formula::Diamond(a) => {
                let (r, d) = self.rhs(a)?;
                (Rhs::Diamond(Box::new(r)), format!("♦{d}"))
            }
            Formula::Fix(sign, x, body) => {
                let k = self.index[x];
                let (r, d) = self.rhs(body)?;
                self.equations[k] = Some((x.clone(), *sign, r, d));
                (Rhs::Var(k), x.clone())
            }
        })
    }
}

/// Translates a closed formula into one equation per fixpoint
/// subformula, innermost first. A formula that is not itself a fixpoint
/// gets a final equation `x =ν ⟦φ⟧`. Atoms are looked up in `rho` first,
/// then in the transition system.
pub fn to_system(phi: &Formula, ts: &TransitionSystem, rho: &BTreeMap<String, StateSet>) -> Result<Translation> {
    let mut b = Builder {
        ts,
        rho,
        index: BTreeMap::new(),
        equations: Vec::new(),
    };
    b.number(phi);
    b.equations = vec![None; b.index.len()];
    let (top, desc) = b.rhs(phi)?;
    let mut equations: Vec<(String, Sign, Rhs, String)> = b.equations.into_iter().map(Option::unwrap).collect();
    let target = match phi {
        Formula::Fix(_, x, _) => b.index[x],
        _ => {
            let mut name = "x".to_string();
            while b.index.contains_key(&name) {
                name.push('\'');
            }
            equations.push((name, Sign::Nu, top, desc));
            equations.len() - 1
        }
    };
    let m = equations.len();
    let eqs = equations
        .into_iter()
        .map(|(name, sign, rhs, desc)| {
            let t = ts.clone();
            Equation::new(name, sign, MonotoneFunction::new(m, desc, move |x: &[StateSet]| rhs.eval(&t, x)))
        })
        .collect();
    Ok(Translation {
        system: EquationSystem::unchecked(Arc::clone(ts.lattice()), eqs)?,
        target,
    })
}

/// Builds a system from equations written out one by one. Bodies may
/// refer to any equation variable but contain no fixpoints.
pub fn system_of(
    equations: &[(String, Sign, Formula)],
    ts: &TransitionSystem,
    rho: &BTreeMap<String, StateSet>,
) -> Result<EquationSystem<Powerset>> {
    let mut b = Builder {
        ts,
        rho,
        index: equations.iter().enumerate().map(|(k, (x, _, _))| (x.clone(), k)).collect(),
        equations: Vec::new(),
    };
    let m = equations.len();
    let mut eqs = Vec::with_capacity(m);
    for (name, sign, body) in equations {
        if body.fixpoints() > 0 {
            return Err(Error::InvalidArgument(format!(
                "equation '{name}' contains a fixpoint; write it as a separate equation"
            )));
        }
        let (rhs, desc) = b.rhs(body)?;
        let t = ts.clone();
        eqs.push(Equation::new(
            name.clone(),
            *sign,
            MonotoneFunction::new(m, desc, move |x: &[StateSet]| rhs.eval(&t, x)),
        ));
    }
    EquationSystem::unchecked(Arc::clone(ts.lattice()), eqs)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Global,
    Local,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum McUpTo {
    #[default]
    None,
    /// Every equation up to bisimilarity of the transition system.
    Bisim,
}

#[derive(Clone, Debug, Default)]
pub struct McOptions {
    pub engine: Engine,
    pub upto: McUpTo,
    pub check: CheckOptions,
}

#[derive(Clone, Debug, Serialize)]
pub struct McResult {
    pub holds: bool,
    pub engine: Engine,
    pub upto: McUpTo,
    pub target: String,
    /// Truth set of the target variable, for the global engine.
    pub solution: Option<Vec<String>>,
    /// Exploration statistics, for the local engine.
    pub stats: Option<Stats>,
}

/// Decides whether state `s` satisfies `phi`.
pub fn model_check(
    ts: &TransitionSystem,
    rho: &BTreeMap<String, StateSet>,
    phi: &Formula,
    s: usize,
    opts: &McOptions,
) -> Result<McResult> {
    if s >= ts.len() {
        return Err(Error::InvalidArgument(format!("state {s} outside {} states", ts.len())));
    }
    let Translation { system, target } = to_system(phi, ts, rho)?;
    let name = system.equations()[target].name.clone();
    let mut out = McResult {
        holds: false,
        engine: opts.engine,
        upto: opts.upto,
        target: name,
        solution: None,
        stats: None,
    };
    match (opts.engine, opts.upto) {
        (Engine::Global, McUpTo::None) => {
            let sol = solve(&system)?;
            out.holds = sol[target].contains(s);
            out.solution = Some(ts.lattice().members(&sol[target]).map(String::from).collect());
        }
        (Engine::Global, McUpTo::Bisim) => {
            return Err(Error::Unsupported("up-to techniques need the local engine".into()));
        }
        (Engine::Local, McUpTo::None) => {
            let r = check(&system, s, target, &opts.check)?;
            out.holds = r.winner == Player::Exists;
            out.stats = Some(r.stats);
        }
        (Engine::Local, McUpTo::Bisim) => {
            // bisimilarity must respect every atom the formula can see
            let mut full = ts.clone();
            for (name, set) in rho {
                full = full.with_atom(name.clone(), set.ones())?;
            }
            let bis = bisimilarity(&full)?;
            let pairs: Vec<(usize, usize)> = bis.pairs.iter().copied().collect();
            let u = u_bisim(Arc::clone(ts.lattice()), &pairs)?;
            let tuple = CompatibleTuple::new(&system, vec![u; system.len()])?;
            let r = up_to_check(&system, &tuple, s, target, &opts.check)?;
            out.holds = r.winner == Player::Exists;
            out.stats = Some(r.stats);
        }
    }
    Ok(out)
}
