//! Łukasiewicz μ-terms, optionally with propositions and modalities over
//! a PNDT.
//!
//! ```text
//! nu y. mu x. (0.625 (+) 0.375*y) (.) (0.5 \/ (0.375 (+) 0.5*x))
//! ```
//!
//! Precedence from weakest: `\/`, `/\`, `(+)`, `(.)`, then the prefix
//! forms `r*t`, `<>`, `[]`, `~p` and fixpoints. A number `r` on its own
//! is the constant `r·1`.
//!
//! Grid evaluation abstracts each operator separately. `⊔`, `⊓`, `⊕` and
//! `⊙` are exact on the grid. Scalars, constants, propositions,
//! complements and modalities are rounded up with `α_n`, so grid values
//! over-approximate the exact ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::lexer::{lex_at, Cursor, Tok};
use super::pndt::Pndt;
use crate::eqsys::{solve, solve_epsilon, Equation, EquationSystem, MonotoneFunction, Sign};
use crate::error::{Error, Result};
use crate::lattice::{show_rational, Grid, Pointwise, RationalInterval};

/// Iteration cap for ε-mode loops.
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    /// `r·1`; covers the constants `0` and `1`.
    Const(BigRational),
    Var(String),
    Prop(String),
    Complement(String),
    Scale(BigRational, Box<Term>),
    Join(Box<Term>, Box<Term>),
    Meet(Box<Term>, Box<Term>),
    Plus(Box<Term>, Box<Term>),
    Times(Box<Term>, Box<Term>),
    Diamond(Box<Term>),
    Box(Box<Term>),
    Fix(Sign, String, Box<Term>),
}

impl Term {
    pub fn parse(src: &str) -> Result<Term> {
        Term::parse_in(src, 1, 0, &[])
    }

    /// Parses text found `offset` characters into line `line`, with
    /// `vars` already bound.
    pub(crate) fn parse_in(src: &str, line: usize, offset: usize, vars: &[String]) -> Result<Term> {
        let mut p = Parser {
            cur: Cursor::new(lex_at(src, line, offset)?),
            scope: vars.iter().map(|v| (v.clone(), v.clone())).collect(),
            binders: vars.iter().cloned().collect(),
        };
        let t = p.join()?;
        p.cur.expect_end()?;
        Ok(t)
    }

    /// Whether the term mentions propositions or modalities.
    pub fn is_modal(&self) -> bool {
        match self {
            Term::Const(_) | Term::Var(_) => false,
            Term::Prop(_) | Term::Complement(_) | Term::Diamond(_) | Term::Box(_) => true,
            Term::Scale(_, a) | Term::Fix(_, _, a) => a.is_modal(),
            Term::Join(a, b) | Term::Meet(a, b) | Term::Plus(a, b) | Term::Times(a, b) => a.is_modal() || b.is_modal(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(r) => write!(f, "{}", show_rational(r)),
            Term::Var(x) | Term::Prop(x) => write!(f, "{x}"),
            Term::Complement(p) => write!(f, "~{p}"),
            Term::Scale(r, t) => write!(f, "{}*{t}", show_rational(r)),
            Term::Join(a, b) => write!(f, "({a} \\/ {b})"),
            Term::Meet(a, b) => write!(f, "({a} /\\ {b})"),
            Term::Plus(a, b) => write!(f, "({a} (+) {b})"),
            Term::Times(a, b) => write!(f, "({a} (.) {b})"),
            Term::Diamond(t) => write!(f, "<> {t}"),
            Term::Box(t) => write!(f, "[] {t}"),
            Term::Fix(s, x, t) => write!(f, "({s} {x}. {t})"),
        }
    }
}

struct Parser {
    cur: Cursor,
    scope: Vec<(String, String)>,
    binders: BTreeSet<String>,
}

impl Parser {
    fn binary(&mut self, sym: &str, next: fn(&mut Self) -> Result<Term>, make: fn(Box<Term>, Box<Term>) -> Term) -> Result<Term> {
        let mut t = next(self)?;
        while self.cur.eat_sym(sym) {
            t = make(Box::new(t), Box::new(next(self)?));
        }
        Ok(t)
    }

    fn join(&mut self) -> Result<Term> {
        self.binary("\\/", Self::meet, Term::Join)
    }

    fn meet(&mut self) -> Result<Term> {
        self.binary("/\\", Self::plus, Term::Meet)
    }

    fn plus(&mut self) -> Result<Term> {
        self.binary("(+)", Self::times, Term::Plus)
    }

    fn times(&mut self) -> Result<Term> {
        self.binary("(.)", Self::prefix, Term::Times)
    }

    fn number(&mut self) -> Result<BigRational> {
        let col_err = self.cur.error("a number must lie in [0,1]");
        match self.cur.next() {
            Some(Tok::Num(r)) if r <= BigRational::one() => Ok(r),
            _ => Err(col_err),
        }
    }

    fn prefix(&mut self) -> Result<Term> {
        if self.cur.eat_sym("<>") {
            return Ok(Term::Diamond(Box::new(self.prefix()?)));
        }
        if self.cur.eat_sym("[]") {
            return Ok(Term::Box(Box::new(self.prefix()?)));
        }
        if self.cur.eat_sym("(") {
            let t = self.join()?;
            self.cur.expect_sym(")")?;
            return Ok(t);
        }
        if self.cur.eat_sym("~") {
            let p = self.cur.ident()?;
            if self.scope.iter().any(|(s, _)| *s == p) {
                return Err(self.cur.error(format!("'~' applies to propositions, not to the variable '{p}'")));
            }
            return Ok(Term::Complement(p));
        }
        match self.cur.peek().cloned() {
            Some(Tok::Num(_)) => {
                let r = self.number()?;
                if self.cur.eat_sym("*") {
                    Ok(Term::Scale(r, Box::new(self.prefix()?)))
                } else {
                    Ok(Term::Const(r))
                }
            }
            Some(Tok::Ident(name)) => {
                self.cur.next();
                if name == "mu" || name == "nu" {
                    let sign = if name == "mu" { Sign::Mu } else { Sign::Nu };
                    let x = self.cur.ident()?;
                    self.cur.expect_sym(".")?;
                    let mut internal = x.clone();
                    let mut k = 2;
                    while self.binders.contains(&internal) {
                        internal = format!("{x}_{k}");
                        k += 1;
                    }
                    self.binders.insert(internal.clone());
                    self.scope.push((x, internal.clone()));
                    let body = self.join()?;
                    self.scope.pop();
                    return Ok(Term::Fix(sign, internal, Box::new(body)));
                }
                Ok(match self.scope.iter().rev().find(|(s, _)| *s == name) {
                    Some((_, internal)) => Term::Var(internal.clone()),
                    None => Term::Prop(name),
                })
            }
            _ => Err(self.cur.error("expected a term")),
        }
    }
}

/// Right-hand sides over per-state value vectors.
#[derive(Clone, Debug)]
enum Rhs {
    Const(BigRational),
    Var(usize),
    Prop(Vec<BigRational>),
    Scale(BigRational, Box<Rhs>),
    Join(Box<Rhs>, Box<Rhs>),
    Meet(Box<Rhs>, Box<Rhs>),
    Plus(Box<Rhs>, Box<Rhs>),
    Times(Box<Rhs>, Box<Rhs>),
    Diamond(Box<Rhs>),
    Box(Box<Rhs>),
}

struct Eval<'a> {
    pndt: Option<&'a Pndt>,
    states: usize,
    grid: Option<&'a Grid>,
}

impl Eval<'_> {
    fn round(&self, v: Vec<BigRational>) -> Vec<BigRational> {
        match self.grid {
            Some(g) => v.iter().map(|x| g.value(g.alpha(x))).collect(),
            None => v,
        }
    }

    fn zip(&self, a: Vec<BigRational>, b: Vec<BigRational>, op: impl Fn(BigRational, BigRational) -> BigRational) -> Vec<BigRational> {
        a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
    }

    fn eval(&self, t: &Rhs, x: &[Vec<BigRational>]) -> Vec<BigRational> {
        let one = BigRational::one;
        match t {
            Rhs::Const(r) => self.round(vec![r.clone(); self.states]),
            Rhs::Var(i) => x[*i].clone(),
            Rhs::Prop(v) => self.round(v.clone()),
            Rhs::Scale(r, a) => self.round(self.eval(a, x).into_iter().map(|v| r * v).collect()),
            Rhs::Join(a, b) => self.zip(self.eval(a, x), self.eval(b, x), |p, q| p.max(q)),
            Rhs::Meet(a, b) => self.zip(self.eval(a, x), self.eval(b, x), |p, q| p.min(q)),
            Rhs::Plus(a, b) => self.zip(self.eval(a, x), self.eval(b, x), |p, q| (p + q).min(one())),
            Rhs::Times(a, b) => self.zip(self.eval(a, x), self.eval(b, x), |p, q| (p + q - one()).max(BigRational::zero())),
            Rhs::Diamond(a) => self.round(self.pndt.expect("checked").diamond(&self.eval(a, x))),
            Rhs::Box(a) => self.round(self.pndt.expect("checked").boxed(&self.eval(a, x))),
        }
    }
}

struct Builder<'a> {
    pndt: Option<&'a Pndt>,
    index: BTreeMap<String, usize>,
    equations: Vec<Option<(String, Sign, Rhs)>>,
}

impl Builder<'_> {
    fn number(&mut self, t: &Term) {
        match t {
            Term::Scale(_, a) | Term::Diamond(a) | Term::Box(a) => self.number(a),
            Term::Join(a, b) | Term::Meet(a, b) | Term::Plus(a, b) | Term::Times(a, b) => {
                self.number(a);
                self.number(b);
            }
            Term::Fix(_, x, a) => {
                self.number(a);
                let k = self.index.len();
                self.index.insert(x.clone(), k);
            }
            _ => {}
        }
    }

    fn modal(&self, what: &str) -> Result<&Pndt> {
        self.pndt
            .ok_or_else(|| Error::InvalidArgument(format!("{what} needs a PNDT")))
    }

    fn prop(&self, p: &str) -> Result<Vec<BigRational>> {
        let pndt = self.modal(&format!("proposition '{p}'"))?;
        pndt.prop(p)
            .map(<[BigRational]>::to_vec)
            .ok_or_else(|| Error::InvalidArgument(format!("free variable '{p}' has no valuation")))
    }

    fn rhs(&mut self, t: &Term) -> Result<Rhs> {
        let bin = |s: &mut Self, a: &Term, b: &Term| -> Result<(Box<Rhs>, Box<Rhs>)> { Ok((Box::new(s.rhs(a)?), Box::new(s.rhs(b)?))) };
        Ok(match t {
            Term::Const(r) => Rhs::Const(r.clone()),
            Term::Var(x) => Rhs::Var(self.index[x]),
            Term::Prop(p) => Rhs::Prop(self.prop(p)?),
            Term::Complement(p) => Rhs::Prop(self.prop(p)?.into_iter().map(|v| BigRational::one() - v).collect()),
            Term::Scale(r, a) => Rhs::Scale(r.clone(), Box::new(self.rhs(a)?)),
            Term::Join(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Rhs::Join(a, b)
            }
            Term::Meet(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Rhs::Meet(a, b)
            }
            Term::Plus(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Rhs::Plus(a, b)
            }
            Term::Times(a, b) => {
                let (a, b) = bin(self, a, b)?;
                Rhs::Times(a, b)
            }
            Term::Diamond(a) => {
                self.modal("'<>'")?;
                Rhs::Diamond(Box::new(self.rhs(a)?))
            }
            Term::Box(a) => {
                self.modal("'[]'")?;
                Rhs::Box(Box::new(self.rhs(a)?))
            }
            Term::Fix(sign, x, body) => {
                let k = self.index[x];
                let r = self.rhs(body)?;
                self.equations[k] = Some((x.clone(), *sign, r));
                Rhs::Var(k)
            }
        })
    }
}

/// Equations innermost first, with the index of the outermost variable.
/// A term that is not a fixpoint gets a final equation `x =ν t`.
struct Compiled {
    equations: Vec<(String, Sign, Rhs, String)>,
    target: usize,
    states: Vec<String>,
}

fn compile(t: &Term, pndt: Option<&Pndt>) -> Result<Compiled> {
    let mut b = Builder {
        pndt,
        index: BTreeMap::new(),
        equations: Vec::new(),
    };
    b.number(t);
    b.equations = vec![None; b.index.len()];
    let top = b.rhs(t)?;
    let mut equations: Vec<(String, Sign, Rhs)> = b.equations.into_iter().map(Option::unwrap).collect();
    let target = match t {
        Term::Fix(_, x, _) => b.index[x],
        _ => {
            let mut name = "x".to_string();
            while b.index.contains_key(&name) {
                name.push('\'');
            }
            equations.push((name, Sign::Nu, top));
            equations.len() - 1
        }
    };
    let mut descriptions = BTreeMap::new();
    describe(t, &mut descriptions);
    let equations = equations
        .into_iter()
        .map(|(name, sign, rhs)| {
            let d = descriptions.get(&name).cloned().unwrap_or_else(|| t.to_string());
            (name, sign, rhs, d)
        })
        .collect();
    let states = match pndt {
        Some(p) => p.states().to_vec(),
        None => vec!["*".to_string()],
    };
    Ok(Compiled {
        equations,
        target,
        states,
    })
}

/// Equations written out one by one; bodies contain no fixpoints and
/// the last equation is the target.
fn compile_equations(eqs: &[(String, Sign, Term)], pndt: Option<&Pndt>) -> Result<Compiled> {
    let mut b = Builder {
        pndt,
        index: eqs.iter().enumerate().map(|(k, (x, _, _))| (x.clone(), k)).collect(),
        equations: Vec::new(),
    };
    let mut equations = Vec::with_capacity(eqs.len());
    for (name, sign, body) in eqs {
        if flatten(body) != *body {
            return Err(Error::InvalidArgument(format!(
                "equation '{name}' contains a fixpoint; write it as a separate equation"
            )));
        }
        equations.push((name.clone(), *sign, b.rhs(body)?, body.to_string()));
    }
    let states = match pndt {
        Some(p) => p.states().to_vec(),
        None => vec!["*".to_string()],
    };
    Ok(Compiled {
        target: equations.len().saturating_sub(1),
        equations,
        states,
    })
}

fn describe(t: &Term, out: &mut BTreeMap<String, String>) {
    match t {
        Term::Scale(_, a) | Term::Diamond(a) | Term::Box(a) => describe(a, out),
        Term::Join(a, b) | Term::Meet(a, b) | Term::Plus(a, b) | Term::Times(a, b) => {
            describe(a, out);
            describe(b, out);
        }
        Term::Fix(_, x, a) => {
            describe(a, out);
            out.insert(x.clone(), flatten(a).to_string());
        }
        _ => {}
    }
}

/// Replaces nested fixpoints by their variables.
fn flatten(t: &Term) -> Term {
    let b = |a: &Term| Box::new(flatten(a));
    match t {
        Term::Fix(_, x, _) => Term::Var(x.clone()),
        Term::Scale(r, a) => Term::Scale(r.clone(), b(a)),
        Term::Diamond(a) => Term::Diamond(b(a)),
        Term::Box(a) => Term::Box(b(a)),
        Term::Join(x, y) => Term::Join(b(x), b(y)),
        Term::Meet(x, y) => Term::Meet(b(x), b(y)),
        Term::Plus(x, y) => Term::Plus(b(x), b(y)),
        Term::Times(x, y) => Term::Times(b(x), b(y)),
        other => other.clone(),
    }
}

/// The exact system over `[0,1]^S`, solved by ε-iteration.
pub fn exact_system(t: &Term, pndt: Option<&Pndt>) -> Result<(EquationSystem<Pointwise<RationalInterval>>, usize)> {
    build_exact(compile(t, pndt)?, pndt)
}

/// [`exact_system`] for equations written out one by one.
pub fn exact_system_of(
    eqs: &[(String, Sign, Term)],
    pndt: Option<&Pndt>,
) -> Result<EquationSystem<Pointwise<RationalInterval>>> {
    Ok(build_exact(compile_equations(eqs, pndt)?, pndt)?.0)
}

fn build_exact(c: Compiled, pndt: Option<&Pndt>) -> Result<(EquationSystem<Pointwise<RationalInterval>>, usize)> {
    let n = c.states.len();
    let m = c.equations.len();
    let owned = pndt.cloned().map(Arc::new);
    let eqs = c
        .equations
        .into_iter()
        .map(|(name, sign, rhs, d)| {
            let p = owned.clone();
            let f = MonotoneFunction::new(m, d, move |x: &[Vec<BigRational>]| {
                Eval {
                    pndt: p.as_deref(),
                    states: n,
                    grid: None,
                }
                .eval(&rhs, x)
            });
            Equation::new(name, sign, f)
        })
        .collect();
    let lat = Arc::new(Pointwise::new(c.states, RationalInterval));
    Ok((EquationSystem::unchecked(lat, eqs)?, c.target))
}

/// The operator-wise abstraction over `([0,1]/n)^S`.
pub fn grid_system(t: &Term, pndt: Option<&Pndt>, n: u32) -> Result<(EquationSystem<Pointwise<Grid>>, usize)> {
    build_grid(compile(t, pndt)?, pndt, n)
}

/// [`grid_system`] for equations written out one by one.
pub fn grid_system_of(eqs: &[(String, Sign, Term)], pndt: Option<&Pndt>, n: u32) -> Result<EquationSystem<Pointwise<Grid>>> {
    Ok(build_grid(compile_equations(eqs, pndt)?, pndt, n)?.0)
}

fn build_grid(c: Compiled, pndt: Option<&Pndt>, n: u32) -> Result<(EquationSystem<Pointwise<Grid>>, usize)> {
    let grid = Arc::new(Grid::new(n)?);
    let states = c.states.len();
    let m = c.equations.len();
    let owned = pndt.cloned().map(Arc::new);
    let eqs = c
        .equations
        .into_iter()
        .map(|(name, sign, rhs, d)| {
            let (p, g) = (owned.clone(), Arc::clone(&grid));
            let f = MonotoneFunction::new(m, format!("{d} on the {n}-grid"), move |x: &[Vec<u32>]| {
                let vals: Vec<Vec<BigRational>> = x.iter().map(|v| v.iter().map(|k| g.value(*k)).collect()).collect();
                let e = Eval {
                    pndt: p.as_deref(),
                    states,
                    grid: Some(&g),
                };
                e.eval(&rhs, &vals).iter().map(|r| g.alpha(r)).collect()
            });
            Equation::new(name, sign, f)
        })
        .collect();
    let lat = Arc::new(Pointwise::new(c.states, (*grid).clone()));
    Ok((EquationSystem::unchecked(lat, eqs)?, c.target))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    Grid(u32),
    Epsilon(BigRational),
}

#[derive(Clone, Debug, Serialize)]
pub struct StateValue {
    pub state: String,
    /// Exact rational, as `p/q`.
    pub value: String,
    pub decimal: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LukasResult {
    pub mode: String,
    pub target: String,
    /// Values of the target variable per state.
    pub values: Vec<StateValue>,
    /// Values of every variable, innermost first.
    pub variables: BTreeMap<String, Vec<StateValue>>,
    pub converged: bool,
    pub note: String,
}

impl LukasResult {
    /// The target value at a state, as an exact rational string.
    pub fn value_at(&self, state: &str) -> Option<&str> {
        self.values.iter().find(|v| v.state == state).map(|v| v.value.as_str())
    }
}

fn values(states: &[String], v: &[BigRational]) -> Vec<StateValue> {
    states
        .iter()
        .zip(v)
        .map(|(s, r)| StateValue {
            state: s.clone(),
            value: show_rational(r),
            decimal: r.to_f64().unwrap_or(f64::NAN),
        })
        .collect()
}

/// Evaluates a closed term, over a PNDT when it is modal.
pub fn evaluate(t: &Term, pndt: Option<&Pndt>, mode: &Mode) -> Result<LukasResult> {
    match mode {
        Mode::Grid(n) => {
            let (sys, target) = grid_system(t, pndt, *n)?;
            let sol = solve(&sys)?;
            let g = sys.lattice().inner();
            let states = sys.lattice().states().to_vec();
            let as_q = |v: &Vec<u32>| v.iter().map(|k| g.value(*k)).collect::<Vec<_>>();
            Ok(LukasResult {
                mode: format!("grid:{n}"),
                target: sys.equations()[target].name.clone(),
                values: values(&states, &as_q(&sol[target])),
                variables: sys
                    .equations()
                    .iter()
                    .zip(&sol)
                    .map(|(e, v)| (e.name.clone(), values(&states, &as_q(v))))
                    .collect(),
                converged: true,
                note: format!(
                    "sound over-approximation: each value is at least the exact value and exceeds it by the accumulated rounding to multiples of 1/{n}"
                ),
            })
        }
        Mode::Epsilon(tol) => {
            let (sys, target) = exact_system(t, pndt)?;
            let report = solve_epsilon(&sys, tol, DEFAULT_MAX_ITER)?;
            let states = sys.lattice().states().to_vec();
            Ok(LukasResult {
                mode: format!("epsilon:{}", show_rational(tol)),
                target: sys.equations()[target].name.clone(),
                values: values(&states, &report.values[target]),
                variables: sys
                    .equations()
                    .iter()
                    .zip(&report.values)
                    .map(|(e, v)| (e.name.clone(), values(&states, v)))
                    .collect(),
                converged: report.converged,
                note: if report.converged {
                    "iteration stopped once successive iterates differed by less than the tolerance; least fixpoints are approached from below and greatest ones from above".into()
                } else {
                    format!("no convergence within {DEFAULT_MAX_ITER} iterations; values are the last iterates")
                },
            })
        }
    }
}
