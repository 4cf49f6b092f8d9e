//! A text format for equation systems, one equation per line.
//!
//! ```text
//! domain: mucalc
//! states: a b c d e
//! edges: a->a a->b a->c b->d b->e c->c d->d e->e
//! atom p: b d e
//! x1 =nu p & [] x1
//! x2 =mu x1 | <> x2
//! ```
//!
//! The `domain` line picks the front-end. `mucalc` systems live over the
//! subsets of a transition system, declared with its usual lines, and use
//! formula syntax on the right. `lukas` systems live over `[0,1]`, or
//! over `[0,1]^S` when PNDT `state` and `prop` lines are present, and
//! use Łukasiewicz term syntax. They may carry a `grid: n` or
//! `epsilon: tol` line. Bodies may mention any equation variable but no
//! fixpoint binders.

use num_rational::BigRational;

use super::lexer::parse_rational;
use super::lukas::{self, Mode, Term};
use super::mucalc::{self, Formula};
use super::pndt::Pndt;
use super::ts::TransitionSystem;
use crate::eqsys::{EquationSystem, Sign};
use crate::error::{Error, Result};
use crate::lattice::{Grid, Pointwise, Powerset, RationalInterval};

#[derive(Clone, Debug)]
pub enum Domain {
    MuCalculus(TransitionSystem),
    Lukasiewicz { pndt: Option<Pndt>, mode: Option<Mode> },
}

#[derive(Clone, Debug)]
pub enum Body {
    Formula(Formula),
    Term(Term),
}

#[derive(Clone, Debug)]
pub struct SystemFile {
    pub domain: Domain,
    pub equations: Vec<(String, Sign, Body)>,
}

/// Splits `x =mu rest` into its parts and the column where `rest` starts.
fn equation_line(text: &str) -> Option<(&str, Sign, usize)> {
    let eq = text.find('=')?;
    let name = text[..eq].trim();
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'') {
        return None;
    }
    let after = &text[eq + 1..];
    let sign = match after.get(..2) {
        Some("mu") => Sign::Mu,
        Some("nu") => Sign::Nu,
        _ => return None,
    };
    if !after[2..].starts_with(char::is_whitespace) {
        return None;
    }
    Some((name, sign, text[..eq + 3].chars().count()))
}

impl SystemFile {
    pub fn parse(src: &str) -> Result<Self> {
        let mut domain: Option<(usize, String)> = None;
        let mut mode: Option<Mode> = None;
        // declaration lines keep their numbers for the sub-parsers
        let mut rest = Vec::new();
        let mut raw_eqs = Vec::new();
        for (no, raw) in src.lines().enumerate() {
            let line = no + 1;
            let text = raw.split('#').next().unwrap_or("");
            let trimmed = text.trim();
            if let Some((name, sign, col)) = equation_line(text) {
                raw_eqs.push((line, name.to_string(), sign, text[text.find('=').unwrap() + 3..].to_string(), col));
                rest.push(String::new());
                continue;
            }
            if let Some(v) = trimmed.strip_prefix("domain:") {
                domain = Some((line, v.trim().to_string()));
                rest.push(String::new());
            } else if let Some(v) = trimmed.strip_prefix("grid:") {
                let n = v.trim().parse::<u32>().ok().filter(|n| *n > 0);
                mode = Some(Mode::Grid(n.ok_or_else(|| Error::parse(line, 1, "grid resolution must be a positive integer"))?));
                rest.push(String::new());
            } else if let Some(v) = trimmed.strip_prefix("epsilon:") {
                let tol = parse_rational(v.trim()).map_err(|m| Error::parse(line, 1, m))?;
                mode = Some(Mode::Epsilon(tol));
                rest.push(String::new());
            } else {
                rest.push(raw.to_string());
            }
        }
        let Some((dline, domain)) = domain else {
            return Err(Error::parse(1, 1, "missing 'domain: mucalc' or 'domain: lukas' line"));
        };
        if raw_eqs.is_empty() {
            return Err(Error::parse(1, 1, "no equations; expected lines 'x =mu ...' or 'x =nu ...'"));
        }
        let names: Vec<String> = raw_eqs.iter().map(|e| e.1.clone()).collect();
        for (k, (line, name, ..)) in raw_eqs.iter().enumerate() {
            if names[..k].contains(name) {
                return Err(Error::parse(*line, 1, format!("variable '{name}' defined twice")));
            }
        }
        let declarations = rest.join("\n");
        let (domain, parse_body): (Domain, &dyn Fn(&str, usize, usize) -> Result<Body>) = match domain.as_str() {
            "mucalc" => {
                if mode.is_some() {
                    return Err(Error::parse(dline, 1, "grid and epsilon modes only apply to lukas systems"));
                }
                (
                    Domain::MuCalculus(TransitionSystem::parse(&declarations)?),
                    &|s, l, c| Formula::parse_in(s, l, c, &names).map(Body::Formula),
                )
            }
            "lukas" => {
                let pndt = if declarations.trim().is_empty() {
                    None
                } else {
                    Some(Pndt::parse(&declarations)?)
                };
                (
                    Domain::Lukasiewicz { pndt, mode },
                    &|s, l, c| Term::parse_in(s, l, c, &names).map(Body::Term),
                )
            }
            other => return Err(Error::parse(dline, 1, format!("unknown domain '{other}', expected mucalc or lukas"))),
        };
        let equations = raw_eqs
            .iter()
            .map(|(line, name, sign, body, col)| Ok((name.clone(), *sign, parse_body(body, *line, *col)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SystemFile { domain, equations })
    }

    pub fn names(&self) -> Vec<String> {
        self.equations.iter().map(|e| e.0.clone()).collect()
    }

    fn formulas(&self) -> Vec<(String, Sign, Formula)> {
        self.equations
            .iter()
            .filter_map(|(x, s, b)| match b {
                Body::Formula(f) => Some((x.clone(), *s, f.clone())),
                Body::Term(_) => None,
            })
            .collect()
    }

    fn terms(&self) -> Vec<(String, Sign, Term)> {
        self.equations
            .iter()
            .filter_map(|(x, s, b)| match b {
                Body::Term(t) => Some((x.clone(), *s, t.clone())),
                Body::Formula(_) => None,
            })
            .collect()
    }

    /// The system over subsets of states, for `mucalc` files.
    pub fn powerset_system(&self) -> Result<EquationSystem<Powerset>> {
        match &self.domain {
            Domain::MuCalculus(ts) => mucalc::system_of(&self.formulas(), ts, &Default::default()),
            Domain::Lukasiewicz { .. } => Err(Error::InvalidArgument("expected a mucalc system".into())),
        }
    }

    pub fn transition_system(&self) -> Option<&TransitionSystem> {
        match &self.domain {
            Domain::MuCalculus(ts) => Some(ts),
            Domain::Lukasiewicz { .. } => None,
        }
    }

    fn pndt(&self) -> Result<Option<&Pndt>> {
        match &self.domain {
            Domain::Lukasiewicz { pndt, .. } => Ok(pndt.as_ref()),
            Domain::MuCalculus(_) => Err(Error::InvalidArgument("expected a lukas system".into())),
        }
    }

    /// The mode given in the file, if any.
    pub fn mode(&self) -> Option<&Mode> {
        match &self.domain {
            Domain::Lukasiewicz { mode, .. } => mode.as_ref(),
            Domain::MuCalculus(_) => None,
        }
    }

    /// The exact system over `[0,1]^S`, for `lukas` files.
    pub fn exact_system(&self) -> Result<EquationSystem<Pointwise<RationalInterval>>> {
        lukas::exact_system_of(&self.terms(), self.pndt()?)
    }

    /// The operator-wise grid abstraction, for `lukas` files.
    pub fn grid_system(&self, n: u32) -> Result<EquationSystem<Pointwise<Grid>>> {
        lukas::grid_system_of(&self.terms(), self.pndt()?, n)
    }

    pub fn default_tolerance() -> BigRational {
        BigRational::new(1.into(), 1_000_000.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqsys::solve;
    use crate::lattice::Lattice;

    pub const FIG3C: &str = "domain: mucalc\nstates: a b c d e\nedges: a->a a->b a->c b->d b->e c->c d->d e->e\natom p: b d e\nx1 =nu p & [] x1\nx2 =mu x1 | <> x2\n";

    #[test]
    fn mucalc_files_solve_the_running_example() {
        let f = SystemFile::parse(FIG3C).unwrap();
        let sys = f.powerset_system().unwrap();
        let sol = solve(&sys).unwrap();
        let lat = sys.lattice();
        assert_eq!(lat.show(&sol[0]), "{b,d,e}");
        assert_eq!(lat.show(&sol[1]), "{a,b,d,e}");
    }

    #[test]
    fn lukas_files_on_the_grid() {
        let src = "domain: lukas\ngrid: 100\nx1 =mu (5/8 (+) 3/8*x2) (.) (1/2 \\/ (3/8 (+) 1/2*x1))\nx2 =nu x1\n";
        let f = SystemFile::parse(src).unwrap();
        assert_eq!(f.mode(), Some(&Mode::Grid(100)));
        let sol = solve(&f.grid_system(100).unwrap()).unwrap();
        assert_eq!(sol, vec![vec![22], vec![22]]);
    }

    #[test]
    fn lukas_files_with_a_pndt() {
        let src = "domain: lukas\nstate a: (1/3 a, 1/3 b, 1/3 c) (1/3 a, 1/6 b, 1/2 c)\nstate b: (1 b)\nstate c: (1 c)\nprop p: a=0 b=1 c=0\nx1 =nu p (.) [] x1\nx2 =mu x1 (+) [] x2\n";
        let f = SystemFile::parse(src).unwrap();
        let sol = solve(&f.grid_system(10).unwrap()).unwrap();
        assert_eq!(sol[1][0], 3);
    }

    #[test]
    fn diagnostics() {
        let err = SystemFile::parse("domain: mucalc\nstates: a\nx =mu x &").unwrap_err();
        assert_eq!(err.to_string(), "parse error at line 3, column 10: expected a formula, found end of input");
        let err = SystemFile::parse("states: a\nx =mu x").unwrap_err();
        assert!(err.to_string().contains("missing 'domain"));
        let err = SystemFile::parse("domain: mucalc\nstates: a\nx =mu x\nx =nu x").unwrap_err();
        assert!(err.to_string().contains("defined twice"));
        let err = SystemFile::parse("domain: mucalc\nstates: a\nx =mu mu y. y").unwrap();
        assert!(err.powerset_system().is_err());
        let err = SystemFile::parse("domain: lukas\nx =mu q").unwrap();
        assert!(err.exact_system().unwrap_err().to_string().contains("needs a PNDT"));
    }
}
