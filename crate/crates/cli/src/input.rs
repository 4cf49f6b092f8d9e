//! Loading inputs and resolving names against them.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use fixgame::apps::parse_rational;
use fixgame::eqsys::EquationSystem;
use fixgame::lattice::{Grid, Lattice, Pointwise, Powerset, StateSet};
use num_rational::BigRational;

/// An error in the user's input, reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(InputError(msg.into()))
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))
}

/// Parses a file, prefixing parse errors with its path.
pub fn parse_file<T>(path: &Path, parse: impl FnOnce(&str) -> fixgame::Result<T>) -> Result<T> {
    let src = read(path)?;
    parse(&src).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

/// Inline text, or the contents of a file when written `@path`.
pub fn text_or_file(arg: &str) -> Result<(String, String)> {
    match arg.strip_prefix('@') {
        Some(path) => Ok((read(Path::new(path))?, path.to_string())),
        None => Ok((arg.to_string(), "<argument>".to_string())),
    }
}

pub fn parse_text<T>(arg: &str, parse: impl FnOnce(&str) -> fixgame::Result<T>) -> Result<T> {
    let (src, origin) = text_or_file(arg)?;
    parse(src.trim()).map_err(|e| input_error(format!("{origin}: {e}")))
}

pub fn rational(text: &str) -> Result<BigRational> {
    parse_rational(text).map_err(input_error)
}

pub fn tolerance(text: &str) -> Result<BigRational> {
    let tol = rational(text)?;
    if tol <= BigRational::from_integer(0.into()) {
        bail!(input_error(format!("tolerance must be positive, found '{text}'")));
    }
    Ok(tol)
}

pub fn variable<L: Lattice>(sys: &EquationSystem<L>, name: &str) -> Result<usize> {
    sys.index_of(name).ok_or_else(|| {
        let names: Vec<&str> = sys.equations().iter().map(|e| e.name.as_str()).collect();
        input_error(format!("unknown variable '{name}', expected one of {}", names.join(", ")))
    })
}

/// The basis index of the singleton `{state}`.
pub fn state_element(lat: &Powerset, state: &str) -> Result<usize> {
    let i = lat
        .index_of(state)
        .ok_or_else(|| input_error(format!("unknown state '{state}'")))?;
    lat.basis_index(&lat.set_of([i])).context("singletons are basis elements")
}

/// The basis index of `state=value` on a pointwise grid, the function
/// that is `value` at `state` and 0 elsewhere.
pub fn grid_element(lat: &Pointwise<Grid>, spec: &str) -> Result<usize> {
    let (state, value) = spec
        .split_once('=')
        .ok_or_else(|| input_error(format!("expected state=value, found '{spec}'")))?;
    let s = lat
        .state_index(state.trim())
        .ok_or_else(|| input_error(format!("unknown state '{}'", state.trim())))?;
    let v = rational(value.trim())?;
    let g = lat.inner();
    let k = g.alpha(&v);
    if g.value(k) != v || k == 0 {
        bail!(input_error(format!(
            "{} is not a non-zero point of the grid with resolution {}",
            value.trim(),
            g.resolution()
        )));
    }
    let mut e = lat.bot();
    e[s] = k;
    lat.basis_index(&e).context("grid points are basis elements")
}

/// Lines `x -> y1 y2` relating concrete states to abstract ones.
pub fn parse_map(src: &str, concrete: &Powerset, abstract_: &Powerset) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (no, raw) in src.lines().enumerate() {
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let err = |m: String| input_error(format!("line {}: {m}", no + 1));
        let (x, ys) = text
            .split_once("->")
            .ok_or_else(|| err(format!("expected 'state -> state ...', found '{text}'")))?;
        let x = concrete
            .index_of(x.trim())
            .ok_or_else(|| err(format!("unknown concrete state '{}'", x.trim())))?;
        for y in ys.split_whitespace() {
            let y = abstract_
                .index_of(y)
                .ok_or_else(|| err(format!("unknown abstract state '{y}'")))?;
            pairs.push((x, y));
        }
    }
    Ok(pairs)
}

fn state_set(lat: &Powerset, text: &str) -> std::result::Result<StateSet, String> {
    let inner = text
        .trim()
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| format!("expected a set {{a,b,...}}, found '{}'", text.trim()))?;
    let names = inner.split(|c: char| c == ',' || c.is_whitespace()).filter(|n| !n.is_empty());
    lat.set_of_names(names).map_err(|e| e.to_string())
}

/// Lines `{a,b} -> {a,b,c}` tabulating an up-to function. Sets without a
/// line map to themselves.
pub fn parse_table(src: &str, lat: &Powerset) -> Result<HashMap<StateSet, StateSet>> {
    let mut table = HashMap::new();
    for (no, raw) in src.lines().enumerate() {
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let err = |m: String| input_error(format!("line {}: {m}", no + 1));
        let (x, y) = text
            .split_once("->")
            .ok_or_else(|| err(format!("expected '{{...}} -> {{...}}', found '{text}'")))?;
        let x = state_set(lat, x).map_err(err)?;
        let y = state_set(lat, y).map_err(err)?;
        if table.insert(x, y).is_some() {
            return Err(err("set tabulated twice".into()));
        }
    }
    Ok(table)
}
