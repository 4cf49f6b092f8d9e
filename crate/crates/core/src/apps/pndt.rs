//! Probabilistic nondeterministic transition systems.
//!
//! ```text
//! state a: (1/3 a, 1/3 b, 1/3 c) (1/3 a, 1/6 b, 1/2 c)
//! state b: (1 b)
//! state c: (1 c)
//! prop p: a=0 b=1 c=0
//! ```
//!
//! Every state needs at least one distribution, since the modalities take
//! a max or min over them. Propositions default to 0 on unlisted states.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::lexer::parse_rational;
use super::ts::words_with_columns;
use crate::error::{Error, Result};

pub type Distribution = Vec<(usize, BigRational)>;

#[derive(Clone, Debug)]
pub struct Pndt {
    states: Vec<String>,
    steps: Vec<Vec<Distribution>>,
    props: BTreeMap<String, Vec<BigRational>>,
}

impl Pndt {
    pub fn new(states: Vec<String>, steps: Vec<Vec<Distribution>>) -> Result<Self> {
        if steps.len() != states.len() {
            return Err(Error::InvalidArgument(format!(
                "{} states but {} transition lists",
                states.len(),
                steps.len()
            )));
        }
        for (s, ds) in steps.iter().enumerate() {
            if ds.is_empty() {
                return Err(Error::InvalidArgument(format!("state '{}' has no distribution", states[s])));
            }
            for d in ds {
                check_distribution(d, states.len()).map_err(|m| Error::InvalidArgument(format!("state '{}': {m}", states[s])))?;
            }
        }
        Ok(Pndt {
            states,
            steps,
            props: BTreeMap::new(),
        })
    }

    pub fn with_prop(mut self, name: impl Into<String>, values: Vec<BigRational>) -> Result<Self> {
        if values.len() != self.len() || values.iter().any(|v| *v < BigRational::zero() || *v > BigRational::one()) {
            return Err(Error::InvalidArgument("a proposition needs one value in [0,1] per state".into()));
        }
        self.props.insert(name.into(), values);
        Ok(self)
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut states: Vec<String> = Vec::new();
        let mut raw_steps = Vec::new();
        let mut raw_props = Vec::new();
        for (no, raw) in src.lines().enumerate() {
            let line = no + 1;
            let text = raw.split('#').next().unwrap_or("");
            if text.trim().is_empty() {
                continue;
            }
            let Some(colon) = text.find(':') else {
                return Err(Error::parse(line, 1, "expected 'state NAME:' or 'prop NAME:'"));
            };
            let key = text[..colon].trim();
            let rest = &text[colon + 1..];
            let offset = text[..colon].chars().count() + 1;
            if let Some(name) = key.strip_prefix("state ") {
                let name = name.trim().to_string();
                if states.contains(&name) {
                    return Err(Error::parse(line, 1, format!("state '{name}' declared twice")));
                }
                states.push(name);
                raw_steps.push((line, offset + 1, distributions(rest, line, offset)?));
            } else if let Some(name) = key.strip_prefix("prop ") {
                let mut entries = Vec::new();
                for (w, c) in words_with_columns(rest, offset) {
                    let Some((s, v)) = w.split_once('=') else {
                        return Err(Error::parse(line, c, format!("malformed valuation '{w}', expected state=value")));
                    };
                    let v = parse_rational(v).map_err(|m| Error::parse(line, c, m))?;
                    if v > BigRational::one() {
                        return Err(Error::parse(line, c, format!("value of '{s}' exceeds 1")));
                    }
                    entries.push((s.to_string(), c, v));
                }
                raw_props.push((line, name.trim().to_string(), entries));
            } else {
                return Err(Error::parse(line, 1, format!("unknown declaration '{key}'")));
            }
        }
        let find = |line: usize, col: usize, s: &str| {
            states
                .iter()
                .position(|t| t == s)
                .ok_or_else(|| Error::parse(line, col, format!("unknown state '{s}'")))
        };
        let mut steps = Vec::new();
        for (line, col, ds) in &raw_steps {
            let mut out = Vec::new();
            for (dcol, d) in ds {
                let dist = d
                    .iter()
                    .map(|(s, c, p)| Ok((find(*line, *c, s)?, p.clone())))
                    .collect::<Result<Distribution>>()?;
                check_distribution(&dist, states.len()).map_err(|m| Error::parse(*line, *dcol, m))?;
                out.push(dist);
            }
            if out.is_empty() {
                return Err(Error::parse(*line, *col, "a state needs at least one distribution"));
            }
            steps.push(out);
        }
        let mut pndt = Pndt::new(states.clone(), steps)?;
        for (line, name, entries) in raw_props {
            let mut values = vec![BigRational::zero(); states.len()];
            for (s, c, v) in entries {
                values[find(line, c, &s)?] = v;
            }
            pndt = pndt.with_prop(name, values)?;
        }
        Ok(pndt)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown state '{name}'")))
    }

    pub fn distributions(&self, s: usize) -> &[Distribution] {
        &self.steps[s]
    }

    pub fn prop(&self, name: &str) -> Option<&[BigRational]> {
        self.props.get(name).map(Vec::as_slice)
    }

    fn expectations(&self, v: &[BigRational]) -> impl Iterator<Item = Vec<BigRational>> + '_ {
        let v = v.to_vec();
        self.steps.iter().map(move |ds| {
            ds.iter()
                .map(|d| d.iter().fold(BigRational::zero(), |acc, (t, p)| acc + p * &v[*t]))
                .collect()
        })
    }

    /// `♦(v)(x) = max over x → d of Σ_y d(y)·v(y)`.
    pub fn diamond(&self, v: &[BigRational]) -> Vec<BigRational> {
        self.expectations(v)
            .map(|e| e.into_iter().max().expect("at least one distribution"))
            .collect()
    }

    /// `□(v)(x) = min over x → d of Σ_y d(y)·v(y)`.
    pub fn boxed(&self, v: &[BigRational]) -> Vec<BigRational> {
        self.expectations(v)
            .map(|e| e.into_iter().min().expect("at least one distribution"))
            .collect()
    }
}

fn check_distribution(d: &Distribution, n: usize) -> std::result::Result<(), String> {
    if let Some((t, _)) = d.iter().find(|(t, _)| *t >= n) {
        return Err(format!("target {t} out of range"));
    }
    if d.iter().any(|(_, p)| *p < BigRational::zero()) {
        return Err("negative probability".into());
    }
    let sum: BigRational = d.iter().map(|(_, p)| p.clone()).sum();
    if !sum.is_one() {
        return Err(format!("distribution sums to {sum}, not 1"));
    }
    Ok(())
}

/// Parses `(p s, p s, ...) (...)` with positions for diagnostics.
/// Each distribution comes with the column of its opening parenthesis.
#[allow(clippy::type_complexity)]
fn distributions(rest: &str, line: usize, offset: usize) -> Result<Vec<(usize, Vec<(String, usize, BigRational)>)>> {
    let chars: Vec<char> = rest.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        if chars[i] != '(' {
            return Err(Error::parse(line, offset + i + 1, format!("expected '(', found '{}'", chars[i])));
        }
        let Some(close) = chars[i..].iter().position(|&c| c == ')') else {
            return Err(Error::parse(line, offset + i + 1, "unclosed distribution"));
        };
        let inner_start = i + 1;
        let inner: String = chars[inner_start..i + close].iter().collect();
        let mut entries = Vec::new();
        let mut col = inner_start;
        for part in inner.split(',') {
            let lead = part.chars().take_while(|c| c.is_whitespace()).count();
            let words: Vec<&str> = part.split_whitespace().collect();
            let at = offset + col + lead + 1;
            let [p, s] = words[..] else {
                return Err(Error::parse(line, at, format!("expected 'probability state', found '{}'", part.trim())));
            };
            let p = parse_rational(p).map_err(|m| Error::parse(line, at, m))?;
            let s_col = at + part.trim_start().find(s).unwrap_or(0);
            entries.push((s.to_string(), s_col, p));
            col += part.chars().count() + 1;
        }
        out.push((offset + i + 1, entries));
        i += close + 1;
    }
    Ok(out)
}
