//! Tokens shared by the formula and term parsers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Num(BigRational),
    Sym(&'static str),
}

/// Multi-character symbols first, so that `(+)` is not read as `(`.
const SYMBOLS: [&str; 15] = ["(+)", "(.)", "[]", "<>", "\\/", "/\\", "->", "(", ")", ".", "&", "|", "*", "~", "="];

#[derive(Clone, Debug)]
pub(crate) struct Lexed {
    pub toks: Vec<(Tok, usize)>,
    pub line: usize,
    pub end: usize,
}

/// Splits `src` into tokens carrying 1-based columns, for text that
/// starts `offset` characters into its line.
pub(crate) fn lex_at(src: &str, line: usize, offset: usize) -> Result<Lexed> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    'outer: while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let col = offset + i + 1;
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '/') {
                // `0.5/\x` ends the number at the meet symbol
                if chars[i] == '/' && chars.get(i + 1) == Some(&'\\') {
                    break;
                }
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let text = text.trim_end_matches('.');
            i = start + text.chars().count();
            toks.push((Tok::Num(parse_rational(text).map_err(|m| Error::parse(line, col, m))?), col));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        for s in SYMBOLS {
            let n = s.chars().count();
            if chars[i..].iter().take(n).copied().eq(s.chars()) {
                toks.push((Tok::Sym(s), col));
                i += n;
                continue 'outer;
            }
        }
        return Err(Error::parse(line, col, format!("unexpected character '{c}'")));
    }
    Ok(Lexed {
        toks,
        line,
        end: offset + chars.len() + 1,
    })
}

/// Parses `3`, `0.375`, `3/8` or `1e-6` exactly.
pub fn parse_rational(text: &str) -> std::result::Result<BigRational, String> {
    let bad = || format!("malformed number '{text}'");
    if let Some((mantissa, exp)) = text.split_once(['e', 'E']) {
        let exp: i32 = exp.parse().map_err(|_| bad())?;
        let m = parse_rational(mantissa).map_err(|_| bad())?;
        let scale = BigRational::from_integer(num_traits::pow(BigInt::from(10), exp.unsigned_abs() as usize));
        return Ok(if exp < 0 { m / scale } else { m * scale });
    }
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(format!("zero denominator in '{text}'"));
        }
        return Ok(BigRational::new(n, d));
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.is_empty() || !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = (0..frac.len()).fold(BigInt::one(), |acc, _| acc * 10);
    Ok(BigRational::new(digits, scale))
}

/// A cursor over lexed tokens.
pub(crate) struct Cursor {
    lexed: Lexed,
    pos: usize,
}

impl Cursor {
    pub fn new(lexed: Lexed) -> Self {
        Cursor { lexed, pos: 0 }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.lexed.toks.get(self.pos).map(|(t, _)| t)
    }

    pub fn col(&self) -> usize {
        self.lexed.toks.get(self.pos).map_or(self.lexed.end, |(_, c)| *c)
    }

    pub fn next(&mut self) -> Option<Tok> {
        let t = self.lexed.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    pub fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(t)) if *t == s)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.at_sym(s);
        if hit {
            self.pos += 1;
        }
        hit
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{s}'")))
        }
    }

    pub fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected an identifier")),
        }
    }

    pub fn done(&self) -> bool {
        self.pos >= self.lexed.toks.len()
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.done() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Ident(s)) => format!("'{s}'"),
            Some(Tok::Num(n)) => format!("'{n}'"),
            Some(Tok::Sym(s)) => format!("'{s}'"),
        };
        Error::parse(self.lexed.line, self.col(), format!("{}, found {found}", msg.into()))
    }
}
