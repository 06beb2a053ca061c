//! Gate sequences and their text form.
//!
//! The text form concatenates gate labels (`Gx`, `Gy`, `Gi`); a parenthesized
//! group followed by `^n` is repeated `n` times, and `{}` is the empty
//! sequence. Gates are applied left to right, e.g. `Gx(GxGi)^4Gy`.

use std::fmt;
use std::str::FromStr;

use crate::dynamics::Gate;
use crate::{Error, Result};

/// A run of gates repeated `power` times.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    pub gates: Vec<Gate>,
    pub power: u32,
}

/// A gate sequence kept in segment form so that repeated germs can be
/// evaluated by powering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Circuit {
    pub segments: Vec<Segment>,
}

impl Circuit {
    pub fn empty() -> Self {
        Circuit::default()
    }

    pub fn from_gates(gates: &[Gate]) -> Self {
        let mut c = Circuit::empty();
        c.push(gates, 1);
        c
    }

    /// `prep · germ^power · meas`.
    pub fn sandwich(prep: &[Gate], germ: &[Gate], power: u32, meas: &[Gate]) -> Self {
        let mut c = Circuit::empty();
        c.push(prep, 1);
        c.push(germ, power);
        c.push(meas, 1);
        c
    }

    /// Appends a segment, merging plain runs and dropping empty ones.
    pub fn push(&mut self, gates: &[Gate], power: u32) {
        if gates.is_empty() || power == 0 {
            return;
        }
        if power == 1 {
            if let Some(last) = self.segments.last_mut() {
                if last.power == 1 {
                    last.gates.extend_from_slice(gates);
                    return;
                }
            }
        }
        self.segments.push(Segment {
            gates: gates.to_vec(),
            power,
        });
    }

    /// Gates in application order.
    pub fn expand(&self) -> Vec<Gate> {
        let mut out = Vec::with_capacity(self.len());
        for s in &self.segments {
            for _ in 0..s.power {
                out.extend_from_slice(&s.gates);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.gates.len() * s.power as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn count(&self, gate: Gate) -> usize {
        self.segments
            .iter()
            .map(|s| s.gates.iter().filter(|&&g| g == gate).count() * s.power as usize)
            .sum()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.segments.is_empty() {
            return f.write_str("{}");
        }
        for s in &self.segments {
            if s.power == 1 {
                for g in &s.gates {
                    f.write_str(g.label())?;
                }
            } else {
                f.write_str("(")?;
                for g in &s.gates {
                    f.write_str(g.label())?;
                }
                write!(f, ")^{}", s.power)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "{}" {
            return Ok(Circuit::empty());
        }
        let bytes = s.as_bytes();
        let mut pos = 0;
        let mut out = Circuit::empty();
        while pos < bytes.len() {
            let (gates, power) = parse_item(s, &mut pos)?;
            out.push(&gates, power);
        }
        Ok(out)
    }
}

fn parse_err(s: &str, pos: usize, what: &str) -> Error {
    Error::Parse {
        line: 0,
        message: format!("{what} at byte {pos} of {s:?}"),
    }
}

/// One gate, or one parenthesized group with its repetition count.
fn parse_item(s: &str, pos: &mut usize) -> Result<(Vec<Gate>, u32)> {
    let bytes = s.as_bytes();
    if bytes[*pos] == b'(' {
        *pos += 1;
        let mut inner = Vec::new();
        loop {
            if *pos >= bytes.len() {
                return Err(parse_err(s, *pos, "unclosed '('"));
            }
            if bytes[*pos] == b')' {
                *pos += 1;
                break;
            }
            let (g, p) = parse_item(s, pos)?;
            for _ in 0..p {
                inner.extend_from_slice(&g);
            }
        }
        let mut power = 1;
        if *pos < bytes.len() && bytes[*pos] == b'^' {
            *pos += 1;
            let start = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            power = s[start..*pos]
                .parse()
                .map_err(|_| parse_err(s, start, "expected repetition count"))?;
        }
        return Ok((inner, power));
    }
    if *pos + 2 <= bytes.len() {
        if let Some(g) = s.get(*pos..*pos + 2).and_then(Gate::from_label) {
            *pos += 2;
            return Ok((vec![g], 1));
        }
    }
    Err(parse_err(s, *pos, "unknown gate label"))
}
