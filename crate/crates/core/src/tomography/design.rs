//! The fixed single-qubit GST experiment design.

use std::collections::HashSet;

use super::sequence::Circuit;
use crate::dynamics::Gate::{self, Idle, SqrtX, SqrtY};

/// Longest germ section, in gates.
pub const MAX_GERM_SECTION: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GstDesign {
    pub fiducials: Vec<Vec<Gate>>,
    pub germs: Vec<Vec<Gate>>,
    /// Repetition counts used for each germ, ascending.
    pub powers: Vec<Vec<u32>>,
    pub sequences: Vec<Circuit>,
}

impl GstDesign {
    /// Index of the fiducial pair `prep · meas` in `sequences`.
    pub fn find(&self, gates: &[Gate]) -> Option<usize> {
        self.sequences.iter().position(|c| c.expand() == gates)
    }
}

pub fn standard_fiducials() -> Vec<Vec<Gate>> {
    vec![
        vec![],
        vec![SqrtX],
        vec![SqrtY],
        vec![SqrtX, SqrtX],
        vec![SqrtX, SqrtX, SqrtX],
        vec![SqrtY, SqrtY, SqrtY],
    ]
}

pub fn standard_germs() -> Vec<Vec<Gate>> {
    vec![
        vec![SqrtX],
        vec![SqrtY],
        vec![Idle],
        vec![SqrtX, SqrtY],
        vec![SqrtX, SqrtX, SqrtY],
        vec![SqrtX, Idle],
        vec![SqrtY, Idle],
        vec![SqrtX, SqrtY, Idle],
    ]
}

/// Powers 1, 2, 4, … below the longest repetition that fits the germ section,
/// followed by that longest repetition, all capped at `max_power`.
fn germ_powers(germ_len: usize, max_power: u32) -> Vec<u32> {
    let longest = ((MAX_GERM_SECTION / germ_len) as u32).min(max_power);
    let mut out = Vec::new();
    let mut p = 1;
    while p < longest {
        out.push(p);
        p *= 2;
    }
    if longest >= 1 {
        out.push(longest);
    }
    out
}

/// Builds the design. The linear-inversion sequences (every fiducial pair,
/// with and without one gate between) always come first; germ powers are
/// capped at `max_power`. Sequences with identical gate lists appear once.
pub fn make_design(max_power: u32) -> GstDesign {
    let fiducials = standard_fiducials();
    let germs = standard_germs();
    let powers: Vec<Vec<u32>> = germs.iter().map(|g| germ_powers(g.len(), max_power)).collect();

    let mut seen = HashSet::new();
    let mut sequences = Vec::new();
    let mut add = |c: Circuit| {
        if seen.insert(c.expand()) {
            sequences.push(c);
        }
    };

    for prep in &fiducials {
        for meas in &fiducials {
            add(Circuit::sandwich(prep, &[], 0, meas));
        }
    }
    for g in Gate::ALL {
        for prep in &fiducials {
            for meas in &fiducials {
                add(Circuit::sandwich(prep, &[g], 1, meas));
            }
        }
    }
    for (germ, ps) in germs.iter().zip(&powers) {
        for &p in ps {
            for prep in &fiducials {
                for meas in &fiducials {
                    add(Circuit::sandwich(prep, germ, p, meas));
                }
            }
        }
    }

    GstDesign {
        fiducials,
        germs,
        powers,
        sequences,
    }
}
