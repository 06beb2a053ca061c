//! GST count data and its line-oriented text format.
//!
//! ```text
//! # seed = 7
//! # timestamp = unset
//! {} 1000 1000
//! GxGy(Gi)^16 1000 412
//! ```
//!
//! Each data line is `sequence shots dark_counts`, where `dark_counts` is the
//! number of shots that ended in |S⟩. Counts are written as integers when
//! they are whole and with round-trip precision otherwise (infinite-shot data).

use std::collections::HashMap;
use std::io::Write;

use super::sequence::Circuit;
use crate::dynamics::Gate;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub sequence: Circuit,
    pub shots: f64,
    /// Shots that ended in |S⟩.
    pub dark_counts: f64,
}

impl Record {
    /// Observed |S⟩ frequency.
    pub fn frequency_s(&self) -> f64 {
        self.dark_counts / self.shots
    }

    /// Observed |D⟩ frequency.
    pub fn frequency_d(&self) -> f64 {
        1.0 - self.frequency_s()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GstDataset {
    pub records: Vec<Record>,
    /// Ordered `key = value` metadata (seed, timestamp, model provenance).
    pub metadata: Vec<(String, String)>,
}

impl GstDataset {
    pub fn push(&mut self, sequence: Circuit, shots: f64, dark_counts: f64) -> Result<()> {
        check_counts(shots, dark_counts).map_err(Error::InvalidInput)?;
        self.records.push(Record {
            sequence,
            shots,
            dark_counts,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = value.into();
        match self.metadata.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.metadata.push((key, value)),
        }
    }

    pub fn sequences(&self) -> Vec<Circuit> {
        self.records.iter().map(|r| r.sequence.clone()).collect()
    }

    pub fn shots(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.shots).collect()
    }

    pub fn dark_counts(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.dark_counts).collect()
    }

    /// Observed |D⟩ frequencies keyed by expanded gate list. Repeated sequences are pooled.
    pub fn frequency_table(&self) -> HashMap<Vec<Gate>, f64> {
        let mut acc: HashMap<Vec<Gate>, (f64, f64)> = HashMap::new();
        for r in &self.records {
            let e = acc.entry(r.sequence.expand()).or_default();
            e.0 += r.shots;
            e.1 += r.shots - r.dark_counts;
        }
        acc.into_iter().map(|(k, (n, d))| (k, d / n)).collect()
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "# columns = sequence shots dark_counts")?;
        for r in &self.records {
            writeln!(
                out,
                "{} {} {}",
                r.sequence,
                fmt_count(r.shots),
                fmt_count(r.dark_counts)
            )?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut data = GstDataset::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| Error::Parse { line: line_no, message };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.split_once('=') {
                    let k = k.trim();
                    if k != "columns" {
                        data.metadata.push((k.to_string(), v.trim().to_string()));
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            }
            let sequence: Circuit = fields[0].parse().map_err(|e| match e {
                Error::Parse { message, .. } => err(message),
                other => other,
            })?;
            let num =
                |s: &str, what: &str| -> Result<f64> { s.parse::<f64>().map_err(|_| err(format!("bad {what} {s:?}"))) };
            let shots = num(fields[1], "shot count")?;
            let dark = num(fields[2], "dark count")?;
            check_counts(shots, dark).map_err(err)?;
            data.records.push(Record {
                sequence,
                shots,
                dark_counts: dark,
            });
        }
        Ok(data)
    }
}

fn check_counts(shots: f64, dark: f64) -> std::result::Result<(), String> {
    if !(shots > 0.0 && shots.is_finite()) {
        return Err(format!("shot count must be positive, got {shots}"));
    }
    if !(0.0..=shots).contains(&dark) {
        return Err(format!("dark count {dark} outside [0, {shots}]"));
    }
    Ok(())
}

fn fmt_count(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:e}")
    }
}
