//! Synthetic GST data from the gate dynamics model.
//!
//! Randomness is split into independent ChaCha streams derived from one seed:
//! stream 0 drives the slow drift and leakage phase, which evolve from one
//! sequence to the next in design order; stream `k + 1` drives the per-shot
//! draws of sequence `k`. Sequences are then simulated in parallel and the
//! result does not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use super::dataset::GstDataset;
use super::design::GstDesign;
use super::sequence::Circuit;
use crate::dynamics::{realized_angles, Gate, GateModel, NoiseTrajectory, OpticalGateSpec, SequenceContext};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub shots: u64,
    /// Store expected counts `shots · P` instead of binomial draws. With a
    /// stochastic noise model `P` is averaged over `shots` realizations.
    pub infinite_shots: bool,
    /// Symmetric readout error probability.
    pub readout_error: f64,
    /// Preparation and detection time per shot, in µs, used to advance drift.
    pub shot_overhead: f64,
    /// Recorded in the dataset metadata; `None` writes `unset`.
    pub timestamp: Option<String>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            shots: 1000,
            infinite_shots: false,
            readout_error: 0.0,
            shot_overhead: 1000.0,
            timestamp: None,
        }
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Rotates the Bloch vector `r` by `theta` about the equatorial axis at `phi`.
fn rotate(r: [f64; 3], theta: f64, phi: f64) -> [f64; 3] {
    let n = [phi.cos(), phi.sin(), 0.0];
    let (s, c) = theta.sin_cos();
    let cross = [
        n[1] * r[2] - n[2] * r[1],
        n[2] * r[0] - n[0] * r[2],
        n[0] * r[1] - n[1] * r[0],
    ];
    let dot = n[0] * r[0] + n[1] * r[1];
    std::array::from_fn(|k| r[k] * c + cross[k] * s + n[k] * dot * (1.0 - c))
}

/// P(D) for one realization of `gates` starting from |S⟩.
fn shot_probability<R: Rng>(
    gates: &[Gate],
    specs: &[OpticalGateSpec; 3],
    truth: &GateModel,
    ctx: &SequenceContext,
    rng: &mut R,
) -> f64 {
    let coherence = truth
        .noise
        .t2
        .map(|t2| (-(truth.duration + truth.noise.gap) / t2).exp());
    let mut r = [0.0, 0.0, 1.0];
    for g in gates {
        let (theta, phi) = realized_angles(&specs[g.index()], &truth.noise, ctx, rng);
        r = rotate(r, theta, phi);
        if let Some(c) = coherence {
            r[0] *= c;
            r[1] *= c;
        }
    }
    (0.5 * (1.0 - r[2])).clamp(0.0, 1.0)
}

/// Noise-free probabilities of the given sequences under `truth` with a fixed context.
pub fn exact_probabilities(sequences: &[Circuit], truth: &GateModel, ctx: &SequenceContext) -> Vec<f64> {
    let specs = Gate::ALL.map(|g| truth.spec(g));
    let mut quiet = *truth;
    quiet.noise.energy_jitter_rel = 0.0;
    sequences
        .par_iter()
        .map(|c| {
            let mut rng = stream(0, 0);
            shot_probability(&c.expand(), &specs, &quiet, ctx, &mut rng)
        })
        .collect()
}

pub fn simulate_dataset(
    design: &GstDesign,
    truth: &GateModel,
    opts: &SimulationOptions,
    seed: u64,
) -> Result<GstDataset> {
    simulate_sequences(&design.sequences, truth, opts, seed)
}

pub fn simulate_sequences(
    sequences: &[Circuit],
    truth: &GateModel,
    opts: &SimulationOptions,
    seed: u64,
) -> Result<GstDataset> {
    if opts.shots == 0 {
        return Err(Error::invalid("shots must be ≥ 1"));
    }
    if !(0.0..=0.5).contains(&opts.readout_error) {
        return Err(Error::invalid("readout error must lie in [0, 0.5]"));
    }
    truth.noise.validate()?;
    for g in Gate::ALL {
        truth.spec(g).validate()?;
    }
    let specs = Gate::ALL.map(|g| truth.spec(g));
    let stochastic = truth.noise.is_stochastic();

    let mut slow = stream(seed, 0);
    let mut trajectory = NoiseTrajectory::start(truth.noise, &mut slow);
    let contexts: Vec<SequenceContext> = sequences
        .iter()
        .map(|c| {
            let ctx = trajectory.context();
            let gate_time = c.len() as f64 * (truth.duration + truth.noise.gap);
            trajectory.advance(opts.shots as f64 * (gate_time + opts.shot_overhead), &mut slow);
            ctx
        })
        .collect();

    let eps = opts.readout_error;
    let observed = |p: f64| p * (1.0 - eps) + (1.0 - p) * eps;
    let counts: Vec<f64> = sequences
        .par_iter()
        .zip(contexts.par_iter())
        .enumerate()
        .map(|(k, (c, ctx))| -> Result<f64> {
            let mut rng = stream(seed, k as u64 + 1);
            let gates = c.expand();
            let n = opts.shots;
            let bright = if !stochastic {
                let p = observed(shot_probability(&gates, &specs, truth, ctx, &mut rng));
                if opts.infinite_shots {
                    n as f64 * p
                } else {
                    let d = Binomial::new(n, p).map_err(|e| Error::Numeric(e.to_string()))?;
                    d.sample(&mut rng) as f64
                }
            } else if opts.infinite_shots {
                (0..n)
                    .map(|_| observed(shot_probability(&gates, &specs, truth, ctx, &mut rng)))
                    .sum()
            } else {
                (0..n)
                    .filter(|_| {
                        let p = observed(shot_probability(&gates, &specs, truth, ctx, &mut rng));
                        rng.random::<f64>() < p
                    })
                    .count() as f64
            };
            // `bright` counts |D⟩ outcomes; the file records |S⟩ outcomes
            Ok(n as f64 - bright)
        })
        .collect::<Result<_>>()?;

    let mut data = GstDataset::default();
    data.set_meta("seed", seed.to_string());
    data.set_meta("timestamp", opts.timestamp.clone().unwrap_or_else(|| "unset".into()));
    data.set_meta("model", describe(truth));
    data.set_meta("infinite_shots", opts.infinite_shots.to_string());
    data.set_meta("readout_error", opts.readout_error.to_string());
    for (c, dark) in sequences.iter().zip(counts) {
        data.push(c.clone(), opts.shots as f64, dark)?;
    }
    Ok(data)
}

fn describe(truth: &GateModel) -> String {
    let n = &truth.noise;
    format!(
        "dtheta={} extinction_db={} duration_us={} jitter={} drift={} leakage={:?} t2={}",
        truth.dtheta,
        truth.extinction_db,
        truth.duration,
        n.energy_jitter_rel,
        n.drift.is_some(),
        n.leakage_phase,
        n.t2.map_or("none".to_string(), |t| t.to_string()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::NoiseModel;
    use crate::tomography::design::make_design;
    use crate::tomography::model::{CompiledCircuits, PhysicalParams};
    use std::f64::consts::PI;

    fn seqs(texts: &[&str]) -> Vec<Circuit> {
        texts.iter().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn ideal_deterministic_outcomes() {
        let opts = SimulationOptions::default();
        for seed in 0..5 {
            let d = simulate_sequences(&seqs(&["GxGx", "{}"]), &GateModel::ideal(), &opts, seed).unwrap();
            assert_eq!(d.records[0].dark_counts, 0.0);
            assert_eq!(d.records[1].dark_counts, 1000.0);
        }
    }

    #[test]
    fn half_probability_binomial() {
        let opts = SimulationOptions {
            shots: 10_000,
            ..Default::default()
        };
        let d = simulate_sequences(&seqs(&["Gx"]), &GateModel::ideal(), &opts, 3).unwrap();
        let f = d.records[0].frequency_d();
        assert!((f - 0.5).abs() < 0.015, "{f}");
    }

    #[test]
    fn infinite_shots_match_matrix_model() {
        let truth = GateModel::from_angles(-0.0301, 0.0804, 3.16);
        let design = make_design(16);
        let opts = SimulationOptions {
            infinite_shots: true,
            ..Default::default()
        };
        let d = simulate_dataset(&design, &truth, &opts, 1).unwrap();
        let p = CompiledCircuits::new(&design.sequences).probabilities_unitary(
            &PhysicalParams {
                dtheta: -0.0301,
                theta_i: 0.0804,
                phi_i: 3.16,
            }
            .unitaries(),
        );
        for (r, p) in d.records.iter().zip(p) {
            assert!((r.frequency_d() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn idle_sequences_spike() {
        let truth = GateModel::from_angles(0.0, 0.0804, PI);
        let ideal = GateModel::ideal();
        let ctx = SequenceContext {
            leakage_phase: PI,
            ..Default::default()
        };
        // preparations off the idle rotation axis
        let idle = seqs(&["Gx(Gi)^16", "GxGx(Gi)^16GyGyGy"]);
        let p = exact_probabilities(&idle, &truth, &ctx);
        let p0 = exact_probabilities(&idle, &ideal, &ctx);
        let dev = p.iter().zip(&p0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev >= 0.2, "{dev}");

        let truth = GateModel::from_angles(0.0, 0.0804, PI);
        let xs = seqs(&["(Gx)^16", "Gy(Gx)^16GyGyGy"]);
        let p = exact_probabilities(&xs, &truth, &ctx);
        let p0 = exact_probabilities(&xs, &ideal, &ctx);
        for (a, b) in p.iter().zip(&p0) {
            assert!((a - b).abs() < 0.01);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let truth = GateModel {
            noise: NoiseModel::mzm(),
            ..GateModel::from_angles(-0.0301, 0.0804, 3.16)
        };
        let design = make_design(4);
        let opts = SimulationOptions {
            shots: 50,
            ..Default::default()
        };
        let a = simulate_dataset(&design, &truth, &opts, 11).unwrap();
        let b = simulate_dataset(&design, &truth, &opts, 11).unwrap();
        let c = simulate_dataset(&design, &truth, &opts, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
