//! Physical GST: maximum likelihood over (δθ, θ_I, φ_I) with ideal SPAM.

use std::f64::consts::{FRAC_PI_2, PI};

use super::dataset::GstDataset;
use super::model::{binomial_log_likelihood, CompiledCircuits, PhysicalParams};
use super::report::{gate_metrics, Estimate, FitReport, PhysicalEstimate};
use crate::optim::{nelder_mead, profile_interval, NelderMeadOptions, ProfileInterval, ProfileOptions};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PhysicalFitOptions {
    /// Initial idle axes for the multi-start search.
    pub phi_starts: Vec<f64>,
    /// Compute profile-likelihood intervals.
    pub intervals: bool,
    /// Log-likelihood drop defining the interval edges.
    pub drop: f64,
    pub max_iter: usize,
}

impl Default for PhysicalFitOptions {
    fn default() -> Self {
        PhysicalFitOptions {
            phi_starts: vec![0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2],
            intervals: true,
            drop: 1.0,
            max_iter: 4000,
        }
    }
}

/// Negative log-likelihood of the physical model, offset by the saturated
/// model so that it is near zero at a good fit.
pub struct PhysicalLikelihood {
    compiled: CompiledCircuits,
    shots: Vec<f64>,
    dark: Vec<f64>,
    saturated: f64,
}

impl PhysicalLikelihood {
    pub fn new(data: &GstDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid("empty dataset"));
        }
        let shots = data.shots();
        let dark = data.dark_counts();
        let freq: Vec<f64> = data.records.iter().map(|r| r.frequency_d()).collect();
        let saturated = binomial_log_likelihood(&freq, &shots, &dark);
        Ok(PhysicalLikelihood {
            compiled: CompiledCircuits::new(&data.sequences()),
            shots,
            dark,
            saturated,
        })
    }

    pub fn log_likelihood(&self, params: &PhysicalParams) -> f64 {
        let p = self.compiled.probabilities_unitary(&params.unitaries());
        binomial_log_likelihood(&p, &self.shots, &self.dark)
    }

    /// `saturated − log L`, taking `[dtheta, theta_i, phi_i]`.
    pub fn deviance_half(&self, x: &[f64]) -> f64 {
        self.saturated - self.log_likelihood(&PhysicalParams::from_slice(x))
    }
}

fn nm_options(max_iter: usize, step: Vec<f64>) -> NelderMeadOptions {
    NelderMeadOptions {
        max_iter,
        f_tol_rel: 0.0,
        f_tol_abs: 1e-11,
        x_tol: 1e-11,
        step,
        restarts: 2,
    }
}

/// Diagonal curvature of `f` at `x` along `index`, used to size profile steps.
fn curvature<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], index: usize) -> f64 {
    let h = 1e-4;
    let mut xp = x.to_vec();
    xp[index] += h;
    let mut xm = x.to_vec();
    xm[index] -= h;
    (f(&xp) - 2.0 * f(x) + f(&xm)) / (h * h)
}

pub fn fit_physical_gst(data: &GstDataset, opts: &PhysicalFitOptions) -> Result<FitReport> {
    let like = PhysicalLikelihood::new(data)?;
    let f = |x: &[f64]| like.deviance_half(x);

    let mut best: Option<crate::optim::Minimum> = None;
    let mut iterations = 0;
    for &phi in &opts.phi_starts {
        let m = nelder_mead(f, &[0.0, 0.05, phi], &nm_options(opts.max_iter, vec![0.02, 0.05, 0.5]));
        iterations += m.iterations;
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let best = best.ok_or_else(|| Error::invalid("no starting points"))?;
    let start = PhysicalParams::from_slice(&best.x).canonical().to_vec();
    let polish = nelder_mead(f, &start, &nm_options(opts.max_iter, vec![1e-3, 1e-3, 1e-2]));
    iterations += polish.iterations;
    if !polish.converged {
        return Err(Error::NotConverged {
            what: "physical GST likelihood maximization",
            iterations,
        });
    }
    let params = PhysicalParams::from_slice(&polish.x).canonical();
    let x = params.to_vec();

    let intervals = if opts.intervals {
        let limits = [(x[0] - FRAC_PI_2, x[0] + FRAC_PI_2), (0.0, PI), (x[2] - PI, x[2] + PI)];
        let ivs: Vec<ProfileInterval> = (0..3)
            .map(|i| {
                let c = curvature(&f, &x, i);
                let initial_step = if c > 0.0 {
                    (2.0 * opts.drop / c).sqrt().clamp(1e-7, 0.5)
                } else {
                    0.1
                };
                let popts = ProfileOptions {
                    drop: opts.drop,
                    initial_step,
                    limits: limits[i],
                    tol: 1e-9,
                    max_evaluations: 200,
                    inner: nm_options(opts.max_iter, vec![1e-3, 1e-3, 1e-2]),
                };
                profile_interval(&f, &x, i, &popts)
            })
            .collect();
        Some([ivs[0], ivs[1], ivs[2]])
    } else {
        None
    };

    let estimate = Estimate::Physical(PhysicalEstimate { params, intervals });
    Ok(FitReport {
        metrics: gate_metrics(&estimate),
        estimate,
        log_likelihood: like.log_likelihood(&params),
        iterations,
        converged: true,
        metadata: vec![
            ("model".into(), "physical".into()),
            ("common_dtheta".into(), "enforced for Gx and Gy".into()),
            ("spam".into(), "ideal".into()),
            ("interval_drop".into(), opts.drop.to_string()),
        ],
    })
}
