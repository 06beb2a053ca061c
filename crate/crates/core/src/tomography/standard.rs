//! Standard GST: unconstrained 4×4 PTMs per gate plus SPAM vectors.
//!
//! The fit runs in four steps:
//!
//! 1. Linear inversion from fiducial-pair and fiducial-gate-fiducial
//!    frequencies, moved into the gauge of the ideal targets.
//! 2. Maximum likelihood by iteratively reweighted least squares: each pass
//!    runs Levenberg-Marquardt on `(p − f)·sqrt(N / w)` with the binomial
//!    variances `w = p(1−p)` frozen at the start of the pass. At the fixed
//!    point the binomial score vanishes.
//! 3. Gauge optimization toward the targets (Frobenius distance over
//!    invertible gauge matrices, Nelder-Mead from the identity).
//! 4. Fisher-information covariance with the gauge directions projected out.

use nalgebra::{DMatrix, Matrix4, Vector4};

use super::dataset::GstDataset;
use super::design::standard_fiducials;
use super::model::{binomial_log_likelihood, CompiledCircuits, PtmGateSet, PROBABILITY_CLIP, PTM_PARAMS};
use super::report::{gate_metrics, Estimate, FitReport, StandardEstimate};
use crate::dynamics::Gate;
use crate::optim::{
    levenberg_marquardt, nelder_mead, numeric_jacobian, psd_pseudo_inverse, LmOptions, NelderMeadOptions,
};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct StandardFitOptions {
    /// Fiducials used for linear inversion.
    pub fiducials: Vec<Vec<Gate>>,
    /// Total Levenberg-Marquardt iteration budget.
    pub max_iter: usize,
    /// Stop once a reweighting pass changes log L by less than this fraction.
    pub ll_tol_rel: f64,
    /// Lower bound on the per-sequence variance `p(1−p)` used as a weight.
    pub weight_floor: f64,
    /// Largest accepted condition number of the linear-inversion Gram matrix.
    pub max_condition: f64,
    pub gauge_optimize: bool,
    pub uncertainties: bool,
}

impl Default for StandardFitOptions {
    fn default() -> Self {
        StandardFitOptions {
            fiducials: standard_fiducials(),
            max_iter: 2000,
            ll_tol_rel: 1e-10,
            weight_floor: 1e-4,
            max_condition: 1e8,
            gauge_optimize: true,
            uncertainties: true,
        }
    }
}

fn operator(set: &PtmGateSet, gates: &[Gate]) -> Matrix4<f64> {
    gates
        .iter()
        .fold(Matrix4::identity(), |acc, g| set.gates[g.index()] * acc)
}

fn concat(parts: &[&[Gate]]) -> Vec<Gate> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// Linear-inversion estimate, expressed in the gauge of the ideal targets.
pub fn linear_inversion(data: &GstDataset, fiducials: &[Vec<Gate>], max_condition: f64) -> Result<PtmGateSet> {
    let table = data.frequency_table();
    let n = fiducials.len();
    let lookup = |gates: Vec<Gate>| -> Result<f64> {
        table.get(&gates).copied().ok_or_else(|| {
            let name: String = gates.iter().map(|g| g.label()).collect();
            Error::invalid(format!(
                "dataset lacks linear-inversion sequence {}",
                if name.is_empty() { "{}".to_string() } else { name }
            ))
        })
    };
    let i0 = fiducials
        .iter()
        .position(Vec::is_empty)
        .ok_or_else(|| Error::invalid("fiducials must include the empty sequence"))?;

    // rows: measurement fiducial j, columns: preparation fiducial i
    let mut gram = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            gram[(j, i)] = lookup(concat(&[&fiducials[i], &fiducials[j]]))?;
        }
    }
    let svd = gram.clone().svd(true, true);
    let u = svd.u.as_ref().ok_or_else(|| Error::Numeric("SVD failed".into()))?;
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::Numeric("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    if order.len() < 4 {
        return Err(Error::invalid("linear inversion needs at least 4 fiducials"));
    }
    let s = &svd.singular_values;
    let condition = s[order[0]] / s[order[3]];
    if !(condition <= max_condition) {
        return Err(Error::IllConditioned { condition });
    }
    let u4 = DMatrix::from_fn(n, 4, |r, c| u[(r, order[c])]);
    let v4 = DMatrix::from_fn(n, 4, |r, c| v_t[(order[c], r)]);
    let core = u4.transpose() * &gram * &v4;
    let core_inv = core.try_inverse().ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;

    let to4 = |m: DMatrix<f64>| Matrix4::from_fn(|r, c| m[(r, c)]);
    let mut gates = [Matrix4::zeros(); 3];
    for g in Gate::ALL {
        let mut mg = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                mg[(j, i)] = lookup(concat(&[&fiducials[i], &[g], &fiducials[j]]))?;
            }
        }
        gates[g.index()] = to4(&core_inv * u4.transpose() * mg * &v4);
    }
    let rho = &core_inv * u4.transpose() * gram.column(i0);
    let effect = gram.row(i0) * &v4;
    let raw = PtmGateSet {
        gates,
        rho: Vector4::from_iterator(rho.iter().copied()),
        effect: Vector4::from_iterator(effect.iter().copied()),
    };

    // the estimate equals S⁻¹ G S with S = B·V4, B the prepared fiducial states
    let target = PtmGateSet::target();
    let b = DMatrix::from_fn(4, n, |r, i| (operator(&target, &fiducials[i]) * target.rho)[r]);
    let s = to4(b * v4);
    raw.gauge_transform(&s).ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })
}

struct Problem {
    compiled: CompiledCircuits,
    shots: Vec<f64>,
    dark: Vec<f64>,
    freq: Vec<f64>,
}

impl Problem {
    fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        self.compiled.probabilities_ptm(&PtmGateSet::from_params(x))
    }

    fn log_likelihood(&self, x: &[f64]) -> f64 {
        binomial_log_likelihood(&self.probabilities(x), &self.shots, &self.dark)
    }

    fn scales(&self, x: &[f64], floor: f64) -> Vec<f64> {
        self.probabilities(x)
            .iter()
            .zip(&self.shots)
            .map(|(&p, &n)| {
                let p = p.clamp(PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP);
                (n / (p * (1.0 - p)).max(floor)).sqrt()
            })
            .collect()
    }

    fn residuals(&self, x: &[f64], scale: &[f64]) -> Vec<f64> {
        self.probabilities(x)
            .iter()
            .zip(&self.freq)
            .zip(scale)
            .map(|((p, f), s)| (p - f) * s)
            .collect()
    }
}

/// Summed squared Frobenius distance of a gate set to the targets.
fn target_distance(set: &PtmGateSet, target: &PtmGateSet) -> f64 {
    let gates: f64 = (0..3).map(|k| (set.gates[k] - target.gates[k]).norm_squared()).sum();
    gates + (set.rho - target.rho).norm_squared() + (set.effect - target.effect).norm_squared()
}

/// Gauge matrix `I + Δ` minimizing [`target_distance`].
pub fn optimize_gauge(set: &PtmGateSet) -> Result<PtmGateSet> {
    let target = PtmGateSet::target();
    let objective = |d: &[f64]| -> f64 {
        let m = Matrix4::identity() + Matrix4::from_row_slice(d);
        match set.gauge_transform(&m) {
            Some(moved) => target_distance(&moved, &target),
            None => f64::INFINITY,
        }
    };
    let opts = NelderMeadOptions {
        max_iter: 40_000,
        f_tol_rel: 0.0,
        f_tol_abs: 0.0,
        x_tol: 1e-12,
        step: vec![1e-2],
        restarts: 3,
    };
    let m = nelder_mead(objective, &[0.0; 16], &opts);
    if !m.converged {
        return Err(Error::NotConverged {
            what: "gauge optimization",
            iterations: m.iterations,
        });
    }
    let g = Matrix4::identity() + Matrix4::from_row_slice(&m.x);
    set.gauge_transform(&g).ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })
}

/// Parameter-space tangents of the 16 gauge generators at `set`.
fn gauge_tangents(set: &PtmGateSet) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(PTM_PARAMS, 16);
    for k in 0..16 {
        let mut e = Matrix4::zeros();
        e[(k / 4, k % 4)] = 1.0;
        let moved = PtmGateSet {
            gates: set.gates.map(|g| e * g - g * e),
            rho: e * set.rho,
            effect: -(e.transpose() * set.effect),
        };
        for (r, v) in moved.to_params().into_iter().enumerate() {
            t[(r, k)] = v;
        }
    }
    t
}

/// `pinv(P F P)` with `P` the projector off the gauge directions.
fn gauge_free_covariance(fisher: &DMatrix<f64>, set: &PtmGateSet) -> DMatrix<f64> {
    let t = gauge_tangents(set);
    let svd = t.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let mut proj = DMatrix::identity(PTM_PARAMS, PTM_PARAMS);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-10 * smax {
            let c = u.column(k);
            proj -= c * c.transpose();
        }
    }
    psd_pseudo_inverse(&(&proj * fisher * &proj), 1e-12)
}

pub fn fit_standard_gst(data: &GstDataset, opts: &StandardFitOptions) -> Result<FitReport> {
    if data.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    let seed = linear_inversion(data, &opts.fiducials, opts.max_condition)?;
    let problem = Problem {
        compiled: CompiledCircuits::new(&data.sequences()),
        shots: data.shots(),
        dark: data.dark_counts(),
        freq: data.records.iter().map(|r| r.frequency_d()).collect(),
    };

    let mut x = seed.to_params();
    let mut ll = problem.log_likelihood(&x);
    let mut iterations = 0;
    let mut converged = false;
    let mut passes = 0;
    while iterations < opts.max_iter {
        passes += 1;
        let scale = problem.scales(&x, opts.weight_floor);
        let lm = levenberg_marquardt(
            |p: &[f64]| problem.residuals(p, &scale),
            &x,
            &LmOptions {
                max_iter: (opts.max_iter - iterations).min(200),
                cost_tol_rel: 1e-12,
                step_tol: 1e-14,
                ..Default::default()
            },
        );
        iterations += lm.iterations;
        // reweighting can overshoot near the clipped boundary; backtrack along
        // the step so the true likelihood never decreases
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial: Vec<f64> = x.iter().zip(&lm.x).map(|(a, b)| a + step * (b - a)).collect();
            let ll_trial = problem.log_likelihood(&trial);
            if ll_trial >= ll {
                accepted = Some((trial, ll_trial));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, ll_new)) = accepted else {
            converged = true;
            break;
        };
        let change = ll_new - ll;
        x = x_new;
        ll = ll_new;
        if change <= opts.ll_tol_rel * ll.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            what: "standard GST likelihood maximization",
            iterations,
        });
    }

    let estimate_raw = PtmGateSet::from_params(&x);
    let gate_set = if opts.gauge_optimize {
        optimize_gauge(&estimate_raw)?
    } else {
        estimate_raw
    };

    let covariance = if opts.uncertainties {
        let xg = gate_set.to_params();
        let scale = problem.scales(&xg, opts.weight_floor);
        let jac = numeric_jacobian(&|p: &[f64]| problem.residuals(p, &scale), &xg, 1e-6);
        let fisher = jac.transpose() * &jac;
        Some(gauge_free_covariance(&fisher, &gate_set))
    } else {
        None
    };

    let estimate = Estimate::Standard(StandardEstimate { gate_set, covariance });
    let gauge = if opts.gauge_optimize {
        "optimized to targets"
    } else {
        "linear inversion"
    };
    let metadata = vec![
        ("model".to_string(), "standard".to_string()),
        ("reweighting_passes".to_string(), passes.to_string()),
        ("gauge".to_string(), gauge.to_string()),
        (
            "uncertainty".to_string(),
            "Fisher information, gauge directions projected out".to_string(),
        ),
        (
            "diamond_error".to_string(),
            "upper bound d * choi trace distance".to_string(),
        ),
    ];
    Ok(FitReport {
        metrics: gate_metrics(&estimate),
        estimate,
        log_likelihood: ll,
        iterations,
        converged,
        metadata,
    })
}

/// Gauge-invariant check used by tests: largest probability difference
/// between two gate sets over the given sequences.
pub fn max_probability_difference(compiled: &CompiledCircuits, a: &PtmGateSet, b: &PtmGateSet) -> f64 {
    let pa = compiled.probabilities_ptm(a);
    let pb = compiled.probabilities_ptm(b);
    pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::GateModel;
    use crate::qchan::{process_infidelity, ptm_from_unitary};
    use crate::tomography::design::make_design;
    use crate::tomography::model::PhysicalParams;
    use crate::tomography::simulate::{simulate_dataset, SimulationOptions};

    fn infinite(truth: &GateModel) -> GstDataset {
        let opts = SimulationOptions {
            infinite_shots: true,
            ..Default::default()
        };
        simulate_dataset(&make_design(16), truth, &opts, 0).unwrap()
    }

    #[test]
    fn linear_inversion_is_exact_on_exact_data() {
        let params = PhysicalParams {
            dtheta: -0.0301,
            theta_i: 0.0804,
            phi_i: 3.16,
        };
        let data = infinite(&GateModel::from_angles(params.dtheta, params.theta_i, params.phi_i));
        let est = linear_inversion(&data, &standard_fiducials(), 1e8).unwrap();
        let truth = PtmGateSet::from_unitaries(&params.unitaries());
        let compiled = CompiledCircuits::new(&data.sequences());
        assert!(max_probability_difference(&compiled, &est, &truth) < 1e-9);
    }

    #[test]
    fn ideal_gates_recovered() {
        let fit = fit_standard_gst(&infinite(&GateModel::ideal()), &StandardFitOptions::default()).unwrap();
        for m in &fit.metrics {
            assert!(m.process_infidelity.abs() < 1e-9, "{m:?}");
        }
    }

    #[test]
    fn table_one_truth_recovered() {
        let fit = fit_standard_gst(
            &infinite(&GateModel::from_angles(-0.0301, 0.0804, 3.16)),
            &StandardFitOptions::default(),
        )
        .unwrap();
        let expect = [
            (-0.0301f64 / 2.0).sin().powi(2),
            (-0.0301f64 / 2.0).sin().powi(2),
            (0.0402f64).sin().powi(2),
        ];
        for (m, e) in fit.metrics.iter().zip(expect) {
            assert!((m.process_infidelity / e - 1.0).abs() < 0.01, "{m:?} vs {e}");
        }
        let set = &fit.standard().unwrap().gate_set;
        let t = ptm_from_unitary(&Gate::Idle.target_unitary());
        assert!((process_infidelity(&set.ptm(Gate::Idle), &t) - expect[2]).abs() < 1e-4);
    }

    #[test]
    fn rejects_missing_inversion_sequences() {
        let mut data = infinite(&GateModel::ideal());
        data.records.retain(|r| r.sequence.len() > 3);
        assert!(matches!(
            fit_standard_gst(&data, &StandardFitOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn ill_conditioned_fiducials_are_rejected() {
        // a repeated fiducial leaves the Gram matrix with rank 3
        let data = infinite(&GateModel::ideal());
        let fids = vec![vec![], vec![], vec![Gate::SqrtX], vec![Gate::SqrtY]];
        assert!(matches!(
            linear_inversion(&data, &fids, 1e8),
            Err(Error::IllConditioned { .. })
        ));
    }
}
