//! Levenberg-Marquardt for `min ½‖r(x)‖²` with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when the relative cost decrease of an accepted step falls below this.
    pub cost_tol_rel: f64,
    /// Stop when the step max-norm falls below `step_tol · (1 + ‖x‖∞)`.
    pub step_tol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iter: 2000,
            cost_tol_rel: 1e-10,
            step_tol: 1e-12,
            fd_step: 1e-6,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub x: Vec<f64>,
    /// `½‖r‖²` at `x`.
    pub cost: f64,
    /// Jacobian at `x`.
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Central-difference Jacobian of `residuals` at `x`; columns are evaluated in
/// parallel, each independently, so the result does not depend on thread count.
pub fn numeric_jacobian<F>(residuals: &F, x: &[f64], fd_step: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let cols: Vec<Vec<f64>> = (0..x.len())
        .into_par_iter()
        .map(|j| {
            let h = fd_step * (1.0 + x[j].abs());
            let mut xp = x.to_vec();
            xp[j] += h;
            let mut xm = x.to_vec();
            xm[j] -= h;
            let rp = residuals(&xp);
            let rm = residuals(&xm);
            rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    let m = cols.first().map_or(0, Vec::len);
    DMatrix::from_fn(m, x.len(), |i, j| cols[j][i])
}

fn half_norm_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

pub fn levenberg_marquardt<F>(residuals: F, x0: &[f64], opts: &LmOptions) -> LmResult
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let mut x = x0.to_vec();
    let mut r = residuals(&x);
    let mut cost = half_norm_sq(&r);
    let mut lambda = opts.initial_lambda;
    let mut jac = numeric_jacobian(&residuals, &x, opts.fd_step);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);

        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = solve_spd(a, -&grad) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let r_trial = residuals(&trial);
            let cost_trial = half_norm_sq(&r_trial);
            if cost_trial.is_finite() && cost_trial <= cost {
                let decrease = cost - cost_trial;
                let step_norm = step.amax();
                let x_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                x = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if decrease <= opts.cost_tol_rel * cost.max(f64::MIN_POSITIVE)
                    || step_norm <= opts.step_tol * (1.0 + x_norm)
                {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no descent direction at any damping: already at a stationary point
            converged = true;
        }
        if converged {
            break;
        }
        jac = numeric_jacobian(&residuals, &x, opts.fd_step);
    }
    if converged {
        jac = numeric_jacobian(&residuals, &x, opts.fd_step);
    }
    LmResult {
        x,
        cost,
        jacobian: jac,
        iterations,
        converged,
    }
}

fn solve_spd(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(&b));
    }
    a.lu().solve(&b)
}

/// Moore-Penrose pseudo-inverse of a symmetric positive semi-definite matrix,
/// dropping eigenvalues below `rel_cutoff · λ_max`.
pub fn psd_pseudo_inverse(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > rel_cutoff * max && lam > 0.0 {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lam;
        }
    }
    out
}
