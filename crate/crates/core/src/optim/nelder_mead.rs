//! Nelder-Mead simplex minimization with the dimension-adaptive coefficients
//! of Gao and Han.

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Converged once `f_max − f_min ≤ f_tol_abs + f_tol_rel·|f_min|` ...
    pub f_tol_rel: f64,
    pub f_tol_abs: f64,
    /// ... or once the simplex diameter (max-norm) drops below `x_tol`.
    pub x_tol: f64,
    /// Initial simplex edge along each axis. A single entry is broadcast.
    pub step: Vec<f64>,
    /// Number of times to rebuild the simplex around the best point after
    /// convergence, to guard against premature collapse.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iter: 2000,
            f_tol_rel: 1e-12,
            f_tol_abs: 0.0,
            x_tol: 1e-10,
            step: vec![0.1],
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`. Non-convergence is reported through
/// [`Minimum::converged`]; callers decide whether that is an error.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best = run(&mut f, x0, opts, opts.max_iter);
    for _ in 0..opts.restarts {
        if !best.converged {
            break;
        }
        let remaining = opts.max_iter.saturating_sub(best.iterations).max(opts.max_iter / 4);
        let again = run(&mut f, &best.x.clone(), opts, remaining);
        let iterations = best.iterations + again.iterations;
        let evaluations = best.evaluations + again.evaluations;
        let improved = again.f < best.f;
        if improved {
            best = again;
        }
        best.iterations = iterations;
        best.evaluations = evaluations;
        if !improved {
            break;
        }
    }
    best
}

fn run<F>(f: &mut F, x0: &[f64], opts: &NelderMeadOptions, max_iter: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        let v = f(x0);
        return Minimum {
            x: vec![],
            f: v,
            iterations: 0,
            evaluations: 1,
            converged: true,
        };
    }
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n <= 2 {
        (1.0, 2.0, 0.5, 0.5)
    } else {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    };

    let step = |i: usize| -> f64 {
        let s = if opts.step.len() == 1 {
            opts.step[0]
        } else {
            opts.step[i]
        };
        if s == 0.0 {
            0.00025
        } else {
            s
        }
    };

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step(i);
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];

    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if has_converged(&simplex, opts) {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }

        let worst = simplex[n].1;
        let second_worst = simplex[n - 1].1;
        let best = simplex[0].1;

        let point = |coef: f64, trial: &mut Vec<f64>, worst_x: &[f64], centroid: &[f64]| {
            for i in 0..trial.len() {
                trial[i] = centroid[i] + coef * (centroid[i] - worst_x[i]);
            }
        };

        point(alpha, &mut trial, &simplex[n].0, &centroid);
        let reflected = trial.clone();
        let fr = eval(&reflected, &mut evals);

        if fr < best {
            point(alpha * gamma, &mut trial, &simplex[n].0, &centroid);
            let fe = eval(&trial, &mut evals);
            simplex[n] = if fe < fr { (trial.clone(), fe) } else { (reflected, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[n] = (reflected, fr);
            continue;
        }
        // contraction, outside if the reflection helped at all
        let (coef, reference) = if fr < worst { (alpha * rho, fr) } else { (-rho, worst) };
        point(coef, &mut trial, &simplex[n].0, &centroid);
        let fc = eval(&trial, &mut evals);
        let accept = if coef > 0.0 { fc <= reference } else { fc < reference };
        if accept {
            simplex[n] = (trial.clone(), fc);
            continue;
        }
        // shrink toward the best vertex
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (xi, bi) in vertex.0.iter_mut().zip(&x_best) {
                *xi = bi + sigma * (*xi - bi);
            }
            vertex.1 = eval(&vertex.0, &mut evals);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    if !converged {
        converged = has_converged(&simplex, opts);
    }
    let (x, f) = simplex.swap_remove(0);
    Minimum {
        x,
        f,
        iterations,
        evaluations: evals,
        converged,
    }
}

fn has_converged(sorted: &[(Vec<f64>, f64)], opts: &NelderMeadOptions) -> bool {
    let f_lo = sorted[0].1;
    let f_hi = sorted[sorted.len() - 1].1;
    if f_hi.is_finite() && f_hi - f_lo <= opts.f_tol_abs + opts.f_tol_rel * f_lo.abs() {
        return true;
    }
    let x0 = &sorted[0].0;
    let diameter = sorted[1..]
        .iter()
        .flat_map(|(x, _)| x.iter().zip(x0).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    diameter <= opts.x_tol
}
