//! Profile-likelihood intervals.
//!
//! For a negative log-likelihood `f` minimized at `x̂`, the profile of
//! parameter `i` is `p(t) = min_{x : x_i = t} f(x)`. The interval endpoints
//! are the values of `t` on either side of `x̂_i` where `p(t) − f(x̂)` reaches
//! the configured drop.

use super::nelder_mead::{nelder_mead, NelderMeadOptions};

#[derive(Debug, Clone)]
pub struct ProfileOptions {
    /// Increase of the negative log-likelihood marking the interval edge.
    pub drop: f64,
    /// First trial distance from the optimum along the profiled parameter.
    pub initial_step: f64,
    /// Hard limits on the profiled parameter.
    pub limits: (f64, f64),
    /// Absolute tolerance on the endpoint location.
    pub tol: f64,
    pub max_evaluations: usize,
    /// Options for the re-optimization of the remaining parameters. Its
    /// `step` is given for the full parameter vector.
    pub inner: NelderMeadOptions,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            drop: 1.0,
            initial_step: 0.1,
            limits: (f64::NEG_INFINITY, f64::INFINITY),
            tol: 1e-9,
            max_evaluations: 200,
            inner: NelderMeadOptions {
                f_tol_rel: 1e-14,
                x_tol: 1e-11,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    /// The drop is reached at this value.
    Found(f64),
    /// The limit was hit before the profile rose by the drop.
    Limit(f64),
}

impl Endpoint {
    pub fn value(self) -> f64 {
        match self {
            Endpoint::Found(v) | Endpoint::Limit(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileInterval {
    pub estimate: f64,
    pub lower: Endpoint,
    pub upper: Endpoint,
}

impl ProfileInterval {
    pub fn width(&self) -> f64 {
        self.upper.value() - self.lower.value()
    }

    /// Half the interval width, used as the reported 1σ-style uncertainty.
    pub fn half_width(&self) -> f64 {
        0.5 * self.width()
    }

    /// True when neither side reached the drop.
    pub fn is_unbounded(&self) -> bool {
        matches!(self.lower, Endpoint::Limit(_)) && matches!(self.upper, Endpoint::Limit(_))
    }
}

struct Profiler<'a, F> {
    f: &'a F,
    index: usize,
    opts: &'a ProfileOptions,
    inner_opts: NelderMeadOptions,
    warm: Vec<f64>,
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> f64> Profiler<'_, F> {
    fn expand(&self, t: f64, rest: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(rest.len() + 1);
        x.extend_from_slice(&rest[..self.index]);
        x.push(t);
        x.extend_from_slice(&rest[self.index..]);
        x
    }

    fn value(&mut self, t: f64) -> f64 {
        self.evaluations += 1;
        let warm = self.warm.clone();
        let m = nelder_mead(|rest| (self.f)(&self.expand(t, rest)), &warm, &self.inner_opts);
        self.warm = m.x;
        m.f
    }
}

pub fn profile_interval<F>(f: &F, best: &[f64], index: usize, opts: &ProfileOptions) -> ProfileInterval
where
    F: Fn(&[f64]) -> f64,
{
    let f_best = f(best);
    let mut rest: Vec<f64> = best.to_vec();
    let t_hat = rest.remove(index);
    let mut inner_opts = opts.inner.clone();
    if inner_opts.step.len() == best.len() {
        inner_opts.step.remove(index);
    }
    let side = |direction: f64| -> Endpoint {
        let mut prof = Profiler {
            f,
            index,
            opts,
            inner_opts: inner_opts.clone(),
            warm: rest.clone(),
            evaluations: 0,
        };
        let limit = if direction > 0.0 { opts.limits.1 } else { opts.limits.0 };
        let target = f_best + opts.drop;
        let g = |p: &mut Profiler<F>, t: f64| p.value(t) - target;

        // bracket
        let mut inside = (t_hat, -opts.drop);
        let mut step = opts.initial_step.abs().max(opts.tol);
        let outside = loop {
            let mut t = t_hat + direction * step;
            let at_limit = (direction > 0.0 && t >= limit) || (direction < 0.0 && t <= limit);
            if at_limit {
                t = limit;
            }
            let gt = g(&mut prof, t);
            if gt >= 0.0 {
                break (t, gt);
            }
            if at_limit || prof.evaluations >= prof.opts.max_evaluations {
                return Endpoint::Limit(t);
            }
            inside = (t, gt);
            step *= 2.0;
        };

        // Illinois regula falsi between `inside` (g < 0) and `outside` (g ≥ 0)
        let (mut a, mut b) = (inside, outside);
        let mut last_side = 0i8;
        while (b.0 - a.0).abs() > opts.tol && prof.evaluations < prof.opts.max_evaluations {
            let t = b.0 - b.1 * (b.0 - a.0) / (b.1 - a.1);
            let t = if t.is_finite() && (t - a.0) * (t - b.0) < 0.0 {
                t
            } else {
                0.5 * (a.0 + b.0)
            };
            let gt = g(&mut prof, t);
            if gt.abs() < 1e-13 * target.abs().max(1.0) {
                return Endpoint::Found(t);
            }
            if gt < 0.0 {
                a = (t, gt);
                if last_side == -1 {
                    b.1 *= 0.5;
                }
                last_side = -1;
            } else {
                b = (t, gt);
                if last_side == 1 {
                    a.1 *= 0.5;
                }
                last_side = 1;
            }
        }
        Endpoint::Found(0.5 * (a.0 + b.0))
    };
    let lower = side(-1.0);
    let upper = side(1.0);
    ProfileInterval {
        estimate: t_hat,
        lower,
        upper,
    }
}
