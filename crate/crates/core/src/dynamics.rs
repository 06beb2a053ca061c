//! From optical power to qubit rotations.
//!
//! The Rabi rate of the optical transition scales as the square root of the
//! optical power, so a pulse of relative power `P(t)` rotates the qubit by
//! `∫ Ω_peak √P(t) dt`. Imperfect extinction during an idle gate leaks a
//! residual rotation `θ_I = (π/2)·10^(−ER/20)` about an axis set by the
//! uncontrolled optical phase.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::qchan::{ptm_from_unitary, wrap_angle, Ptm, Unitary2};
use crate::{Error, Result};

/// The three gates of the single-qubit gate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    SqrtX,
    SqrtY,
    Idle,
}

impl Gate {
    pub const ALL: [Gate; 3] = [Gate::SqrtX, Gate::SqrtY, Gate::Idle];

    /// Label used in sequence strings.
    pub fn label(self) -> &'static str {
        match self {
            Gate::SqrtX => "Gx",
            Gate::SqrtY => "Gy",
            Gate::Idle => "Gi",
        }
    }

    pub fn from_label(s: &str) -> Option<Gate> {
        match s {
            "Gx" => Some(Gate::SqrtX),
            "Gy" => Some(Gate::SqrtY),
            "Gi" => Some(Gate::Idle),
            _ => None,
        }
    }

    /// Ideal rotation angle.
    pub fn target_theta(self) -> f64 {
        match self {
            Gate::SqrtX | Gate::SqrtY => FRAC_PI_2,
            Gate::Idle => 0.0,
        }
    }

    /// Fixed rotation axis of the driven gates.
    pub fn target_phi(self) -> f64 {
        match self {
            Gate::SqrtX | Gate::Idle => 0.0,
            Gate::SqrtY => FRAC_PI_2,
        }
    }

    pub fn target_unitary(self) -> Unitary2 {
        Unitary2::rotation(self.target_theta(), self.target_phi())
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gate::SqrtX => "sqrt(X)",
            Gate::SqrtY => "sqrt(Y)",
            Gate::Idle => "I",
        })
    }
}

/// Trapezoidal optical power pulse, linear in power on both edges.
/// Rise and fall are 10–90% times; the ramps are extended linearly to 0–100%.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    pub rise_time: f64,
    pub fall_time: f64,
    pub plateau: f64,
}

impl PulseShape {
    pub fn rectangle(duration: f64) -> Self {
        PulseShape {
            rise_time: 0.0,
            fall_time: 0.0,
            plateau: duration,
        }
    }

    /// Edges measured on the MZM switch: 0.3 µs rise, 0.5 µs fall.
    pub fn mzm(plateau: f64) -> Self {
        PulseShape {
            rise_time: 0.3,
            fall_time: 0.5,
            plateau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rise_time >= 0.0 && self.fall_time >= 0.0 && self.plateau >= 0.0) {
            return Err(Error::invalid("pulse durations must be ≥ 0"));
        }
        Ok(())
    }

    pub fn full_rise(&self) -> f64 {
        self.rise_time / 0.8
    }

    pub fn full_fall(&self) -> f64 {
        self.fall_time / 0.8
    }

    pub fn duration(&self) -> f64 {
        self.full_rise() + self.plateau + self.full_fall()
    }

    /// Relative power at time `t` from the start of the rising edge.
    pub fn power(&self, t: f64) -> f64 {
        let (r, f) = (self.full_rise(), self.full_fall());
        if t < 0.0 || t > self.duration() {
            0.0
        } else if t < r {
            t / r
        } else if t <= r + self.plateau {
            1.0
        } else {
            ((self.duration() - t) / f).clamp(0.0, 1.0)
        }
    }

    /// Pulse energy `∫ P dt` in units of peak power × µs.
    pub fn energy(&self) -> f64 {
        self.plateau + 0.5 * (self.full_rise() + self.full_fall())
    }
}

pub fn rabi_rate_from_power(p_rel: f64, omega_ref: f64) -> Result<f64> {
    if !(p_rel >= 0.0) {
        return Err(Error::invalid("relative power must be ≥ 0"));
    }
    Ok(omega_ref * p_rel.sqrt())
}

/// Resonant Rabi rate for a π-pulse time.
pub fn omega_from_pi_time(t_pi: f64) -> f64 {
    PI / t_pi
}

/// Excited-state population `sin²(Ωt/2)` of a resonant two-level system.
pub fn rabi_flop(omega: f64, durations: &[f64]) -> Vec<f64> {
    durations.iter().map(|t| (omega * t / 2.0).sin().powi(2)).collect()
}

/// Residual idle-gate rotation `(π/2)·10^(−ER/20)`.
pub fn idle_angle_from_extinction(extinction_db: f64) -> f64 {
    FRAC_PI_2 * 10f64.powf(-extinction_db / 20.0)
}

/// Inverse of [`idle_angle_from_extinction`].
pub fn extinction_from_idle_angle(theta_i: f64) -> f64 {
    20.0 * (FRAC_PI_2 / theta_i).log10()
}

/// Extinction implied by on/off π-times, `20 log₁₀(t_off / t_on)`.
pub fn extinction_from_pi_times(t_pi_on: f64, t_pi_off: f64) -> f64 {
    20.0 * (t_pi_off / t_pi_on).log10()
}

/// Relative on-state power that turns the π/2 gate into a `π/2 + dtheta` rotation.
pub fn on_power_for_angle_offset(dtheta: f64) -> f64 {
    ((FRAC_PI_2 + dtheta) / FRAC_PI_2).powi(2)
}

/// Rotation angle `∫ Ω_peak √P(t) dt` of a shaped pulse.
pub fn effective_angle(pulse: &PulseShape, omega_peak: f64) -> f64 {
    let rel = 1e-10;
    let (r, f) = (pulse.full_rise(), pulse.full_fall());
    let t1 = r + pulse.plateau;
    let amp = |t: f64| pulse.power(t).sqrt();
    let rise = if r > 0.0 { integrate(amp, 0.0, r, rel) } else { 0.0 };
    let fall = if f > 0.0 { integrate(amp, t1, t1 + f, rel) } else { 0.0 };
    omega_peak * (rise + pulse.plateau + fall)
}

/// Adaptive Simpson quadrature to relative tolerance `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(&f, a, fa, b, fb);
    // scale the absolute tolerance from a coarse estimate of the integral
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    recurse(&f, a, fa, b, fb, m, fm, whole, rel_tol * scale, 60)
}

/// Ornstein-Uhlenbeck parameters for one drifting quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    /// Stationary standard deviation.
    pub std: f64,
    /// Mean-reversion time in µs.
    pub reversion_time: f64,
}

impl OuParams {
    /// Exact OU update over `dt`.
    pub fn step<R: Rng + ?Sized>(&self, x: f64, dt: f64, rng: &mut R) -> f64 {
        if self.std == 0.0 {
            return 0.0;
        }
        let decay = (-dt / self.reversion_time).exp();
        let z: f64 = StandardNormal.sample(rng);
        x * decay + self.std * (1.0 - decay * decay).sqrt() * z
    }

    pub fn stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.std * z
    }
}

/// Slow drift of the extinction ratio (dB) and of the relative on-state power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftModel {
    pub extinction_db: OuParams,
    pub power_rel: OuParams,
}

impl DriftModel {
    /// Unstabilized MZM output: ~1.5 dB extinction wander on the hour scale
    /// and sub-percent on-power wander over fractions of a second.
    pub fn mzm() -> Self {
        DriftModel {
            extinction_db: OuParams {
                std: 1.5,
                reversion_time: 3.6e9,
            },
            power_rel: OuParams {
                std: 0.005,
                reversion_time: 2.0e5,
            },
        }
    }

    /// AOM with output power stabilization.
    pub fn stabilized() -> Self {
        DriftModel {
            extinction_db: OuParams {
                std: 0.0,
                reversion_time: 3.6e9,
            },
            power_rel: OuParams {
                std: 0.0005,
                reversion_time: 2.0e5,
            },
        }
    }
}

/// How the uncontrolled optical phase seen during idle gates behaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeakagePhase {
    /// Same known phase for every sequence.
    Fixed(f64),
    /// Drawn uniformly in [0, 2π) once per experiment, then held.
    PerExperiment,
    /// Held within a sequence, Gaussian random walk of the given step between sequences.
    RandomWalk { step_std: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Relative standard deviation of the pulse energy.
    pub energy_jitter_rel: f64,
    pub drift: Option<DriftModel>,
    pub leakage_phase: LeakagePhase,
    /// Coherence time in µs; `None` disables dephasing.
    pub t2: Option<f64>,
    /// Gap between consecutive gates in µs.
    pub gap: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            energy_jitter_rel: 0.006,
            drift: None,
            leakage_phase: LeakagePhase::PerExperiment,
            t2: Some(600.0),
            gap: 5.0,
        }
    }
}

impl NoiseModel {
    /// No stochastic effects; the idle phase is fixed at `leakage_phase`.
    pub fn noiseless(leakage_phase: f64) -> Self {
        NoiseModel {
            energy_jitter_rel: 0.0,
            drift: None,
            leakage_phase: LeakagePhase::Fixed(leakage_phase),
            t2: None,
            gap: 5.0,
        }
    }

    pub fn mzm() -> Self {
        NoiseModel {
            drift: Some(DriftModel::mzm()),
            ..Default::default()
        }
    }

    pub fn aom_stabilized() -> Self {
        NoiseModel {
            drift: Some(DriftModel::stabilized()),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.energy_jitter_rel >= 0.0) {
            return Err(Error::invalid("energy jitter must be ≥ 0"));
        }
        if let Some(t2) = self.t2 {
            if !(t2 > 0.0) {
                return Err(Error::invalid("T2 must be positive"));
            }
        }
        if !(self.gap >= 0.0) {
            return Err(Error::invalid("inter-gate gap must be ≥ 0"));
        }
        Ok(())
    }

    /// True when repeated realizations of the same gate can differ.
    pub fn is_stochastic(&self) -> bool {
        self.energy_jitter_rel > 0.0
            || self
                .drift
                .is_some_and(|d| d.extinction_db.std > 0.0 || d.power_rel.std > 0.0)
    }
}

/// Drift and leakage state carried through one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SequenceContext {
    pub leakage_phase: f64,
    pub extinction_offset_db: f64,
    pub power_offset_rel: f64,
}

/// Evolves the slow noise state across the sequences of one experiment.
#[derive(Debug, Clone)]
pub struct NoiseTrajectory {
    noise: NoiseModel,
    ctx: SequenceContext,
}

impl NoiseTrajectory {
    pub fn start<R: Rng + ?Sized>(noise: NoiseModel, rng: &mut R) -> Self {
        let leakage_phase = match noise.leakage_phase {
            LeakagePhase::Fixed(p) => wrap_angle(p),
            LeakagePhase::PerExperiment | LeakagePhase::RandomWalk { .. } => rng.random_range(0.0..TAU),
        };
        let (er, pw) = match noise.drift {
            Some(d) => (d.extinction_db.stationary(rng), d.power_rel.stationary(rng)),
            None => (0.0, 0.0),
        };
        NoiseTrajectory {
            noise,
            ctx: SequenceContext {
                leakage_phase,
                extinction_offset_db: er,
                power_offset_rel: pw,
            },
        }
    }

    pub fn context(&self) -> SequenceContext {
        self.ctx
    }

    /// Advances the drift by `dt` µs and moves to the next sequence.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        if let Some(d) = self.noise.drift {
            self.ctx.extinction_offset_db = d.extinction_db.step(self.ctx.extinction_offset_db, dt, rng);
            self.ctx.power_offset_rel = d.power_rel.step(self.ctx.power_offset_rel, dt, rng);
        }
        if let LeakagePhase::RandomWalk { step_std } = self.noise.leakage_phase {
            let z: f64 = StandardNormal.sample(rng);
            self.ctx.leakage_phase = wrap_angle(self.ctx.leakage_phase + step_std * z);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalGateSpec {
    pub gate: Gate,
    /// Gate duration in µs; idle gates last as long as driven ones.
    pub duration: f64,
    /// On-state power relative to the π/2 calibration.
    pub on_power_rel: f64,
    /// Off-state suppression; `f64::INFINITY` for a perfect switch.
    pub extinction_db: f64,
}

impl OpticalGateSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::invalid("gate duration must be positive"));
        }
        if !(self.extinction_db >= 0.0) {
            return Err(Error::invalid("extinction must be ≥ 0 dB"));
        }
        if !(self.on_power_rel >= 0.0) {
            return Err(Error::invalid("on-state power must be ≥ 0"));
        }
        Ok(())
    }
}

/// Nominal π/2 duration for the measured 21.95 µs on-state π time.
pub const DEFAULT_GATE_DURATION: f64 = 21.95 / 2.0;

/// Static physical description of the three gates driven through one switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateModel {
    /// Common angle offset of √X and √Y from π/2.
    pub dtheta: f64,
    pub extinction_db: f64,
    pub duration: f64,
    pub noise: NoiseModel,
}

impl GateModel {
    pub fn ideal() -> Self {
        GateModel {
            dtheta: 0.0,
            extinction_db: f64::INFINITY,
            duration: DEFAULT_GATE_DURATION,
            noise: NoiseModel::noiseless(0.0),
        }
    }

    /// Noise-free model with explicit physical angles.
    pub fn from_angles(dtheta: f64, theta_i: f64, phi_i: f64) -> Self {
        GateModel {
            dtheta,
            extinction_db: if theta_i > 0.0 {
                extinction_from_idle_angle(theta_i)
            } else {
                f64::INFINITY
            },
            duration: DEFAULT_GATE_DURATION,
            noise: NoiseModel::noiseless(phi_i),
        }
    }

    pub fn spec(&self, gate: Gate) -> OpticalGateSpec {
        OpticalGateSpec {
            gate,
            duration: self.duration,
            on_power_rel: on_power_for_angle_offset(self.dtheta),
            extinction_db: self.extinction_db,
        }
    }
}

/// Samples the pulse-energy multiplier `1 + σ z`, floored at zero.
fn jitter_factor<R: Rng + ?Sized>(rel: f64, rng: &mut R) -> f64 {
    if rel == 0.0 {
        return 1.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    (1.0 + rel * z).max(0.0)
}

/// Rotation angle and axis actually applied by one gate.
pub fn realized_angles<R: Rng + ?Sized>(
    spec: &OpticalGateSpec,
    noise: &NoiseModel,
    ctx: &SequenceContext,
    rng: &mut R,
) -> (f64, f64) {
    let energy = jitter_factor(noise.energy_jitter_rel, rng) * (1.0 + ctx.power_offset_rel).max(0.0);
    let j = energy.sqrt();
    match spec.gate {
        Gate::SqrtX | Gate::SqrtY => (FRAC_PI_2 * spec.on_power_rel.sqrt() * j, spec.gate.target_phi()),
        Gate::Idle => {
            let er = spec.extinction_db + ctx.extinction_offset_db;
            (idle_angle_from_extinction(er) * j, ctx.leakage_phase)
        }
    }
}

pub fn realize_gate<R: Rng + ?Sized>(
    spec: &OpticalGateSpec,
    noise: &NoiseModel,
    ctx: &SequenceContext,
    rng: &mut R,
) -> Unitary2 {
    let (theta, phi) = realized_angles(spec, noise, ctx, rng);
    Unitary2::rotation(theta, phi)
}

/// Gate as a channel, with dephasing over gate plus gap applied after the rotation.
pub fn realize_gate_channel<R: Rng + ?Sized>(
    spec: &OpticalGateSpec,
    noise: &NoiseModel,
    ctx: &SequenceContext,
    rng: &mut R,
) -> Ptm {
    let r = ptm_from_unitary(&realize_gate(spec, noise, ctx, rng));
    match noise.t2 {
        Some(t2) => Ptm::phase_damping((-(spec.duration + noise.gap) / t2).exp()) * r,
        None => r,
    }
}

/// Relative pulse energies (nominal = 1) for `n` pulses spaced `period` µs apart.
pub fn pulse_energy_histogram<R: Rng + ?Sized>(
    n: usize,
    pulse: &PulseShape,
    noise: &NoiseModel,
    period: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("need at least one pulse"));
    }
    pulse.validate()?;
    noise.validate()?;
    let mut drift = noise.drift.map(|d| (d.power_rel, d.power_rel.stationary(rng)));
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let offset = drift.map_or(0.0, |(_, x)| x);
        out.push(jitter_factor(noise.energy_jitter_rel, rng) * (1.0 + offset));
        if let Some((p, x)) = drift.as_mut() {
            *x = p.step(*x, period, rng);
        }
    }
    Ok(out)
}

/// One sample per line, with `#` metadata lines first.
pub fn write_histogram_csv<W: Write>(
    mut out: W,
    samples: &[f64],
    seed: u64,
    pulse: &PulseShape,
    noise: &NoiseModel,
) -> std::io::Result<()> {
    writeln!(out, "# seed = {seed}")?;
    writeln!(
        out,
        "# pulse rise_us = {} fall_us = {} plateau_us = {} nominal_energy = {}",
        pulse.rise_time,
        pulse.fall_time,
        pulse.plateau,
        pulse.energy()
    )?;
    writeln!(out, "# energy_jitter_rel = {}", noise.energy_jitter_rel)?;
    match noise.drift {
        Some(d) => writeln!(
            out,
            "# drift power_std = {} power_reversion_us = {} extinction_std_db = {} extinction_reversion_us = {}",
            d.power_rel.std, d.power_rel.reversion_time, d.extinction_db.std, d.extinction_db.reversion_time
        )?,
        None => writeln!(out, "# drift = none")?,
    }
    writeln!(out, "energy_rel")?;
    for s in samples {
        writeln!(out, "{s:.9e}")?;
    }
    Ok(())
}

pub fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}
