//! Transfer-matrix model of the piezo-actuated dual-MZI modulator and of
//! all-pass ring resonators.
//!
//! Fields are two-mode complex amplitude vectors; every element is a 2×2
//! [`TransferMatrix2`]. A directional coupler is `√η [[t, ik], [ik, t]]` with
//! `k² = power_split`, `t² = 1 − k²` and `η` the insertion-loss power factor.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::{Error, Result};

/// Power factor for a loss in dB.
pub fn db_to_power(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Power ratio expressed in dB (positive for attenuation `ratio < 1`).
pub fn power_to_db(ratio: f64) -> f64 {
    -10.0 * ratio.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerSpec {
    /// Fraction of power crossing to the other waveguide.
    pub power_split: f64,
    pub insertion_loss_db: f64,
}

impl CouplerSpec {
    pub fn lossless(power_split: f64) -> Self {
        CouplerSpec {
            power_split,
            insertion_loss_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.power_split) {
            return Err(Error::invalid(format!(
                "coupler power split {} outside [0, 1]",
                self.power_split
            )));
        }
        if !(self.insertion_loss_db >= 0.0) {
            return Err(Error::invalid("coupler insertion loss must be ≥ 0 dB"));
        }
        Ok(())
    }
}

/// Actuation and loss of the two arms of one MZI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmSpec {
    /// Propagation loss along each meander.
    pub loss_db: f64,
    /// Differential phase at zero volts.
    pub bias_phase: f64,
    /// Voltage giving a π differential phase.
    pub vpi: f64,
}

impl ArmSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.vpi > 0.0) {
            return Err(Error::invalid("V_pi must be positive"));
        }
        if !(self.loss_db >= 0.0) {
            return Err(Error::invalid("arm loss must be ≥ 0 dB"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziStage {
    pub input: CouplerSpec,
    pub output: CouplerSpec,
    pub arms: ArmSpec,
}

impl MziStage {
    /// Lossless stage with identical couplers and zero bias.
    pub fn symmetric(power_split: f64, vpi: f64) -> Self {
        MziStage {
            input: CouplerSpec::lossless(power_split),
            output: CouplerSpec::lossless(power_split),
            arms: ArmSpec {
                loss_db: 0.0,
                bias_phase: 0.0,
                vpi,
            },
        }
    }

    /// Transfer matrix at differential phase `dphi` (push-pull, zero common phase).
    pub fn matrix_at_phase(&self, dphi: f64) -> Result<TransferMatrix2> {
        mzi_matrix(&self.input, &self.output, dphi / 2.0, -dphi / 2.0, self.arms.loss_db)
    }

    pub fn matrix_at_voltage(&self, v: f64) -> Result<TransferMatrix2> {
        let (top, bottom) = voltage_to_phases(v, &self.arms);
        mzi_matrix(&self.input, &self.output, top, bottom, self.arms.loss_db)
    }
}

/// How the two outputs of the first MZI feed the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Routing {
    /// Output port j of stage 1 feeds input port j of stage 2.
    #[default]
    Straight,
    /// Ports are swapped between the stages.
    Crossed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Topology {
    /// Both outputs of the first MZI become the inputs of the second.
    #[default]
    SeriesPair,
    /// One output of the first MZI terminated, the other re-split by an extra coupler.
    TerminatedOutput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceSpec {
    pub stages: [MziStage; 2],
    pub routing: Routing,
    pub topology: Topology,
    pub input_port: usize,
    /// Output port of the second MZI carrying light to the ion.
    pub designated_output: usize,
}

impl DeviceSpec {
    /// Two identical lossless stages with the given coupler split.
    pub fn uniform(power_split: f64, vpi: f64) -> Self {
        DeviceSpec {
            stages: [MziStage::symmetric(power_split, vpi); 2],
            routing: Routing::Straight,
            topology: Topology::SeriesPair,
            input_port: 0,
            designated_output: 0,
        }
    }

    /// 50/50 couplers, no loss.
    pub fn perfect(vpi: f64) -> Self {
        Self::uniform(0.5, vpi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.topology != Topology::SeriesPair {
            return Err(Error::Unimplemented("terminated-output MZM topology"));
        }
        if self.input_port > 1 || self.designated_output > 1 {
            return Err(Error::invalid("port indices must be 0 or 1"));
        }
        for s in &self.stages {
            s.input.validate()?;
            s.output.validate()?;
            s.arms.validate()?;
        }
        Ok(())
    }

    /// Designated-output power for unit input power, at the given differential phases.
    pub fn output_power_at_phases(&self, dphi1: f64, dphi2: f64) -> Result<f64> {
        self.validate()?;
        let m =
            self.stages[1].matrix_at_phase(dphi2)?.0 * self.routing_matrix() * self.stages[0].matrix_at_phase(dphi1)?.0;
        Ok(m[(self.designated_output, self.input_port)].norm_sqr())
    }

    /// Designated-output power for unit input power, at the given drive voltages.
    pub fn output_power(&self, v1: f64, v2: f64) -> Result<f64> {
        let m = mzm_matrix(self, v1, v2)?;
        Ok(m.power(self.designated_output, self.input_port))
    }

    fn routing_matrix(&self) -> Matrix2<C64> {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        match self.routing {
            Routing::Straight => Matrix2::new(o, z, z, o),
            Routing::Crossed => Matrix2::new(z, o, o, z),
        }
    }
}

/// A 2×2 complex amplitude transfer matrix. `m[(out, in)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix2(pub Matrix2<C64>);

impl TransferMatrix2 {
    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    /// Power reaching `output` from unit power at `input`.
    pub fn power(&self, output: usize, input: usize) -> f64 {
        self.0[(output, input)].norm_sqr()
    }

    pub fn singular_values(&self) -> [f64; 2] {
        let sv = self.0.singular_values();
        [sv[0], sv[1]]
    }

    pub fn unitarity_error(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix2::identity()).norm()
    }
}

impl std::ops::Mul for TransferMatrix2 {
    type Output = TransferMatrix2;

    fn mul(self, rhs: Self) -> Self {
        TransferMatrix2(self.0 * rhs.0)
    }
}

pub fn coupler_matrix(c: &CouplerSpec) -> Result<TransferMatrix2> {
    c.validate()?;
    let amp = db_to_power(c.insertion_loss_db).sqrt();
    let k = c.power_split.sqrt();
    let t = (1.0 - c.power_split).sqrt();
    let tt = C64::new(amp * t, 0.0);
    let ik = C64::new(0.0, amp * k);
    Ok(TransferMatrix2(Matrix2::new(tt, ik, ik, tt)))
}

/// Push-pull arm phases `(φ_top, φ_bottom)` with
/// `φ_top − φ_bottom = π v / V_π + bias` and zero common phase.
pub fn voltage_to_phases(v: f64, arm: &ArmSpec) -> (f64, f64) {
    let diff = PI * v / arm.vpi + arm.bias_phase;
    (diff / 2.0, -diff / 2.0)
}

pub fn mzi_matrix(
    c_in: &CouplerSpec,
    c_out: &CouplerSpec,
    phi_top: f64,
    phi_bottom: f64,
    arm_loss_db: f64,
) -> Result<TransferMatrix2> {
    if !(arm_loss_db >= 0.0) {
        return Err(Error::invalid("arm loss must be ≥ 0 dB"));
    }
    let a = db_to_power(arm_loss_db).sqrt();
    let z = C64::new(0.0, 0.0);
    let arms = Matrix2::new(C64::from_polar(a, phi_top), z, z, C64::from_polar(a, phi_bottom));
    Ok(TransferMatrix2(
        coupler_matrix(c_out)?.0 * arms * coupler_matrix(c_in)?.0,
    ))
}

/// Full two-stage modulator matrix at drive voltages `v1`, `v2`.
pub fn mzm_matrix(dev: &DeviceSpec, v1: f64, v2: f64) -> Result<TransferMatrix2> {
    dev.validate()?;
    let first = dev.stages[0].matrix_at_voltage(v1)?;
    let second = dev.stages[1].matrix_at_voltage(v2)?;
    Ok(TransferMatrix2(second.0 * dev.routing_matrix() * first.0))
}

/// Normalized designated-output power over a voltage grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMap {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// `power[i][j]` at `(v1[i], v2[j])`, normalized to the grid maximum.
    pub power: Vec<Vec<f64>>,
    /// Un-normalized grid maximum.
    pub peak_power: f64,
}

impl TransmissionMap {
    /// Relative Rabi rate `√P` at each grid point.
    pub fn rabi_contours(&self) -> Vec<Vec<f64>> {
        self.power
            .iter()
            .map(|row| row.iter().map(|p| p.sqrt()).collect())
            .collect()
    }

    pub fn max(&self) -> f64 {
        self.power.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.power.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_grid_csv(out, &self.v1, &self.v2, &self.power)
    }

    pub fn write_contour_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_grid_csv(out, &self.v1, &self.v2, &self.rabi_contours())
    }
}

/// Nine significant digits.
pub fn format_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn write_grid_csv<W: Write>(mut out: W, v1: &[f64], v2: &[f64], cells: &[Vec<f64>]) -> std::io::Result<()> {
    let mut line = String::from("v1\\v2");
    for v in v2 {
        let _ = write!(line, ",{}", format_sig9(*v));
    }
    writeln!(out, "{line}")?;
    for (v, row) in v1.iter().zip(cells) {
        line.clear();
        line.push_str(&format_sig9(*v));
        for c in row {
            let _ = write!(line, ",{}", format_sig9(*c));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn transmission_map(dev: &DeviceSpec, v1_grid: &[f64], v2_grid: &[f64]) -> Result<TransmissionMap> {
    if v1_grid.is_empty() || v2_grid.is_empty() {
        return Err(Error::invalid("transmission map grids must be non-empty"));
    }
    dev.validate()?;
    let raw: Vec<Vec<f64>> = v1_grid
        .iter()
        .map(|&a| {
            v2_grid
                .iter()
                .map(|&b| dev.output_power(a, b))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let peak = raw.iter().flatten().copied().fold(0.0, f64::max);
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::Numeric("transmission map has no positive power".into()));
    }
    let power = raw
        .into_iter()
        .map(|row| row.into_iter().map(|p| p / peak).collect())
        .collect();
    Ok(TransmissionMap {
        v1: v1_grid.to_vec(),
        v2: v2_grid.to_vec(),
        power,
        peak_power: peak,
    })
}

/// Voltage search box for both stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageRange {
    pub v1: (f64, f64),
    pub v2: (f64, f64),
}

impl VoltageRange {
    pub fn symmetric(half_width: f64) -> Self {
        VoltageRange {
            v1: (-half_width, half_width),
            v2: (-half_width, half_width),
        }
    }

    fn clamp(&self, v: &[f64]) -> (f64, f64) {
        (v[0].clamp(self.v1.0, self.v1.1), v[1].clamp(self.v2.0, self.v2.1))
    }
}

/// Extinction ratios above this are reported as this value.
pub const EXTINCTION_CAP_DB: f64 = 120.0;

const COARSE_POINTS: usize = 101;
const REFINE_CANDIDATES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionResult {
    pub v_on: (f64, f64),
    pub v_off: (f64, f64),
    pub power_on: f64,
    pub power_off: f64,
    /// `10 log₁₀(P_on / P_off)`, capped at [`EXTINCTION_CAP_DB`].
    pub extinction_db: f64,
    pub capped: bool,
}

/// Finds on and off voltages: coarse 101×101 grid, then Nelder-Mead
/// refinement of the best few grid-local extrema.
pub fn optimize_extinction(dev: &DeviceSpec, range: VoltageRange) -> Result<ExtinctionResult> {
    dev.validate()?;
    if !(range.v1.0 < range.v1.1 && range.v2.0 < range.v2.1)
        || ![range.v1.0, range.v1.1, range.v2.0, range.v2.1]
            .iter()
            .all(|v| v.is_finite())
    {
        return Err(Error::invalid("voltage range must be bounded and non-empty"));
    }
    let g1 = linspace(range.v1.0, range.v1.1, COARSE_POINTS);
    let g2 = linspace(range.v2.0, range.v2.1, COARSE_POINTS);
    let grid: Vec<Vec<f64>> = g1
        .iter()
        .map(|&a| g2.iter().map(|&b| dev.output_power(a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let step = [g1[1] - g1[0], g2[1] - g2[0]];

    let power = |v: &[f64]| -> f64 {
        let (a, b) = range.clamp(v);
        dev.output_power(a, b).unwrap_or(f64::NAN)
    };

    let on = refine(&grid, &g1, &g2, step, |p| -p, |v| -power(v))?;
    let off = refine(&grid, &g1, &g2, step, |p| p, power)?;
    let v_on = range.clamp(&on.0);
    let v_off = range.clamp(&off.0);
    let power_on = dev.output_power(v_on.0, v_on.1)?;
    let power_off = dev.output_power(v_off.0, v_off.1)?;
    let raw_db = 10.0 * (power_on / power_off).log10();
    let capped = !(raw_db < EXTINCTION_CAP_DB);
    Ok(ExtinctionResult {
        v_on,
        v_off,
        power_on,
        power_off,
        extinction_db: if capped { EXTINCTION_CAP_DB } else { raw_db },
        capped,
    })
}

fn refine<S, F>(
    grid: &[Vec<f64>],
    g1: &[f64],
    g2: &[f64],
    step: [f64; 2],
    score: S,
    objective: F,
) -> Result<(Vec<f64>, f64)>
where
    S: Fn(f64) -> f64,
    F: Fn(&[f64]) -> f64,
{
    let (n1, n2) = (grid.len(), grid[0].len());
    let mut candidates = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            let s = score(grid[i][j]);
            let mut local = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= n1 as i64 || b >= n2 as i64 {
                        continue;
                    }
                    if score(grid[a as usize][b as usize]) < s {
                        local = false;
                        break 'nb;
                    }
                }
            }
            if local {
                candidates.push((s, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.truncate(REFINE_CANDIDATES);

    let opts = NelderMeadOptions {
        max_iter: 500,
        f_tol_rel: 1e-12,
        f_tol_abs: 1e-18,
        x_tol: 1e-9 * (1.0 + step[0].abs().max(step[1].abs()) * COARSE_POINTS as f64),
        step: vec![0.5 * step[0], 0.5 * step[1]],
        restarts: 1,
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for &(_, i, j) in &candidates {
        let m = nelder_mead(&objective, &[g1[i], g2[j]], &opts);
        if !m.converged {
            return Err(Error::NotConverged {
                what: "extinction refinement",
                iterations: m.iterations,
            });
        }
        if best.as_ref().is_none_or(|b| m.f < b.1) {
            best = Some((m.x, m.f));
        }
    }
    best.ok_or_else(|| Error::Numeric("no grid candidates".into()))
}

/// All-pass ring coupled to a bus waveguide. Rates share one angular-frequency unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSpec {
    pub intrinsic_rate: f64,
    pub coupling_rate: f64,
    pub resonance_detuning: f64,
    pub q_factor: f64,
}

impl RingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.intrinsic_rate > 0.0 && self.coupling_rate > 0.0) {
            return Err(Error::invalid("ring loss and coupling rates must be positive"));
        }
        Ok(())
    }

    /// Steady-state bus transmission at a detuning from resonance.
    pub fn transmission_at(&self, detuning: f64) -> f64 {
        let half_diff = 0.5 * (self.intrinsic_rate - self.coupling_rate);
        let half_sum = 0.5 * (self.intrinsic_rate + self.coupling_rate);
        (C64::new(half_diff, detuning) / C64::new(half_sum, detuning)).norm_sqr()
    }

    /// Loaded quality factor at carrier angular frequency `omega`.
    pub fn loaded_q(&self, omega: f64) -> f64 {
        omega / (self.intrinsic_rate + self.coupling_rate)
    }
}

/// On-resonance transmission `((κ_int − κ_ext)/(κ_int + κ_ext))²`.
pub fn ring_transmission(r: &RingSpec) -> Result<f64> {
    r.validate()?;
    Ok(r.transmission_at(0.0))
}

/// Extinction in dB for a transmitted power fraction; infinite at zero.
pub fn extinction_db(transmission: f64) -> f64 {
    -10.0 * transmission.log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBudget {
    pub items: Vec<(String, f64)>,
    pub total_db: f64,
}

pub fn loss_budget<S: AsRef<str>>(components: &[(S, f64)]) -> Result<LossBudget> {
    let mut items = Vec::with_capacity(components.len());
    let mut total_db = 0.0;
    for (label, loss) in components {
        if !(*loss >= 0.0) {
            return Err(Error::invalid(format!("negative loss for {}", label.as_ref())));
        }
        items.push((label.as_ref().to_owned(), *loss));
        total_db += loss;
    }
    Ok(LossBudget { items, total_db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn coupler_examples() {
        let m = coupler_matrix(&CouplerSpec::lossless(0.5)).unwrap();
        let s = FRAC_1_SQRT_2;
        let expect = Matrix2::new(C64::new(s, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(s, 0.0));
        assert!((m.0 - expect).norm() < 1e-15);

        let m = coupler_matrix(&CouplerSpec::lossless(0.0)).unwrap();
        assert!((m.0 - Matrix2::identity()).norm() < 1e-15);

        let m = coupler_matrix(&CouplerSpec::lossless(0.4)).unwrap();
        assert_abs_diff_eq!(m.0[(0, 0)].re, 0.6f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.0[(1, 0)].im, 0.4f64.sqrt(), epsilon = 1e-15);
        assert!(m.unitarity_error() < 1e-12);

        assert!(coupler_matrix(&CouplerSpec::lossless(1.2)).is_err());
        assert!(coupler_matrix(&CouplerSpec::lossless(-0.1)).is_err());
    }

    #[test]
    fn push_pull_phases() {
        let arm = ArmSpec {
            loss_db: 0.0,
            bias_phase: 0.0,
            vpi: 24.0,
        };
        let (t, b) = voltage_to_phases(24.0, &arm);
        assert_abs_diff_eq!(t - b, PI, epsilon = 1e-15);
        let (t, b) = voltage_to_phases(12.0, &arm);
        assert_abs_diff_eq!(t - b, PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t + b, 0.0);
        let biased = ArmSpec { bias_phase: 0.3, ..arm };
        let (t, b) = voltage_to_phases(0.0, &biased);
        assert_abs_diff_eq!(t - b, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn balanced_mzi_ports() {
        let c = CouplerSpec::lossless(0.5);
        let m = mzi_matrix(&c, &c, 0.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(m.power(1, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.power(0, 0), 0.0, epsilon = 1e-15);
        let m = mzi_matrix(&c, &c, PI / 2.0, -PI / 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(m.power(0, 0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn imbalanced_mzi_bar_floor_by_scan() {
        let c = CouplerSpec::lossless(0.4);
        let n = 100_000;
        let (mut bar_min, mut cross_min) = (f64::INFINITY, f64::INFINITY);
        for i in 0..n {
            let d = 2.0 * PI * i as f64 / n as f64;
            let m = mzi_matrix(&c, &c, d / 2.0, -d / 2.0, 0.0).unwrap();
            bar_min = bar_min.min(m.power(0, 0));
            cross_min = cross_min.min(m.power(1, 0));
        }
        assert_abs_diff_eq!(bar_min, 0.04, epsilon = 1e-12);
        assert!(cross_min < 1e-20);
        assert_abs_diff_eq!(power_to_db(bar_min), 13.979, epsilon = 1e-3);
    }

    #[test]
    fn lossy_elements_are_passive() {
        let c = CouplerSpec {
            power_split: 0.45,
            insertion_loss_db: 0.3,
        };
        let m = mzi_matrix(&c, &c, 0.4, -1.0, 1.5).unwrap();
        assert!(m.singular_values().iter().all(|&s| s <= 1.0 + 1e-12));
        assert!(mzi_matrix(&c, &c, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn perfect_device_on_state() {
        let dev = DeviceSpec::perfect(24.0);
        assert_abs_diff_eq!(dev.output_power(0.0, 0.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn perfect_device_phase_lattice() {
        // on at (mπ, nπ) with m + n even, off with m + n odd
        let dev = DeviceSpec::perfect(1.0);
        for m in -2i32..=2 {
            for n in -2i32..=2 {
                let p = dev.output_power_at_phases(m as f64 * PI, n as f64 * PI).unwrap();
                let expect = if (m + n).rem_euclid(2) == 0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(p, expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn terminated_topology_is_rejected() {
        let dev = DeviceSpec {
            topology: Topology::TerminatedOutput,
            ..DeviceSpec::perfect(1.0)
        };
        assert!(matches!(dev.output_power(0.0, 0.0), Err(Error::Unimplemented(_))));
    }

    #[test]
    fn map_examples() {
        let dev = DeviceSpec::perfect(24.0);
        let m = transmission_map(&dev, &[0.0], &[0.0]).unwrap();
        assert_eq!(m.power, vec![vec![1.0]]);
        assert!(transmission_map(&dev, &[], &[0.0]).is_err());

        let g = linspace(-48.0, 48.0, 201);
        let m = transmission_map(&dev, &g, &g).unwrap();
        assert_abs_diff_eq!(m.max(), 1.0);
        assert!(m.min() <= 1e-10);
        for (pr, rr) in m.power.iter().zip(m.rabi_contours()) {
            for (p, r) in pr.iter().zip(rr) {
                assert_eq!(r, p.sqrt());
            }
        }
    }

    #[test]
    fn csv_layout() {
        let dev = DeviceSpec::perfect(24.0);
        let m = transmission_map(&dev, &[0.0, 12.0], &[0.0, 6.0, 24.0]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "v1\\v2,0.00000000e0,6.00000000e0,2.40000000e1");
        assert!(lines[1].starts_with("0.00000000e0,1.00000000e0,"));
        assert_eq!(lines[2].split(',').count(), 4);
    }

    #[test]
    fn perfect_device_extinction_is_capped() {
        let r = optimize_extinction(&DeviceSpec::perfect(24.0), VoltageRange::symmetric(30.0)).unwrap();
        assert!(r.extinction_db >= 100.0);
        assert!(r.power_on > 0.999);
    }

    #[test]
    fn ring_examples() {
        let crit = RingSpec {
            intrinsic_rate: 1.0,
            coupling_rate: 1.0,
            resonance_detuning: 0.0,
            q_factor: 1e6,
        };
        assert_eq!(ring_transmission(&crit).unwrap(), 0.0);
        assert!(extinction_db(0.0).is_infinite());

        // invert ((1-x)/(1+x))^2 = 0.1 for the coupling ratio giving 10 dB
        let x = (1.0 - 0.1f64.sqrt()) / (1.0 + 0.1f64.sqrt());
        assert_abs_diff_eq!(x, 0.519, epsilon = 5e-4);
        let under = RingSpec {
            coupling_rate: 0.519,
            ..crit
        };
        assert_abs_diff_eq!(extinction_db(ring_transmission(&under).unwrap()), 10.0, epsilon = 0.02);

        let weak = RingSpec {
            coupling_rate: 1e-9,
            ..crit
        };
        assert_abs_diff_eq!(ring_transmission(&weak).unwrap(), 1.0, epsilon = 1e-8);

        // off resonance the bus transmits again
        assert!(crit.transmission_at(10.0) > 0.99);
        assert!(ring_transmission(&RingSpec {
            intrinsic_rate: 0.0,
            ..crit
        })
        .is_err());
    }

    #[test]
    fn loss_budget_examples() {
        let empty: [(&str, f64); 0] = [];
        assert_eq!(loss_budget(&empty).unwrap().total_db, 0.0);
        let b = loss_budget(&[
            ("grating in", 9.5),
            ("grating out", 9.5),
            ("MZI 1", 1.5),
            ("MZI 2", 1.5),
            ("routing", 0.4),
        ])
        .unwrap();
        assert_abs_diff_eq!(b.total_db, 22.4, epsilon = 1e-12);
        assert_eq!(b.items[2].0, "MZI 1");
        assert_eq!(loss_budget(&[("x", 3.3)]).unwrap().total_db, 3.3);
        assert!(loss_budget(&[("bad", -0.1)]).is_err());
    }
}
