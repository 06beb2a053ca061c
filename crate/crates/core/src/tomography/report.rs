//! Fit results, Table-style metric rows and their text/CSV output.

use std::io::Write;

use nalgebra::DMatrix;

use super::model::{PhysicalParams, PtmGateSet};
use crate::dynamics::{extinction_from_idle_angle, Gate};
use crate::optim::{Endpoint, ProfileInterval};
use crate::qchan::{
    diamond_error_bound, diamond_error_unitary, process_infidelity, ptm_from_unitary, unitary_from_angles, Ptm,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalEstimate {
    pub params: PhysicalParams,
    /// Profile intervals for (dtheta, theta_i, phi_i), when computed.
    pub intervals: Option<[ProfileInterval; 3]>,
}

impl PhysicalEstimate {
    /// Reported 1σ-style uncertainties: interval half-widths.
    pub fn sigmas(&self) -> Option<[f64; 3]> {
        self.intervals.map(|iv| iv.map(|i| i.half_width()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardEstimate {
    /// Gauge-optimized gate set.
    pub gate_set: PtmGateSet,
    /// Parameter covariance in [`PtmGateSet::to_params`] order, with gauge
    /// directions projected out.
    pub covariance: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Estimate {
    Physical(PhysicalEstimate),
    Standard(StandardEstimate),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateMetrics {
    pub gate: Gate,
    pub process_infidelity: f64,
    pub infidelity_sigma: f64,
    pub diamond_error: f64,
    pub diamond_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub estimate: Estimate,
    pub metrics: Vec<GateMetrics>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub metadata: Vec<(String, String)>,
}

impl FitReport {
    pub fn kind(&self) -> &'static str {
        match self.estimate {
            Estimate::Physical(_) => "physical",
            Estimate::Standard(_) => "standard",
        }
    }

    pub fn metric(&self, gate: Gate) -> Option<&GateMetrics> {
        self.metrics.iter().find(|m| m.gate == gate)
    }

    pub fn physical(&self) -> Option<&PhysicalEstimate> {
        match &self.estimate {
            Estimate::Physical(p) => Some(p),
            Estimate::Standard(_) => None,
        }
    }

    pub fn standard(&self) -> Option<&StandardEstimate> {
        match &self.estimate {
            Estimate::Standard(s) => Some(s),
            Estimate::Physical(_) => None,
        }
    }

    /// `key = value` summary.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "kind = {}", self.kind())?;
        writeln!(out, "log_likelihood = {:.12e}", self.log_likelihood)?;
        writeln!(out, "iterations = {}", self.iterations)?;
        writeln!(out, "converged = {}", self.converged)?;
        for (k, v) in &self.metadata {
            writeln!(out, "meta.{k} = {v}")?;
        }
        match &self.estimate {
            Estimate::Physical(p) => {
                let names = ["dtheta", "theta_i", "phi_i"];
                for (k, v) in names.iter().zip(p.params.to_vec()) {
                    writeln!(out, "{k} = {v:.12e}")?;
                }
                if let Some(iv) = &p.intervals {
                    for (k, i) in names.iter().zip(iv) {
                        writeln!(out, "{k}.lower = {}", fmt_endpoint(i.lower))?;
                        writeln!(out, "{k}.upper = {}", fmt_endpoint(i.upper))?;
                        writeln!(out, "{k}.sigma = {:.6e}", i.half_width())?;
                        writeln!(out, "{k}.unbounded = {}", i.is_unbounded())?;
                    }
                }
            }
            Estimate::Standard(s) => {
                for g in Gate::ALL {
                    let m = s.gate_set.gates[g.index()];
                    for r in 0..4 {
                        let row: Vec<String> = (0..4).map(|c| format!("{:.12e}", m[(r, c)])).collect();
                        writeln!(out, "ptm.{}.row{r} = {}", g.label(), row.join(" "))?;
                    }
                }
                let v =
                    |x: &nalgebra::Vector4<f64>| x.iter().map(|e| format!("{e:.12e}")).collect::<Vec<_>>().join(" ");
                writeln!(out, "rho = {}", v(&s.gate_set.rho))?;
                writeln!(out, "effect = {}", v(&s.gate_set.effect))?;
            }
        }
        for row in report_metrics(self) {
            let key = row.label.replace('/', "_");
            writeln!(out, "{key}.process_infidelity = {:.6e}", row.process_infidelity)?;
            writeln!(out, "{key}.process_infidelity.sigma = {:.6e}", row.infidelity_sigma)?;
            writeln!(out, "{key}.diamond_error = {:.6e}", row.diamond_error)?;
            writeln!(out, "{key}.diamond_error.sigma = {:.6e}", row.diamond_sigma)?;
            if let Some(er) = row.implied_extinction_db {
                writeln!(out, "{key}.implied_extinction_db = {er:.4}")?;
            }
        }
        Ok(())
    }

    pub fn write_metrics_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "gate,process_infidelity,infidelity_sigma,diamond_error,diamond_sigma,implied_extinction_db"
        )?;
        for row in report_metrics(self) {
            writeln!(
                out,
                "{},{:.9e},{:.9e},{:.9e},{:.9e},{}",
                row.label,
                row.process_infidelity,
                row.infidelity_sigma,
                row.diamond_error,
                row.diamond_sigma,
                row.implied_extinction_db.map_or(String::new(), |e| format!("{e:.6}")),
            )?;
        }
        Ok(())
    }
}

fn fmt_endpoint(e: Endpoint) -> String {
    match e {
        Endpoint::Found(v) => format!("{v:.12e}"),
        Endpoint::Limit(v) => format!("limit {v:.12e}"),
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub label: String,
    pub process_infidelity: f64,
    pub infidelity_sigma: f64,
    pub diamond_error: f64,
    pub diamond_sigma: f64,
    /// Extinction implied by the idle rotation angle (physical fits only).
    pub implied_extinction_db: Option<f64>,
}

/// Closed-form unitary metrics `(infidelity, diamond)` of one physical gate.
pub fn physical_gate_metrics(params: &PhysicalParams, gate: Gate) -> (f64, f64) {
    let u = unitary_from_angles(params.angles(gate));
    let t = gate.target_unitary();
    let inf = process_infidelity(&ptm_from_unitary(&u), &ptm_from_unitary(&t));
    (inf, diamond_error_unitary(&u, &t))
}

/// Metric uncertainty from a parameter uncertainty: the larger excursion of
/// the metric when the parameter moves by ±σ.
fn propagate(params: &PhysicalParams, index: usize, sigma: f64, gate: Gate) -> (f64, f64) {
    if !sigma.is_finite() {
        return (f64::INFINITY, f64::INFINITY);
    }
    let base = physical_gate_metrics(params, gate);
    let mut worst = (0.0f64, 0.0f64);
    for s in [-sigma, sigma] {
        let mut x = params.to_vec();
        x[index] += s;
        let m = physical_gate_metrics(&PhysicalParams::from_slice(&x), gate);
        worst.0 = worst.0.max((m.0 - base.0).abs());
        worst.1 = worst.1.max((m.1 - base.1).abs());
    }
    worst
}

/// Recomputes per-gate metrics from a stored estimate.
pub fn gate_metrics(estimate: &Estimate) -> Vec<GateMetrics> {
    match estimate {
        Estimate::Physical(p) => {
            let sig = p.sigmas();
            Gate::ALL
                .iter()
                .map(|&g| {
                    let (inf, dia) = physical_gate_metrics(&p.params, g);
                    // the idle metrics depend only on theta_i
                    let index = if g == Gate::Idle { 1 } else { 0 };
                    let (si, sd) = sig.map_or((f64::NAN, f64::NAN), |s| propagate(&p.params, index, s[index], g));
                    GateMetrics {
                        gate: g,
                        process_infidelity: inf,
                        infidelity_sigma: si,
                        diamond_error: dia,
                        diamond_sigma: sd,
                    }
                })
                .collect()
        }
        Estimate::Standard(s) => Gate::ALL
            .iter()
            .map(|&g| {
                let est = s.gate_set.ptm(g);
                let target = ptm_from_unitary(&g.target_unitary());
                let (si, sd) = match &s.covariance {
                    Some(cov) => standard_sigmas(&s.gate_set, g, &target, cov),
                    None => (f64::NAN, f64::NAN),
                };
                GateMetrics {
                    gate: g,
                    process_infidelity: process_infidelity(&est, &target),
                    infidelity_sigma: si,
                    diamond_error: diamond_error_bound(&est, &target),
                    diamond_sigma: sd,
                }
            })
            .collect(),
    }
}

/// Linear propagation `sqrt(∇mᵀ C ∇m)` for the two metrics of one gate.
fn standard_sigmas(set: &PtmGateSet, gate: Gate, target: &Ptm, cov: &DMatrix<f64>) -> (f64, f64) {
    let base = gate.index() * 16;
    let g = set.gates[gate.index()];
    // infidelity is linear in the PTM entries: ∂/∂G_rc = −T_rc / 4
    let grad_inf: Vec<f64> = (0..16).map(|k| -target.0[(k / 4, k % 4)] / 4.0).collect();
    let h = 1e-7;
    let grad_dia: Vec<f64> = (0..16)
        .map(|k| {
            let mut p = g;
            let mut m = g;
            p[(k / 4, k % 4)] += h;
            m[(k / 4, k % 4)] -= h;
            (diamond_error_bound(&Ptm(p), target) - diamond_error_bound(&Ptm(m), target)) / (2.0 * h)
        })
        .collect();
    let quad = |grad: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..16 {
            for j in 0..16 {
                s += grad[i] * cov[(base + i, base + j)] * grad[j];
            }
        }
        s.max(0.0).sqrt()
    };
    (quad(&grad_inf), quad(&grad_dia))
}

/// Table rows. Physical fits print the common √X/√Y row once, then the idle
/// row with its implied extinction; standard fits print one row per gate.
pub fn report_metrics(fit: &FitReport) -> Vec<MetricRow> {
    let metrics = gate_metrics(&fit.estimate);
    let row = |label: &str, m: &GateMetrics, er: Option<f64>| MetricRow {
        label: label.to_string(),
        process_infidelity: m.process_infidelity,
        infidelity_sigma: m.infidelity_sigma,
        diamond_error: m.diamond_error,
        diamond_sigma: m.diamond_sigma,
        implied_extinction_db: er,
    };
    match &fit.estimate {
        Estimate::Physical(p) => {
            let er = if p.params.theta_i > 0.0 {
                extinction_from_idle_angle(p.params.theta_i)
            } else {
                f64::INFINITY
            };
            vec![row("Gx/Gy", &metrics[0], None), row("Gi", &metrics[2], Some(er))]
        }
        Estimate::Standard(_) => metrics.iter().map(|m| row(m.gate.label(), m, None)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn physical_report(params: PhysicalParams) -> FitReport {
        let estimate = Estimate::Physical(PhysicalEstimate {
            params,
            intervals: None,
        });
        FitReport {
            metrics: gate_metrics(&estimate),
            estimate,
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
            metadata: vec![],
        }
    }

    #[test]
    fn table_rows_for_fitted_parameters() {
        let rows = report_metrics(&physical_report(PhysicalParams {
            dtheta: -0.0301,
            theta_i: 0.0804,
            phi_i: 3.16,
        }));
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].label, "Gx/Gy");
        assert!((rows[0].process_infidelity / 0.2265e-3 - 1.0).abs() < 0.01);
        assert!((rows[1].process_infidelity / 1.6155e-3 - 1.0).abs() < 0.01);
        assert!((rows[0].diamond_error / 1.505e-2 - 1.0).abs() < 0.01);
        assert!((rows[1].diamond_error / 4.019e-2 - 1.0).abs() < 0.01);
        let er = rows[1].implied_extinction_db.unwrap();
        assert!((er - 25.82).abs() < 0.01, "{er}");
    }

    #[test]
    fn closed_forms_hold() {
        for (d, t, p) in [(-0.0301, 0.0804, 3.16), (0.2, 0.5, 1.0), (0.0, 0.0, 0.0)] {
            let params = PhysicalParams {
                dtheta: d,
                theta_i: t,
                phi_i: p,
            };
            for g in [Gate::SqrtX, Gate::SqrtY] {
                let (inf, dia) = physical_gate_metrics(&params, g);
                assert!((inf - (d / 2.0).sin().powi(2)).abs() < 1e-14);
                assert!((dia - (d / 2.0).sin().abs()).abs() < 1e-14);
            }
            let (inf, dia) = physical_gate_metrics(&params, Gate::Idle);
            assert!((inf - (t / 2.0).sin().powi(2)).abs() < 1e-14);
            assert!((dia - (t / 2.0).sin().abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_params_give_zero_rows() {
        let rows = report_metrics(&physical_report(PhysicalParams::ideal()));
        for r in &rows {
            assert!(r.process_infidelity.abs() < 1e-15);
            assert!(r.diamond_error.abs() < 1e-15);
        }
        assert_eq!(rows[1].implied_extinction_db, Some(f64::INFINITY));
    }

    #[test]
    fn text_and_csv_outputs() {
        let fit = physical_report(PhysicalParams {
            dtheta: -0.0301,
            theta_i: 0.0804,
            phi_i: 3.16,
        });
        let mut text = Vec::new();
        fit.write_text(&mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.contains("kind = physical\n"));
        assert!(text.contains("Gi.implied_extinction_db = 25.8"));
        let mut csv = Vec::new();
        fit.write_metrics_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("Gx/Gy,2.26"));
    }
}
