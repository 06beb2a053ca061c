use std::sync::OnceLock;

use ionmod_core::dynamics::GateModel;
use ionmod_core::tomography::report::gate_metrics;
use ionmod_core::tomography::*;
use proptest::prelude::*;

const TRUTH: [f64; 3] = [-0.0301, 0.0804, 3.16];

fn truth_model() -> GateModel {
    GateModel::from_angles(TRUTH[0], TRUTH[1], TRUTH[2])
}

fn exact_likelihood() -> &'static PhysicalLikelihood {
    static LIKE: OnceLock<PhysicalLikelihood> = OnceLock::new();
    LIKE.get_or_init(|| {
        let opts = SimulationOptions {
            infinite_shots: true,
            ..Default::default()
        };
        let data = simulate_dataset(&make_design(16), &truth_model(), &opts, 0).unwrap();
        PhysicalLikelihood::new(&data).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn truth_maximizes_exact_likelihood(
        d0 in -0.05..0.05f64,
        d1 in -0.05..0.05f64,
        d2 in -0.5..0.5f64,
    ) {
        let like = exact_likelihood();
        let at_truth = like.log_likelihood(&PhysicalParams::from_slice(&TRUTH));
        let moved = PhysicalParams::from_slice(&[TRUTH[0] + d0, TRUTH[1] + d1, TRUTH[2] + d2]);
        prop_assert!(like.log_likelihood(&moved) <= at_truth + 1e-9 * at_truth.abs());
    }
}

#[test]
fn profile_intervals_shrink_with_shots() {
    let design = make_design(8);
    let widths = |shots: u64| -> [f64; 3] {
        let mut total = [0.0; 3];
        for seed in 0..20 {
            let opts = SimulationOptions {
                shots,
                ..Default::default()
            };
            let data = simulate_dataset(&design, &truth_model(), &opts, 1000 + seed).unwrap();
            let fit = fit_physical_gst(&data, &PhysicalFitOptions::default()).unwrap();
            let iv = fit.physical().unwrap().intervals.unwrap();
            for k in 0..3 {
                total[k] += iv[k].width() / 20.0;
            }
        }
        total
    };
    let coarse = widths(1000);
    let fine = widths(4000);
    for k in 0..3 {
        let ratio = coarse[k] / fine[k];
        assert!((ratio - 2.0).abs() <= 0.4, "parameter {k}: width ratio {ratio}");
    }
}

#[test]
fn physical_report_metrics_are_recomputable() {
    let data = simulate_dataset(&make_design(8), &truth_model(), &SimulationOptions::default(), 3).unwrap();
    let fit = fit_physical_gst(&data, &PhysicalFitOptions::default()).unwrap();
    assert_eq!(gate_metrics(&fit.estimate), fit.metrics);
    let rows = report_metrics(&fit);
    assert_eq!(rows[0].process_infidelity, fit.metrics[0].process_infidelity);
    assert_eq!(rows[1].diamond_error, fit.metrics[2].diamond_error);

    // the printed parameters carry enough digits to rebuild the metrics
    let mut text = Vec::new();
    fit.write_text(&mut text).unwrap();
    let text = String::from_utf8(text).unwrap();
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(&format!("{key} = "))).unwrap();
        line.split(" = ")
            .nth(1)
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    let params = PhysicalParams {
        dtheta: value("dtheta"),
        theta_i: value("theta_i"),
        phi_i: value("phi_i"),
    };
    let rebuilt = gate_metrics(&Estimate::Physical(PhysicalEstimate {
        params,
        intervals: fit.physical().unwrap().intervals,
    }));
    for (a, b) in rebuilt.iter().zip(&fit.metrics) {
        assert!((a.process_infidelity - b.process_infidelity).abs() <= 1e-9 * b.process_infidelity);
        assert!((a.diamond_error - b.diamond_error).abs() <= 1e-9 * b.diamond_error);
    }
}

#[test]
fn standard_report_metrics_are_recomputable() {
    let data = simulate_dataset(&make_design(8), &truth_model(), &SimulationOptions::default(), 4).unwrap();
    let fit = fit_standard_gst(&data, &StandardFitOptions::default()).unwrap();
    assert_eq!(gate_metrics(&fit.estimate), fit.metrics);
    let rows = report_metrics(&fit);
    assert_eq!(rows.len(), 3);
    for (r, m) in rows.iter().zip(&fit.metrics) {
        assert_eq!(r.process_infidelity, m.process_infidelity);
        assert_eq!(r.infidelity_sigma, m.infidelity_sigma);
    }
}
