use std::f64::consts::{FRAC_PI_2, TAU};

use ionmod_core::dynamics::{
    effective_angle, extinction_from_idle_angle, idle_angle_from_extinction, lag1_autocorrelation,
    pulse_energy_histogram, realize_gate, realized_angles, sample_std, Gate, GateModel, NoiseModel, PulseShape,
    SequenceContext,
};
use ionmod_core::qchan::ptm_from_unitary;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Midpoint sum of `√P(t)` for a trapezoid given by its 0–100% ramp times.
fn riemann_area(ramp_up: f64, plateau: f64, ramp_down: f64, steps: usize) -> f64 {
    let ramp = |len: f64| {
        if len == 0.0 {
            return 0.0;
        }
        let h = len / steps as f64;
        (0..steps).map(|i| (((i as f64 + 0.5) * h) / len).sqrt()).sum::<f64>() * h
    };
    ramp(ramp_up) + plateau + ramp(ramp_down)
}

#[test]
fn quadrature_matches_riemann_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        use rand::Rng;
        let pulse = PulseShape {
            rise_time: rng.random_range(0.0..2.0),
            fall_time: rng.random_range(0.0..2.0),
            plateau: rng.random_range(0.0..30.0),
        };
        let omega = rng.random_range(0.01..1.0);
        let oracle = omega * riemann_area(pulse.rise_time / 0.8, pulse.plateau, pulse.fall_time / 0.8, 1_000_000);
        let got = effective_angle(&pulse, omega);
        assert!((got - oracle).abs() < 1e-8, "{pulse:?}: {got} vs {oracle}");
    }
}

#[test]
fn energy_jitter_halves_in_angle() {
    let noise = NoiseModel {
        energy_jitter_rel: 0.006,
        ..NoiseModel::noiseless(0.0)
    };
    let spec = GateModel::ideal().spec(Gate::SqrtX);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let thetas: Vec<f64> = (0..100_000)
        .map(|_| realized_angles(&spec, &noise, &SequenceContext::default(), &mut rng).0)
        .collect();
    let mean = thetas.iter().sum::<f64>() / thetas.len() as f64;
    let rel = sample_std(&thetas) / mean;
    assert!((rel - 0.003).abs() < 0.0002, "{rel}");
}

#[test]
fn histogram_std_tracks_jitter() {
    let noise = NoiseModel {
        energy_jitter_rel: 0.006,
        ..NoiseModel::noiseless(0.0)
    };
    let pulse = PulseShape::mzm(24.2);
    let inside = (0..200u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sample_std(&pulse_energy_histogram(1000, &pulse, &noise, 1000.0, &mut rng).unwrap());
            (0.005..=0.007).contains(&s)
        })
        .count();
    assert!(inside >= 198, "{inside}/200");
}

#[test]
fn drift_raises_lag_one_autocorrelation() {
    let pulse = PulseShape::mzm(24.2);
    let quiet = NoiseModel {
        drift: None,
        ..NoiseModel::mzm()
    };
    for seed in 0..10 {
        let mut a = ChaCha8Rng::seed_from_u64(seed);
        let mut b = ChaCha8Rng::seed_from_u64(seed);
        let drifting = pulse_energy_histogram(1000, &pulse, &NoiseModel::mzm(), 1000.0, &mut a).unwrap();
        let flat = pulse_energy_histogram(1000, &pulse, &quiet, 1000.0, &mut b).unwrap();
        assert!(
            lag1_autocorrelation(&drifting) > lag1_autocorrelation(&flat),
            "seed {seed}"
        );
    }
}

#[test]
fn stochastic_outputs_are_bit_reproducible() {
    let pulse = PulseShape::mzm(24.2);
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = pulse_energy_histogram(500, &pulse, &NoiseModel::mzm(), 1000.0, &mut rng).unwrap();
        let spec = GateModel::from_angles(-0.03, 0.08, 3.16).spec(Gate::Idle);
        let g: Vec<_> = (0..50)
            .map(|_| realize_gate(&spec, &NoiseModel::mzm(), &SequenceContext::default(), &mut rng))
            .collect();
        (h, g)
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5).0, run(6).0);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn noiseless_gates_hit_targets(phase in 0.0..TAU, gate in prop::sample::select(Gate::ALL.to_vec())) {
        let spec = GateModel::ideal().spec(gate);
        let ctx = SequenceContext { leakage_phase: phase, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = realize_gate(&spec, &NoiseModel::noiseless(phase), &ctx, &mut rng);
        let diff = ptm_from_unitary(&u).0 - ptm_from_unitary(&gate.target_unitary()).0;
        prop_assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn idle_angle_extinction_round_trip(er in 0.0..150.0f64) {
        let theta = idle_angle_from_extinction(er);
        prop_assert!((theta - FRAC_PI_2 * 10f64.powf(-er / 20.0)).abs() <= 1e-15 * FRAC_PI_2);
        prop_assert!((extinction_from_idle_angle(theta) - er).abs() < 1e-10);
    }
}
