use std::f64::consts::{PI, TAU};

use ionmod_core::qchan::{diamond_error_bound, diamond_error_unitary, process_infidelity, ptm_from_unitary, Unitary2};
use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    -TAU..TAU
}

/// A generic SU(2) element times a global phase.
fn unitary() -> impl Strategy<Value = Unitary2> {
    (0.0..PI, 0.0..TAU, 0.0..PI, 0.0..TAU, 0.0..TAU).prop_map(|(t1, p1, t2, p2, g)| {
        let u = Unitary2::rotation(t1, p1) * Unitary2::rotation(t2, p2);
        Unitary2::from_matrix_unchecked(u.matrix() * C64::from_polar(1.0, g))
    })
}

fn identity_distance(u: &Unitary2) -> f64 {
    (u.matrix() - Matrix2::identity()).norm()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rotation_is_unitary(theta in angle(), phi in angle()) {
        let u = Unitary2::rotation(theta, phi);
        prop_assert!(u.unitarity_error() < 1e-12);
        prop_assert!((u.det().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn opposite_rotation_is_inverse(theta in angle(), phi in angle()) {
        let u = Unitary2::rotation(theta, phi) * Unitary2::rotation(-theta, phi);
        prop_assert!(identity_distance(&u) < 1e-12);
    }

    #[test]
    fn ptm_of_unitary_is_orthogonal_and_trace_preserving(u in unitary()) {
        let r = ptm_from_unitary(&u);
        prop_assert!(r.orthogonality_error() < 1e-10);
        prop_assert!(r.trace_preservation_error() < 1e-12);
        let col = r.0.column(0);
        prop_assert!(col[1].abs() < 1e-12 && col[2].abs() < 1e-12 && col[3].abs() < 1e-12);
    }

    #[test]
    fn ptm_is_a_homomorphism(u in unitary(), v in unitary()) {
        let lhs = ptm_from_unitary(&(u * v));
        let rhs = ptm_from_unitary(&u) * ptm_from_unitary(&v);
        prop_assert!((lhs.0 - rhs.0).norm() < 1e-10);
    }

    #[test]
    fn coaxial_infidelity_is_sin_squared(t1 in angle(), t2 in angle(), phi in angle()) {
        let a = ptm_from_unitary(&Unitary2::rotation(t1, phi));
        let b = ptm_from_unitary(&Unitary2::rotation(t2, phi));
        let expected = ((t1 - t2) / 2.0).sin().powi(2);
        prop_assert!((process_infidelity(&a, &b) - expected).abs() < 1e-12);
    }

    #[test]
    fn diamond_error_from_identity(theta in 0.0..=PI, phi in angle()) {
        let d = diamond_error_unitary(&Unitary2::rotation(theta, phi), &Unitary2::identity());
        prop_assert!((d - (theta / 2.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn choi_bound_dominates_unitary_value(u in unitary(), v in unitary()) {
        let exact = diamond_error_unitary(&u, &v);
        let bound = diamond_error_bound(&ptm_from_unitary(&u), &ptm_from_unitary(&v));
        prop_assert!(bound >= exact - 1e-12, "bound {bound} < exact {exact}");
    }

    #[test]
    fn metrics_ignore_global_phase(u in unitary(), g in 0.0..TAU) {
        let w = Unitary2::from_matrix_unchecked(u.matrix() * C64::from_polar(1.0, g));
        prop_assert!(diamond_error_unitary(&u, &w) < 1e-7);
        prop_assert!(process_infidelity(&ptm_from_unitary(&u), &ptm_from_unitary(&w)).abs() < 1e-12);
    }
}
