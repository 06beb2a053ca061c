//! Sequence probabilities for the two gate-set parametrizations and the
//! binomial likelihood shared by both fits.
//!
//! Every sequence starts in |S⟩ = |0⟩; the modelled outcome is |D⟩ = |1⟩.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64 as C64;

use super::sequence::{Circuit, Segment};
use crate::dynamics::Gate;
use crate::qchan::{ptm_from_unitary, wrap_angle, GateAngles, Ptm, Unitary2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Gate(usize),
    Power(usize),
}

/// Sequences compiled for repeated evaluation. Operations (single gates or
/// distinct germ powers) form a prefix tree, so a state shared by many
/// sequences, such as a prepared fiducial, is propagated once. Nodes are
/// stored parents-first.
#[derive(Debug, Clone)]
pub struct CompiledCircuits {
    powers: Vec<Segment>,
    /// `(parent, op)`; node 0 is the root and has no op.
    nodes: Vec<(usize, Op)>,
    leaves: Vec<usize>,
}

impl CompiledCircuits {
    pub fn new(circuits: &[Circuit]) -> Self {
        let mut power_index: HashMap<Segment, usize> = HashMap::new();
        let mut powers = Vec::new();
        let mut children: HashMap<(usize, Op), usize> = HashMap::new();
        let mut nodes = vec![(0, Op::Gate(0))];
        let leaves = circuits
            .iter()
            .map(|c| {
                let mut node = 0;
                for s in &c.segments {
                    let ops: Vec<Op> = if s.power == 1 {
                        s.gates.iter().map(|g| Op::Gate(g.index())).collect()
                    } else {
                        let k = *power_index.entry(s.clone()).or_insert_with(|| {
                            powers.push(s.clone());
                            powers.len() - 1
                        });
                        vec![Op::Power(k)]
                    };
                    for op in ops {
                        node = *children.entry((node, op)).or_insert_with(|| {
                            nodes.push((node, op));
                            nodes.len() - 1
                        });
                    }
                }
                node
            })
            .collect();
        CompiledCircuits { powers, nodes, leaves }
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    fn propagate<S: Copy>(&self, init: S, apply: impl Fn(Op, &S) -> S) -> Vec<S> {
        let mut states = Vec::with_capacity(self.nodes.len());
        states.push(init);
        for &(parent, op) in &self.nodes[1..] {
            let next = apply(op, &states[parent]);
            states.push(next);
        }
        states
    }

    /// P(D) for every circuit under unitary gates indexed by [`Gate::index`].
    pub fn probabilities_unitary(&self, gates: &[Unitary2; 3]) -> Vec<f64> {
        let m: [Matrix2<C64>; 3] = std::array::from_fn(|k| *gates[k].matrix());
        let seg: Vec<Matrix2<C64>> = self
            .powers
            .iter()
            .map(|s| {
                let mut u = Unitary2::identity();
                for g in &s.gates {
                    u = gates[g.index()] * u;
                }
                *u.pow(s.power).matrix()
            })
            .collect();
        let states = self.propagate(Vector2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)), |op, v| match op {
            Op::Gate(k) => m[k] * v,
            Op::Power(k) => seg[k] * v,
        });
        self.leaves.iter().map(|&l| states[l][1].norm_sqr()).collect()
    }

    /// `Eᵀ · G_n ⋯ G_1 · ρ` for every circuit.
    pub fn probabilities_ptm(&self, set: &PtmGateSet) -> Vec<f64> {
        let seg: Vec<Matrix4<f64>> = self
            .powers
            .iter()
            .map(|s| {
                let mut m = Matrix4::identity();
                for g in &s.gates {
                    m = set.gates[g.index()] * m;
                }
                matrix_pow(&m, s.power)
            })
            .collect();
        let states = self.propagate(set.rho, |op, v| match op {
            Op::Gate(k) => set.gates[k] * v,
            Op::Power(k) => seg[k] * v,
        });
        self.leaves.iter().map(|&l| set.effect.dot(&states[l])).collect()
    }
}

fn matrix_pow(m: &Matrix4<f64>, mut n: u32) -> Matrix4<f64> {
    let mut base = *m;
    let mut acc = Matrix4::identity();
    while n > 0 {
        if n & 1 == 1 {
            acc = base * acc;
        }
        base = base * base;
        n >>= 1;
    }
    acc
}

/// The three fitted quantities of the physical gate model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Common √X/√Y rotation-angle deviation from π/2 (rad).
    pub dtheta: f64,
    /// Idle-gate rotation angle (rad).
    pub theta_i: f64,
    /// Idle-gate rotation axis (rad).
    pub phi_i: f64,
}

impl PhysicalParams {
    pub fn ideal() -> Self {
        PhysicalParams {
            dtheta: 0.0,
            theta_i: 0.0,
            phi_i: 0.0,
        }
    }

    pub fn to_vec(self) -> [f64; 3] {
        [self.dtheta, self.theta_i, self.phi_i]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        PhysicalParams {
            dtheta: x[0],
            theta_i: x[1],
            phi_i: x[2],
        }
    }

    /// θ_I ≥ 0 and φ_I in [0, 2π).
    pub fn canonical(self) -> Self {
        let idle = GateAngles::new(self.theta_i, self.phi_i).canonical();
        PhysicalParams {
            dtheta: self.dtheta,
            theta_i: idle.theta,
            phi_i: wrap_angle(idle.phi),
        }
    }

    pub fn angles(&self, gate: Gate) -> GateAngles {
        match gate {
            Gate::SqrtX => GateAngles::new(FRAC_PI_2 + self.dtheta, 0.0),
            Gate::SqrtY => GateAngles::new(FRAC_PI_2 + self.dtheta, FRAC_PI_2),
            Gate::Idle => GateAngles::new(self.theta_i, self.phi_i),
        }
    }

    pub fn unitaries(&self) -> [Unitary2; 3] {
        Gate::ALL.map(|g| crate::qchan::unitary_from_angles(self.angles(g)))
    }
}

/// Unconstrained PTM gate set with its SPAM vectors, all in the normalized
/// Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtmGateSet {
    pub gates: [Matrix4<f64>; 3],
    pub rho: Vector4<f64>,
    /// Effect of the |D⟩ outcome.
    pub effect: Vector4<f64>,
}

/// Length of [`PtmGateSet::to_params`].
pub const PTM_PARAMS: usize = 3 * 16 + 4 + 4;

impl PtmGateSet {
    pub fn ideal_spam() -> (Vector4<f64>, Vector4<f64>) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        (Vector4::new(h, 0.0, 0.0, h), Vector4::new(h, 0.0, 0.0, -h))
    }

    pub fn from_unitaries(gates: &[Unitary2; 3]) -> Self {
        let (rho, effect) = Self::ideal_spam();
        PtmGateSet {
            gates: std::array::from_fn(|k| ptm_from_unitary(&gates[k]).0),
            rho,
            effect,
        }
    }

    pub fn target() -> Self {
        Self::from_unitaries(&Gate::ALL.map(Gate::target_unitary))
    }

    pub fn ptm(&self, gate: Gate) -> Ptm {
        Ptm(self.gates[gate.index()])
    }

    /// Gates row-major, then ρ, then the effect.
    pub fn to_params(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(PTM_PARAMS);
        for g in &self.gates {
            for r in 0..4 {
                for c in 0..4 {
                    x.push(g[(r, c)]);
                }
            }
        }
        x.extend(self.rho.iter());
        x.extend(self.effect.iter());
        x
    }

    pub fn from_params(x: &[f64]) -> Self {
        assert_eq!(x.len(), PTM_PARAMS);
        PtmGateSet {
            gates: std::array::from_fn(|k| Matrix4::from_row_slice(&x[16 * k..16 * (k + 1)])),
            rho: Vector4::from_column_slice(&x[48..52]),
            effect: Vector4::from_column_slice(&x[52..56]),
        }
    }

    /// `G ↦ M G M⁻¹`, `ρ ↦ M ρ`, `Eᵀ ↦ Eᵀ M⁻¹`. Returns `None` for singular `M`.
    pub fn gauge_transform(&self, m: &Matrix4<f64>) -> Option<Self> {
        let inv = m.try_inverse()?;
        Some(PtmGateSet {
            gates: self.gates.map(|g| m * g * inv),
            rho: m * self.rho,
            effect: inv.transpose() * self.effect,
        })
    }
}

/// Probabilities are clipped to this distance from 0 and 1 inside logarithms.
pub const PROBABILITY_CLIP: f64 = 1e-12;

/// `Σ n_D ln p + n_S ln(1 − p)` over the data, with `p` clipped.
pub fn binomial_log_likelihood(probs: &[f64], shots: &[f64], dark: &[f64]) -> f64 {
    probs
        .iter()
        .zip(shots)
        .zip(dark)
        .map(|((&p, &n), &n_s)| {
            let p = p.clamp(PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP);
            let n_d = n - n_s;
            let mut ll = 0.0;
            if n_d > 0.0 {
                ll += n_d * p.ln();
            }
            if n_s > 0.0 {
                ll += n_s * (1.0 - p).ln();
            }
            ll
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qchan::unitary_from_angles;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use Gate::*;

    /// Bloch-vector propagation, independent of the matrix code paths.
    fn bloch_probability(params: &PhysicalParams, gates: &[Gate]) -> f64 {
        let mut r = [0.0, 0.0, 1.0];
        for &g in gates {
            let a = params.angles(g);
            let n = [a.phi.cos(), a.phi.sin(), 0.0];
            let (s, c) = a.theta.sin_cos();
            let cross = [
                n[1] * r[2] - n[2] * r[1],
                n[2] * r[0] - n[0] * r[2],
                n[0] * r[1] - n[1] * r[0],
            ];
            let dot = n[0] * r[0] + n[1] * r[1] + n[2] * r[2];
            r = std::array::from_fn(|k| r[k] * c + cross[k] * s + n[k] * dot * (1.0 - c));
        }
        0.5 * (1.0 - r[2])
    }

    fn sample_circuits() -> Vec<Circuit> {
        vec![
            Circuit::empty(),
            Circuit::from_gates(&[SqrtX]),
            Circuit::from_gates(&[SqrtX, SqrtX]),
            Circuit::sandwich(&[SqrtY], &[Idle], 16, &[SqrtX, SqrtX, SqrtX]),
            Circuit::sandwich(&[SqrtX], &[SqrtX, SqrtY, Idle], 5, &[SqrtY, SqrtY, SqrtY]),
            Circuit::sandwich(&[], &[SqrtX, SqrtY], 8, &[]),
        ]
    }

    #[test]
    fn unitary_and_ptm_paths_match_bloch_oracle() {
        let params = PhysicalParams {
            dtheta: -0.0301,
            theta_i: 0.0804,
            phi_i: 3.16,
        };
        let circuits = sample_circuits();
        let compiled = CompiledCircuits::new(&circuits);
        let pu = compiled.probabilities_unitary(&params.unitaries());
        let pp = compiled.probabilities_ptm(&PtmGateSet::from_unitaries(&params.unitaries()));
        for (k, c) in circuits.iter().enumerate() {
            let oracle = bloch_probability(&params, &c.expand());
            assert_abs_diff_eq!(pu[k], oracle, epsilon = 1e-12);
            assert_abs_diff_eq!(pp[k], oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn ideal_outcomes() {
        let compiled = CompiledCircuits::new(&sample_circuits()[..3]);
        let p = compiled.probabilities_unitary(&PhysicalParams::ideal().unitaries());
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn param_vector_round_trip() {
        let set = PtmGateSet::from_unitaries(&[
            unitary_from_angles(GateAngles::new(1.5, 0.1)),
            unitary_from_angles(GateAngles::new(1.6, 1.7)),
            unitary_from_angles(GateAngles::new(0.08, 3.16)),
        ]);
        assert_eq!(PtmGateSet::from_params(&set.to_params()), set);
    }

    #[test]
    fn canonical_params() {
        let p = PhysicalParams {
            dtheta: 0.01,
            theta_i: -0.08,
            phi_i: 0.1,
        }
        .canonical();
        assert_abs_diff_eq!(p.theta_i, 0.08);
        assert_abs_diff_eq!(p.phi_i, 0.1 + std::f64::consts::PI, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn gauge_transform_preserves_probabilities(
            entries in proptest::collection::vec(-0.1f64..0.1, 16),
            dtheta in -0.1f64..0.1,
            theta_i in 0.0f64..0.2,
            phi_i in 0.0f64..std::f64::consts::TAU,
        ) {
            let params = PhysicalParams { dtheta, theta_i, phi_i };
            let set = PtmGateSet::from_unitaries(&params.unitaries());
            let m = Matrix4::identity() + Matrix4::from_row_slice(&entries);
            let moved = set.gauge_transform(&m).unwrap();
            let compiled = CompiledCircuits::new(&sample_circuits());
            let a = compiled.probabilities_ptm(&set);
            let b = compiled.probabilities_ptm(&moved);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-10, "{x} vs {y}");
            }
        }
    }
}
