//! Single-qubit channel mathematics.
//!
//! Unitaries are stored as 2×2 complex matrices, channels as 4×4 real Pauli
//! transfer matrices (PTMs) in the normalized basis {I, X, Y, Z}/√2. In that
//! basis the PTM of a unitary is orthogonal and the first row of any
//! trace-preserving map is (1, 0, 0, 0).

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Qubit dimension.
pub const DIM: usize = 2;

/// The Pauli matrices in the order I, X, Y, Z.
pub fn paulis() -> [Matrix2<C64>; 4] {
    [
        Matrix2::new(ONE, ZERO, ZERO, ONE),
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

/// A 2×2 unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2(Matrix2<C64>);

impl Unitary2 {
    pub fn identity() -> Self {
        Unitary2(Matrix2::identity())
    }

    /// Wraps `m` after checking `m†m = I` to `tol` (Frobenius).
    pub fn new(m: Matrix2<C64>, tol: f64) -> crate::Result<Self> {
        let u = Unitary2(m);
        let err = u.unitarity_error();
        if err > tol {
            return Err(crate::Error::invalid(format!(
                "matrix is not unitary (|U†U - I|_F = {err:.3e})"
            )));
        }
        Ok(u)
    }

    pub fn from_matrix_unchecked(m: Matrix2<C64>) -> Self {
        Unitary2(m)
    }

    /// Rotation by `theta` about the equatorial axis at azimuth `phi`.
    pub fn rotation(theta: f64, phi: f64) -> Self {
        unitary_from_angles(GateAngles::new(theta, phi))
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Unitary2(self.0.adjoint())
    }

    pub fn det(&self) -> C64 {
        self.0.determinant()
    }

    /// Frobenius norm of `U†U - I`.
    pub fn unitarity_error(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix2::identity()).norm()
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut n: u32) -> Self {
        let mut base = self.0;
        let mut acc = Matrix2::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            n >>= 1;
        }
        Unitary2(acc)
    }

    /// Probability of finding |0⟩ after applying `self` to |0⟩.
    pub fn survival_probability(&self) -> f64 {
        self.0[(0, 0)].norm_sqr()
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Self) -> Self {
        Unitary2(self.0 * rhs.0)
    }
}

impl Mul for &Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Self) -> Unitary2 {
        Unitary2(self.0 * rhs.0)
    }
}

/// Rotation angle and equatorial axis azimuth of a single-qubit gate, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateAngles {
    pub theta: f64,
    pub phi: f64,
}

impl GateAngles {
    pub fn new(theta: f64, phi: f64) -> Self {
        GateAngles { theta, phi }
    }

    /// Maps both angles into [0, 2π). A negative rotation becomes a positive
    /// one about the opposite axis first, so the represented channel is
    /// unchanged.
    pub fn canonical(self) -> Self {
        let (theta, phi) = if self.theta < 0.0 {
            (-self.theta, self.phi + PI)
        } else {
            (self.theta, self.phi)
        };
        GateAngles {
            theta: wrap_angle(theta),
            phi: wrap_angle(phi),
        }
    }
}

/// Wraps an angle into [0, 2π).
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `U(θ, φ) = cos(θ/2) I − i sin(θ/2) (cos φ X + sin φ Y)`.
pub fn unitary_from_angles(angles: GateAngles) -> Unitary2 {
    let (s, c) = (angles.theta / 2.0).sin_cos();
    let (sp, cp) = angles.phi.sin_cos();
    // −i s (cosφ X + sinφ Y) has off-diagonals −i s e^{−iφ} (top right) and −i s e^{iφ}
    let off_upper = C64::new(-s * sp, -s * cp);
    let off_lower = C64::new(s * sp, -s * cp);
    Unitary2(Matrix2::new(C64::new(c, 0.0), off_upper, off_lower, C64::new(c, 0.0)))
}

/// A 4×4 real Pauli transfer matrix in the normalized Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ptm(pub Matrix4<f64>);

impl Ptm {
    pub fn identity() -> Self {
        Ptm(Matrix4::identity())
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// Largest deviation of the first row from (1, 0, 0, 0).
    pub fn trace_preservation_error(&self) -> f64 {
        let row = self.0.row(0);
        (row[0] - 1.0)
            .abs()
            .max(row[1].abs())
            .max(row[2].abs())
            .max(row[3].abs())
    }

    /// Frobenius norm of `R Rᵀ − I`.
    pub fn orthogonality_error(&self) -> f64 {
        (self.0 * self.0.transpose() - Matrix4::identity()).norm()
    }

    /// Uniform depolarizing channel `ρ ↦ (1−p) ρ + p I/2`.
    pub fn depolarizing(p: f64) -> Self {
        Ptm(Matrix4::from_diagonal(&Vector4::new(1.0, 1.0 - p, 1.0 - p, 1.0 - p)))
    }

    /// Dephasing that scales the Bloch x and y components by `coherence`.
    pub fn phase_damping(coherence: f64) -> Self {
        Ptm(Matrix4::from_diagonal(&Vector4::new(1.0, coherence, coherence, 1.0)))
    }
}

impl Mul for Ptm {
    type Output = Ptm;

    fn mul(self, rhs: Self) -> Ptm {
        Ptm(self.0 * rhs.0)
    }
}

/// `R_jk = ½ tr(σ_j U σ_k U†)`.
pub fn ptm_from_unitary(u: &Unitary2) -> Ptm {
    let p = paulis();
    let m = u.matrix();
    let ud = m.adjoint();
    let conj: [Matrix2<C64>; 4] = std::array::from_fn(|k| m * p[k] * ud);
    Ptm(Matrix4::from_fn(|j, k| 0.5 * (p[j] * conj[k]).trace().re))
}

/// `1 − tr(Tᵀ E)/d²`, the entanglement infidelity against a unitary target.
pub fn process_infidelity(estimate: &Ptm, target: &Ptm) -> f64 {
    1.0 - (target.0.transpose() * estimate.0).trace() / (DIM * DIM) as f64
}

/// Eigenphases (α, β) of `U†V` after removing the global phase so that α + β = 0.
/// Returned with α ≥ 0.
pub fn relative_eigenphases(u: &Unitary2, v: &Unitary2) -> (f64, f64) {
    let w = u.matrix().adjoint() * v.matrix();
    let gamma = w.determinant().arg() / 2.0;
    let w = w * C64::from_polar(1.0, -gamma);
    // w = a I − i (b · σ) with a real, b real; eigenvalues e^{∓i|θ|}, |θ| = atan2(|b|, a)
    let a = 0.5 * (w[(0, 0)] + w[(1, 1)]).re;
    let bx = -0.5 * (w[(0, 1)] + w[(1, 0)]).im;
    let by = -0.5 * (w[(0, 1)] - w[(1, 0)]).re;
    let bz = -0.5 * (w[(0, 0)] - w[(1, 1)]).im;
    let b = (bx * bx + by * by + bz * bz).sqrt();
    let half = b.atan2(a);
    (half, -half)
}

/// Half diamond distance between the unitary channels of `u` and `v`:
/// `sin(|α − β| / 2)` for the phase-centred eigenphases of `U†V`.
pub fn diamond_error_unitary(u: &Unitary2, v: &Unitary2) -> f64 {
    let (alpha, beta) = relative_eigenphases(u, v);
    ((alpha - beta).abs() / 2.0).sin().abs()
}

/// Normalized (unit-trace) Choi matrix `J = (1/4) Σ_jk R_jk σ_kᵀ ⊗ σ_j`.
pub fn choi_matrix(ptm: &Ptm) -> Matrix4<C64> {
    let p = paulis();
    let mut out = Matrix4::<C64>::zeros();
    for j in 0..4 {
        for k in 0..4 {
            let r = ptm.0[(j, k)];
            if r == 0.0 {
                continue;
            }
            out += kron(&p[k].transpose(), &p[j]) * C64::new(0.25 * r, 0.0);
        }
    }
    out
}

pub(crate) fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn hermitian_trace_norm(m: &Matrix4<C64>) -> f64 {
    // symmetrize against rounding before the Hermitian eigensolver
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|e| e.abs()).sum()
}

/// Half the trace norm of the Choi-matrix difference. A lower bound on the
/// half diamond distance, and equal to it for pairs of qubit unitaries.
pub fn choi_trace_distance(a: &Ptm, b: &Ptm) -> f64 {
    0.5 * hermitian_trace_norm(&(choi_matrix(a) - choi_matrix(b)))
}

/// Upper bound on the half diamond distance: `d · ½‖J_a − J_b‖₁`.
pub fn diamond_error_bound(estimate: &Ptm, target: &Ptm) -> f64 {
    DIM as f64 * choi_trace_distance(estimate, target)
}
