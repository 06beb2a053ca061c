//! Models for a piezo-optomechanical dual-MZI optical modulator driving
//! single-qubit gates on a trapped-ion optical qubit, plus the gate set
//! tomography machinery used to estimate the resulting gate errors.
//!
//! The crate is organised bottom-up:
//!
//! * [`qchan`]: single-qubit unitaries, Pauli transfer matrices and error metrics.
//! * [`photonics`]: transfer-matrix model of couplers, MZIs, the two-stage MZM and ring resonators.
//! * [`dynamics`]: optical power and pulse shapes turned into noisy qubit rotations.
//! * [`tomography`]: GST design, dataset simulation, standard and physical GST fits.
//! * [`optim`]: small derivative-free and least-squares optimizers shared by the above.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod optim;
pub mod photonics;
pub mod qchan;
pub mod tomography;

pub use dynamics::{Gate, GateModel, NoiseModel, PulseShape};
pub use error::{Error, Result};
pub use photonics::{CouplerSpec, DeviceSpec, TransferMatrix2};
pub use qchan::{GateAngles, Ptm, Unitary2};
pub use tomography::{FitReport, GstDataset, GstDesign, PhysicalParams};
