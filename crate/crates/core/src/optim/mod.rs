//! Optimizers shared by the extinction search and the tomography fits.

pub mod least_squares;
pub mod nelder_mead;
pub mod profile;

pub use least_squares::{levenberg_marquardt, numeric_jacobian, psd_pseudo_inverse, LmOptions, LmResult};
pub use nelder_mead::{nelder_mead, Minimum, NelderMeadOptions};
pub use profile::{profile_interval, Endpoint, ProfileInterval, ProfileOptions};
