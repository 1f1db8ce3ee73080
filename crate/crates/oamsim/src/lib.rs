//! Discrete-mode simulator for linear optics on orbital-angular-momentum
//! (OAM), path and polarization modes.
//!
//! The crate models optical setups as dense complex operators over a
//! truncated (path, ℓ, polarization) basis with exact loss accounting,
//! verifies whether a setup performs a lossless n-fold cyclic mode
//! transformation, rediscovers such setups by seeded random search over a
//! component toolbox, models experimental imperfections (aperture clipping,
//! splitting-ratio error, interferometer phase error, mode-dependent
//! coupling), renders mode intensity/phase images, and reads/writes a
//! line-oriented setup description format.

pub mod elements;
pub mod error;
pub mod imperfect;
pub mod render;
pub mod search;
pub mod setup;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
