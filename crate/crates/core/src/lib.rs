//! Staggered time discretization of compressible Eulerian visco-elastodynamics.
//!
//! The crate is `no_std` (with `alloc`) and holds the whole numerical core:
//!
//! * [`tensor`]: 3×3 and 3×3×3 tensor algebra,
//! * [`material`]: stored energies, the C¹ stored-energy truncation, and the
//!   conjugate flow rules for viscoplasticity, damage and diffusion,
//! * [`grid`]: structured-grid fields and adjoint-consistent difference operators,
//! * [`stepper`]: the staggered step (mass/momentum, then ξ, then Fe, then α),
//! * [`diagnostics`]: energy-dissipation ledger, monitors, discrete Gronwall bound,
//! * [`oracle`]: independent reference computations used for verification.
//!
//! File formats, configuration and the command-line front end live in the
//! companion `evd` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod material;
pub mod math;
pub mod oracle;
pub mod sparse;
pub mod stepper;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Mat3, Ten3, Vec3};
