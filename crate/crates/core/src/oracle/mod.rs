//! Independent reference computations used to verify the stepper.
//!
//! None of these go through the grid, the transport solvers or the sparse
//! Newton machinery; they share only the constitutive functions.

mod euler;
mod fd;
mod manufactured;
mod rk4;

pub use euler::backward_euler_0d;
pub use fd::{fd_check, fd_stress_check, sample_deformations, BranchError, FdReport, Sample};
pub use manufactured::{manufactured_residual, ManufacturedError};
pub use rk4::{reference_0d, rk4_self_consistency};
