//! Heat-kernel convolution of almost automorphic data and a synthetic check
//! of the Poisson regularity statement.

pub mod heat;
pub mod poisson;

pub use heat::{
    heat_kernel, heat_preserves_aa_check, heat_radius, heat_solve, HeatAaReport, HeatConfig, HeatField,
};
pub use poisson::{fd_calibration, poisson_synthetic_check, PoissonReport, DEFAULT_H_FD};
