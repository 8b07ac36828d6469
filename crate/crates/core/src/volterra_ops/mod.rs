//! Convolution kernels, the integrability conditions on them, and the
//! operators `h * F` and `Gamma`.

pub mod domain;
pub mod kernel;
pub mod ops;

pub use domain::{DomainDescriptor, DomainKind};
pub use kernel::{catalogue_kernel, Decay, KernelSpec, UNDECLARED_RADIUS};
pub use ops::{
    gamma_apply, gamma_preserves_aa_check, grid_csv_string, sample_grid, verify_e1, verify_e2_e3, whole_space_mass,
    whole_space_convolve, write_grid_csv, ConvolutionField, ConvolveValue, E1Report, E23Ray, E23Report,
    GammaAaReport, GammaField, GammaOperator, KernelTable, SampledGrid, DOUBLING_TOL,
};
