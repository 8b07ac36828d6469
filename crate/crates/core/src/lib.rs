//! Multi-almost automorphic functions: construction, limit tests, and
//! certified fixed-point solvers for Volterra, heat, Poisson and memory
//! equations.

pub mod cli_runner;
pub mod error;
pub mod fixed_point_solvers;
pub mod function_core;
pub mod memory_material;
pub mod numerics;
pub mod pde_experiments;
pub mod sequence_limits;
pub mod volterra_ops;

pub use error::{Error, Result};
