//! Certified Picard iteration for the causal integral equations and the
//! bi-kernel operator.

pub mod bikernel;
pub mod certificate;
pub mod lattice;
pub mod vie;

pub use bikernel::{solve_bikernel, BikernelProblem, BikernelWindowSolver};
pub use certificate::{estimate_observed_ratio, ContractionCertificate, IterationTrace};
pub use lattice::{LatticeLayout, LatticeOperator};
pub use vie::{
    solve_vie_asymptotic, solve_vie_infinite_delay, AsymptoticCheck, AsymptoticSolve, SolutionField, VieProblem,
    VieWindowSolver, WindowSolver, MAX_SWEEPS,
};
