//! Two-limit tests, uniform continuity, the supremum formula and the
//! asymptotic split `F = G + Q`.

pub mod bochner;
pub mod continuity;
pub mod decompose;

pub use bochner::{
    bochner_passes, bochner_test, derivative_aa_check, extract_subsequence, BochnerVerdict, LimitProbe, Subsequence,
    Tolerances, DEFAULT_DEPTH, DEFAULT_TOL_LIMIT, DEFAULT_TOL_SUBSEQ,
};
pub use continuity::{
    compactness_equivalence_check, supremum_formula_check, uniform_continuity_test, CompactnessReport, ScanOptions,
    SupremumReport, UniformContinuityReport, Witness, DEFAULT_DELTAS,
};
pub use decompose::{asymptotic_decompose, DecomposeOptions, DecomposeReport, Ray, RayDecay};
