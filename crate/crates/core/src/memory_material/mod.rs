//! Finite-dimensional integrodifferential systems with memory: resolvent
//! tables, exponential stability and mild solutions with nonlocal data.

pub mod mild;
pub mod resolvent;
pub mod system;

pub use mild::{solve_mild_nonlocal, MildSolve};
pub use resolvent::{build_resolvent, verify_property_r, PropertyR, ResolventTable, ENVELOPE_SLACK, HALVING_TOL};
pub use system::{laplacian1d, parse_matrix, MemorySystem, Nonlocal};
