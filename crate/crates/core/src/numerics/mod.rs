pub mod quadrature;
pub mod rng;
