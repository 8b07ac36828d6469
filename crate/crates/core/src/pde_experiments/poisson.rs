use crate::error::{Error, Result};
use crate::function_core::{Field, FunctionExpr};
use crate::sequence_limits::{
    bochner_test, compactness_equivalence_check, BochnerVerdict, CompactnessReport, LimitProbe, ScanOptions,
    DEFAULT_DELTAS,
};
use serde::Serialize;

pub const DEFAULT_H_FD: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct PoissonReport {
    pub function_id: String,
    pub h_fd: f64,
    /// `sup |Lap_h u - Lap_{2h} u|` over the probe window.
    pub richardson_gap: f64,
    /// Limit test on `f = Lap u`.
    pub forcing: BochnerVerdict,
    /// Compactness check on `u`.
    pub solution: CompactnessReport,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Builds `f = Lap u` by central differences, then checks `f` and `u`.
pub fn poisson_synthetic_check(u: &FunctionExpr, probe: &LimitProbe, h_fd: f64) -> Result<PoissonReport> {
    if u.arity_state != 0 || u.out_dim() != 1 {
        return Err(Error::PreconditionFailed(format!("{} must be scalar without state", u.label)));
    }
    if u.sup_bound.is_none() {
        return Err(Error::MissingBound(format!("{} must declare sup_bound", u.label)));
    }
    let f = u.laplacian(h_fd)?;
    let f2 = u.laplacian(2.0 * h_fd)?;
    let pts = probe.window.points();
    let a = f.eval_points(&pts, &[vec![]])?;
    let b = f2.eval_points(&pts, &[vec![]])?;
    let richardson_gap = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let forcing = bochner_test(&f, probe)?;
    let solution = compactness_equivalence_check(u, probe, &DEFAULT_DELTAS, &ScanOptions::default())?;
    let passed = forcing.passed && solution.compact && solution.agreement;
    let notes = vec![
        "synthetic direction: u is given, f is derived from it; existence of bounded solutions is not exercised".into(),
        format!("central differences with step {h_fd:e}, Richardson gap at 2h {richardson_gap:.2e}"),
    ];
    Ok(PoissonReport {
        function_id: u.label.clone(),
        h_fd,
        richardson_gap,
        forcing,
        solution,
        passed,
        notes,
    })
}

/// `Lap_h (t0^2)` at `x`; equals 2 up to rounding.
pub fn fd_calibration(x: f64, h_fd: f64) -> Result<f64> {
    FunctionExpr::parse("square", 1, 0, "(mul t0 t0)")?.laplacian(h_fd)?.eval_scalar(&[x], &[])
}
