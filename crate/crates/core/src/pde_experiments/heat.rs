use crate::error::{Error, Result};
use crate::function_core::{Field, FunctionExpr, GridWindow};
use crate::numerics::quadrature::{composite, Neumaier, QuadratureScheme};
use crate::sequence_limits::{bochner_test, BochnerVerdict, LimitProbe};
use crate::volterra_ops::SampledGrid;
use rayon::prelude::*;
use serde::Serialize;

/// Largest admissible deviation of the discrete kernel mass from 1.
pub const MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct HeatConfig {
    pub dim: usize,
    pub time: f64,
    pub initial: FunctionExpr,
    pub quadrature: QuadratureScheme,
}

impl HeatConfig {
    pub fn new(dim: usize, time: f64, initial: FunctionExpr, quadrature: QuadratureScheme) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::PreconditionFailed(format!("heat runs in dimension 1 or 2, got {dim}")));
        }
        if !(time > 0.0) {
            return Err(Error::NonpositiveTime(time));
        }
        if initial.arity_time != dim || initial.arity_state != 0 || initial.out_dim() != 1 {
            return Err(Error::dim(dim, initial.arity_time, "initial data must be scalar on R^n without state"));
        }
        if initial.sup_bound.is_none() {
            return Err(Error::MissingBound(format!("initial data {} must declare sup_bound", initial.label)));
        }
        Ok(HeatConfig {
            dim,
            time,
            initial,
            quadrature,
        })
    }
}

/// `(4 pi t)^{-n/2} exp(-|xi|^2 / (4 t))`.
pub fn heat_kernel(xi: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonpositiveTime(t));
    }
    let n = xi.len() as i32;
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    Ok((4.0 * std::f64::consts::PI * t).powf(-0.5 * n as f64) * (-r2 / (4.0 * t)).exp())
}

/// Truncation radius `10 sqrt(t) max(1, ln(1/eps))`.
pub fn heat_radius(t: f64, eps: f64) -> f64 {
    10.0 * t.sqrt() * (1.0f64).max((1.0 / eps).ln())
}

/// `u(., t)` as a field: quadrature of `Phi(xi, t) g(x - xi)` over the truncation cube.
#[derive(Debug, Clone)]
pub struct HeatField {
    pub initial: FunctionExpr,
    pub time: f64,
    pub radius: f64,
    /// Offsets `xi` with nonzero weight, flattened `[(node, axis)]`.
    xi: Vec<f64>,
    w: Vec<f64>,
    pub mass: f64,
    /// Gaussian mass outside the truncation cube, bounded by `n exp(-R^2 / (4t))`.
    pub tail_mass: f64,
}

impl HeatField {
    pub fn new(cfg: &HeatConfig) -> Result<Self> {
        let t = cfg.time;
        let n = cfg.dim;
        let radius = heat_radius(t, cfg.quadrature.eps_tail);
        // panels no wider than the Gaussian scale
        let ppu = cfg.quadrature.panels_per_unit.max((1.0 / t.sqrt()).ceil() as usize);
        let axis = composite(cfg.quadrature.rule, ppu, -radius, radius);
        let mut xi = Vec::new();
        let mut w = Vec::new();
        let mut mass = Neumaier::default();
        let m = axis.len();
        let mut p = vec![0.0; n];
        for flat in 0..m.pow(n as u32) {
            let mut rem = flat;
            let mut wt = 1.0;
            for d in (0..n).rev() {
                let k = rem % m;
                rem /= m;
                p[d] = axis.x[k];
                wt *= axis.w[k];
            }
            let v = wt * heat_kernel(&p, t)?;
            if v > 0.0 {
                xi.extend_from_slice(&p);
                w.push(v);
                mass.add(v);
            }
        }
        let mass = mass.sum();
        let tail_mass = n as f64 * (-radius * radius / (4.0 * t)).exp();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::TruncationUnstable { rel: (mass - 1.0).abs() });
        }
        Ok(HeatField {
            initial: cfg.initial.clone(),
            time: t,
            radius,
            xi,
            w,
            mass,
            tail_mass,
        })
    }

    pub fn node_count(&self) -> usize {
        self.w.len()
    }

    /// Per-point bound: neglected tail plus the discrete mass defect, times `sup |g|`.
    pub fn err_bound(&self) -> f64 {
        let sup = self.initial.sup_bound.unwrap_or(f64::INFINITY);
        (self.tail_mass + (self.mass - 1.0).abs()) * sup
    }
}

impl Field for HeatField {
    fn label(&self) -> String {
        format!("heat[{}, t={}]", self.initial.label, self.time)
    }
    fn arity_time(&self) -> usize {
        self.initial.arity_time
    }
    fn arity_state(&self) -> usize {
        0
    }
    fn out_dim(&self) -> usize {
        1
    }
    fn sup_bound(&self) -> Option<f64> {
        self.initial.sup_bound
    }
    fn eval_into(&self, t: &[f64], _x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.initial.arity_time;
        if t.len() != n {
            return Err(Error::dim(n, t.len(), "heat evaluation point"));
        }
        let mut acc = Neumaier::default();
        let mut y = vec![0.0; n];
        for (k, w) in self.w.iter().enumerate() {
            for d in 0..n {
                y[d] = t[d] - self.xi[k * n + d];
            }
            acc.add(w * self.initial.eval_scalar(&y, &[])?);
        }
        out[0] = acc.sum();
        Ok(())
    }
}

pub fn heat_solve(cfg: &HeatConfig, x_grid: &GridWindow) -> Result<SampledGrid> {
    if x_grid.dim != cfg.dim {
        return Err(Error::dim(cfg.dim, x_grid.dim, "heat grid"));
    }
    let field = HeatField::new(cfg)?;
    let values: Vec<f64> = (0..x_grid.len())
        .into_par_iter()
        .map(|i| {
            let mut v = [0.0];
            field.eval_into(&x_grid.point(i), &[], &mut v)?;
            Ok(v[0])
        })
        .collect::<Result<_>>()?;
    Ok(SampledGrid {
        window: x_grid.clone(),
        out_dim: 1,
        values,
        err_bound: vec![field.err_bound(); x_grid.len()],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatAaReport {
    pub time: f64,
    pub radius: f64,
    pub kernel_mass: f64,
    pub initial: BochnerVerdict,
    pub solution: BochnerVerdict,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Limit test on `g`, then on `x -> u(x, t)` with the same probe and tolerance.
pub fn heat_preserves_aa_check(cfg: &HeatConfig, probe: &LimitProbe) -> Result<HeatAaReport> {
    let initial = bochner_test(&cfg.initial, probe)?;
    if !initial.passed {
        return Err(Error::PreconditionFailed(format!(
            "initial data {} fails the limit test (forward {:.2e}, backward {:.2e})",
            cfg.initial.label, initial.forward_residual, initial.backward_residual
        )));
    }
    let field = HeatField::new(cfg)?;
    let solution = bochner_test(&field, probe)?;
    let passed = solution.passed;
    let notes = vec![format!(
        "{} quadrature nodes within radius {:.3}, discrete mass {:.12}",
        field.node_count(),
        field.radius,
        field.mass
    )];
    Ok(HeatAaReport {
        time: cfg.time,
        radius: field.radius,
        kernel_mass: field.mass,
        initial,
        solution,
        passed,
        notes,
    })
}
