use super::resolvent::ResolventTable;
use super::system::MemorySystem;
use crate::error::{Error, Result};
use crate::fixed_point_solvers::{ContractionCertificate, IterationTrace, MAX_SWEEPS};
use crate::function_core::GridWindow;
use crate::numerics::rng::DEFAULT_SEED;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct MildSolve {
    pub trace: IterationTrace,
    /// First iterate, built from `g(0)` and `f(., 0)`.
    #[serde(skip)]
    pub y0: Vec<f64>,
    /// `|Phi(y0) - y0| / (1 - theta)`, the radius of the ball the iteration stays in.
    pub a_priori_radius: f64,
    /// `|u - y0|` for the converged `u`.
    pub distance_from_y0: f64,
    pub rho: Option<f64>,
    pub ball_ok: Option<bool>,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Right-hand side of the mild formulation on the table grid.
struct MildMap<'a> {
    sys: &'a MemorySystem,
    table: &'a ResolventTable,
    count: usize,
}

impl MildMap<'_> {
    fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let d = self.sys.dim;
        let dt = self.table.step;
        let g = self.sys.nonlocal.apply(u, d);
        let start: Vec<f64> = self.sys.u0.iter().zip(&g).map(|(a, b)| a + b).collect();
        let fvals: Vec<f64> = match &self.sys.forcing {
            None => vec![0.0; self.count * d],
            Some(f) => (0..self.count)
                .into_par_iter()
                .map(|j| f.eval(&[j as f64 * dt], &u[j * d..(j + 1) * d]))
                .collect::<Result<Vec<_>>>()?
                .concat(),
        };
        let rows: Vec<Vec<f64>> = (0..self.count)
            .into_par_iter()
            .map(|n| {
                let mut out = vec![0.0; d];
                let mut acc = |r: &[f64], v: &[f64], w: f64| {
                    for i in 0..d {
                        out[i] += w * r[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                    }
                };
                acc(&self.table.values[n], &start, 1.0);
                if n > 0 && self.sys.forcing.is_some() {
                    for j in 0..=n {
                        let w = if j == 0 || j == n { 0.5 * dt } else { dt };
                        acc(&self.table.values[n - j], &fvals[j * d..(j + 1) * d], w);
                    }
                }
                out
            })
            .collect();
        Ok(rows.concat())
    }
}

/// Picard iteration for `u(t) = R(t)(u0 + g(u)) + int_0^t R(t - s) f(s, u(s)) ds`
/// on the table grid up to `horizon`.
pub fn solve_mild_nonlocal(
    sys: &MemorySystem,
    table: &ResolventTable,
    horizon: f64,
    tol: f64,
    rho: Option<f64>,
) -> Result<MildSolve> {
    if table.dim != sys.dim {
        return Err(Error::dim(sys.dim, table.dim, "resolvent table"));
    }
    if horizon > table.t_max() * (1.0 + 1e-12) {
        return Err(Error::HorizonExceedsTable {
            horizon,
            t_max: table.t_max(),
        });
    }
    let lip_f = match &sys.forcing {
        None => 0.0,
        Some(f) => f
            .lipschitz_in_state
            .ok_or_else(|| Error::MissingBound(format!("forcing {} has no Lipschitz constant", f.label)))?,
    };
    let (m, delta) = (table.m_est, table.delta_est);
    let cert = if delta > 0.0 {
        ContractionCertificate::new(m * sys.nonlocal.lipschitz(), lip_f, m / delta)
    } else {
        ContractionCertificate::with_theta(m * sys.nonlocal.lipschitz(), lip_f, f64::INFINITY, f64::INFINITY)
    };
    cert.require_valid()?;
    let count = (horizon / table.step + 1e-9).floor() as usize + 1;
    let d = sys.dim;
    let map = MildMap { sys, table, count };
    let mut u = vec![0.0; count * d];
    let mut prev = u.clone();
    let mut diffs = Vec::new();
    let mut cap = MAX_SWEEPS;
    let mut converged = false;
    let mut y0 = Vec::new();
    while diffs.len() < cap {
        let next = map.apply(&u)?;
        let diff = sup_diff(&next, &u);
        prev = std::mem::replace(&mut u, next);
        if diffs.is_empty() {
            y0 = u.clone();
            cap = (cert.sweeps_needed(diff, tol) + 10).min(MAX_SWEEPS);
        }
        diffs.push(diff);
        if cert.theta == 0.0 || diff <= tol * (1.0 - cert.theta) {
            converged = true;
            break;
        }
    }
    let check = map.apply(&u)?;
    let residual = sup_diff(&check, &u);
    let phi_y0 = map.apply(&y0)?;
    let a_priori_radius = sup_diff(&phi_y0, &y0) / (1.0 - cert.theta);
    let distance_from_y0 = sup_diff(&u, &y0);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let g_sup = sup(&sys.nonlocal.apply(&u, d));
    let f_sup = match &sys.forcing {
        None => 0.0,
        Some(f) => (0..count)
            .map(|j| f.eval(&[j as f64 * table.step], &u[j * d..(j + 1) * d]).map(|v| sup(&v)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max),
    };
    let t_end = (count - 1) as f64 * table.step;
    let quad_err = table.halving_err * (sup(&sys.u0) + g_sup + t_end * f_sup);
    let window = GridWindow::new(vec![0.0], vec![t_end.max(table.step)], count.max(2))?;
    let mut notes = vec![format!(
        "M = {m:.6}, delta = {delta:.6}, theta = M L_g + (M / delta) L_f = {:.6}",
        cert.theta
    )];
    if !converged {
        notes.push(format!("stopped after {} sweeps without meeting the tolerance", diffs.len()));
    }
    let ball_ok = rho.map(|r| a_priori_radius <= r && distance_from_y0 <= r);
    Ok(MildSolve {
        trace: IterationTrace {
            certificate: cert,
            k_final: diffs.len(),
            sup_diffs: diffs,
            residual,
            quad_err,
            far_field_err: 0.0,
            converged,
            seed: DEFAULT_SEED,
            notes,
            window,
            out_dim: d,
            iterates_kept: [prev, u],
        },
        y0,
        a_priori_radius,
        distance_from_y0,
        rho,
        ball_ok,
    })
}
