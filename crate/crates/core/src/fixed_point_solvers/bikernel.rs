use super::certificate::{ContractionCertificate, IterationTrace};
use super::vie::{WindowSolver, MAX_SWEEPS};
use crate::error::{Error, Result};
use crate::function_core::{FunctionExpr, GridWindow, EPS_LIP};
use crate::numerics::quadrature::QuadratureScheme;
use crate::numerics::rng::{Stream, DEFAULT_SEED};
use crate::volterra_ops::{whole_space_mass, KernelSpec};
use rayon::prelude::*;

/// Random pairs used to spot-check `|G(t,s;x) - G(t,s;y)| <= lambda(t-s) |x-y|`.
pub const LIPSCHITZ_SAMPLES: u64 = 256;

/// `u(t) = int_{R^l} G(t, s; u(s)) ds` with `G` Lipschitz in the state through `lambda(t - s)`.
#[derive(Debug, Clone)]
pub struct BikernelProblem {
    pub g: FunctionExpr,
    pub lambda: KernelSpec,
    pub scheme: QuadratureScheme,
    pub seed: u64,
}

impl BikernelProblem {
    pub fn new(g: FunctionExpr, lambda: KernelSpec, scheme: QuadratureScheme) -> Result<Self> {
        let l = lambda.dim;
        if g.arity_time != 2 * l {
            return Err(Error::dim(2 * l, g.arity_time, "G takes (t, s) with t, s in R^l"));
        }
        if g.arity_state != g.out_dim() {
            return Err(Error::dim(g.out_dim(), g.arity_state, "G maps the state space to itself"));
        }
        Ok(BikernelProblem {
            g,
            lambda,
            scheme,
            seed: DEFAULT_SEED,
        })
    }

    pub fn certificate(&self) -> Result<ContractionCertificate> {
        let mass = whole_space_mass(&self.lambda, &self.scheme)? + self.scheme.eps_tail;
        Ok(ContractionCertificate::new(0.0, 1.0, mass))
    }

    /// Sampled check of the Lipschitz hypothesis on `window`.
    pub fn check_lipschitz(&self, window: &GridWindow) -> Result<()> {
        let l = self.lambda.dim;
        let p = self.g.arity_state;
        let trunc = self.lambda.truncation(self.scheme.eps_tail, 2f64.powi(l as i32));
        let st = Stream::new(self.seed, 0x6c69_70);
        let mut c = 0u64;
        let mut next = |lo: f64, hi: f64| {
            c += 1;
            st.uniform_in(c, lo, hi)
        };
        for _ in 0..LIPSCHITZ_SAMPLES {
            let t: Vec<f64> = (0..l).map(|i| next(window.lo[i], window.hi[i])).collect();
            let r: Vec<f64> = (0..l).map(|i| next(-trunc[i], trunc[i])).collect();
            let x: Vec<f64> = (0..p).map(|_| next(-3.0, 3.0)).collect();
            let y: Vec<f64> = (0..p).map(|_| next(-3.0, 3.0)).collect();
            let mut ts: Vec<f64> = t.clone();
            ts.extend(t.iter().zip(&r).map(|(a, b)| a - b));
            let gx = self.g.eval(&ts, &x)?;
            let gy = self.g.eval(&ts, &y)?;
            let lhs = gx.iter().zip(&gy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let dx = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let bound = self.lambda.eval(&r)? * dx;
            if lhs > bound * (1.0 + EPS_LIP) + 1e-15 {
                return Err(Error::PreconditionFailed(format!(
                    "G is not lambda-Lipschitz at t={t:?}, t-s={r:?}: {lhs:e} > {bound:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn solve(&self, window: &GridWindow, tol: f64) -> Result<IterationTrace> {
        let cert = self.certificate()?;
        cert.require_valid()?;
        self.check_lipschitz(window)?;
        let l = self.lambda.dim;
        let p = self.g.arity_state;
        let np = window.points_per_axis;
        let h: Vec<f64> = (0..l).map(|i| window.spacing(i)).collect();
        let trunc = self.lambda.truncation(self.scheme.eps_tail, 2f64.powi(l as i32));
        let half: Vec<usize> = trunc.iter().zip(&h).map(|(t, hh)| (t / hh - 1e-9).ceil().max(1.0) as usize).collect();
        let span: Vec<usize> = half.iter().map(|j| 2 * j + 1).collect();
        let n_off: usize = span.iter().product();
        // offsets j in [-J, J]^l with trapezoid weights
        let mut offsets = Vec::with_capacity(n_off);
        for flat in 0..n_off {
            let mut rem = flat;
            let mut j = vec![0isize; l];
            let mut w = 1.0;
            for d in (0..l).rev() {
                j[d] = (rem % span[d]) as isize - half[d] as isize;
                rem /= span[d];
                w *= if j[d].unsigned_abs() == half[d] { 0.5 * h[d] } else { h[d] };
            }
            offsets.push((j, w));
        }
        let points = window.points();
        let lam_w: Vec<f64> = offsets
            .iter()
            .map(|(j, w)| {
                let r: Vec<f64> = j.iter().zip(&h).map(|(a, b)| -(*a as f64) * b).collect();
                Ok(self.lambda.eval(&r)?.abs() * w)
            })
            .collect::<Result<_>>()?;
        let sweep = |u: &[f64]| -> Result<Vec<f64>> {
            let rows: Vec<Vec<f64>> = (0..points.len())
                .into_par_iter()
                .map(|i| {
                    let wi = window.multi_index(i);
                    let mut ts = vec![0.0; 2 * l];
                    ts[..l].copy_from_slice(&points[i]);
                    let mut acc = vec![0.0; p];
                    let mut buf = vec![0.0; p];
                    for (j, w) in &offsets {
                        let mut flat = 0;
                        for d in 0..l {
                            ts[l + d] = points[i][d] + j[d] as f64 * h[d];
                            let k = (wi[d] as isize + j[d]).clamp(0, np as isize - 1) as usize;
                            flat = flat * np + k;
                        }
                        self.g.eval_into(&ts, &u[flat * p..(flat + 1) * p], &mut buf)?;
                        acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += w * b);
                    }
                    Ok(acc)
                })
                .collect::<Result<_>>()?;
            Ok(rows.concat())
        };
        let mut u = vec![0.0; points.len() * p];
        let mut prev = u.clone();
        let mut diffs = Vec::new();
        let mut cap = MAX_SWEEPS;
        let mut converged = false;
        while diffs.len() < cap {
            let next = sweep(&u)?;
            let d = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prev = std::mem::replace(&mut u, next);
            diffs.push(d);
            if diffs.len() == 1 {
                cap = (cert.sweeps_needed(d, tol) + 10).min(MAX_SWEEPS);
            }
            if cert.theta == 0.0 || d <= tol * (1.0 - cert.theta) {
                converged = true;
                break;
            }
        }
        let check = sweep(&u)?;
        let residual = check.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let sup_u = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // lambda mass on nodes that fall outside the window, worst over points
        let clamped = (0..points.len())
            .map(|i| {
                let wi = window.multi_index(i);
                offsets
                    .iter()
                    .zip(&lam_w)
                    .filter(|((j, _), _)| {
                        (0..l).any(|d| {
                            let k = wi[d] as isize + j[d];
                            k < 0 || k >= np as isize
                        })
                    })
                    .map(|(_, w)| *w)
                    .sum::<f64>()
            })
            .fold(0.0f64, f64::max);
        let mut notes = vec![format!("trapezoid lattice, spacing {h:?}, truncation {trunc:?}")];
        if !converged {
            notes.push(format!("stopped after {} sweeps without meeting the tolerance", diffs.len()));
        }
        Ok(IterationTrace {
            certificate: cert,
            k_final: diffs.len(),
            sup_diffs: diffs,
            residual,
            quad_err: self.scheme.eps_tail * sup_u.max(1.0),
            far_field_err: clamped * 2.0 * sup_u,
            converged,
            seed: self.seed,
            notes,
            window: window.clone(),
            out_dim: p,
            iterates_kept: [prev, u],
        })
    }
}

pub fn solve_bikernel(
    g: &FunctionExpr,
    lambda: &KernelSpec,
    window: &GridWindow,
    q: &QuadratureScheme,
    tol: f64,
) -> Result<IterationTrace> {
    BikernelProblem::new(g.clone(), lambda.clone(), q.clone())?.solve(window, tol)
}

/// A `BikernelProblem` solved to a fixed tolerance on each requested window.
pub struct BikernelWindowSolver {
    pub problem: BikernelProblem,
    pub tol: f64,
}

impl WindowSolver for BikernelWindowSolver {
    fn label(&self) -> String {
        format!("bikernel[{}]", self.problem.g.label)
    }
    fn dim(&self) -> usize {
        self.problem.lambda.dim
    }
    fn solve_window(&self, window: &GridWindow) -> Result<Vec<f64>> {
        if self.problem.g.arity_state != 1 {
            return Err(Error::dim(1, self.problem.g.arity_state, "scalar solutions only"));
        }
        let mut trace = self.problem.solve(window, self.tol)?;
        Ok(std::mem::take(&mut trace.iterates_kept[1]))
    }
}
