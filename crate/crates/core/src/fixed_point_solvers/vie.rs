use super::certificate::{ContractionCertificate, IterationTrace};
use super::lattice::{LatticeLayout, LatticeOperator};
use crate::error::{Error, Result};
use crate::function_core::{BoundedSetSpec, Field, FunctionExpr, GridWindow, SequenceFamily};
use crate::numerics::quadrature::QuadratureScheme;
use crate::numerics::rng::DEFAULT_SEED;
use crate::sequence_limits::{asymptotic_decompose, DecomposeOptions, DecomposeReport};
use crate::volterra_ops::{verify_e1, DomainDescriptor, KernelSpec};
use rayon::prelude::*;
use std::sync::{Arc, Mutex};

/// Hard cap on Picard sweeps.
pub const MAX_SWEEPS: usize = 500;

/// `u(t) = g(t; u(t)) + int_{D_t} K(t - eta) h(eta, u(eta)) d eta`.
#[derive(Debug)]
pub struct VieProblem {
    pub g: FunctionExpr,
    pub h: FunctionExpr,
    pub kernel: KernelSpec,
    pub domain: DomainDescriptor,
    pub scheme: QuadratureScheme,
    pub seed: u64,
    cache: Mutex<Option<Arc<LatticeOperator>>>,
}

impl Clone for VieProblem {
    fn clone(&self) -> Self {
        VieProblem {
            g: self.g.clone(),
            h: self.h.clone(),
            kernel: self.kernel.clone(),
            domain: self.domain.clone(),
            scheme: self.scheme.clone(),
            seed: self.seed,
            cache: Mutex::new(self.cache.lock().expect("cache lock").clone()),
        }
    }
}

impl VieProblem {
    pub fn new(
        g: FunctionExpr,
        h: FunctionExpr,
        kernel: KernelSpec,
        domain: DomainDescriptor,
        scheme: QuadratureScheme,
    ) -> Result<Self> {
        let n = kernel.dim;
        if g.arity_time != n || h.arity_time != n || domain.dim != n {
            return Err(Error::dim(n, g.arity_time, "g, h, kernel and domain must share the time dimension"));
        }
        if g.out_dim() != 1 || h.out_dim() != 1 {
            return Err(Error::dim(1, g.out_dim().max(h.out_dim()), "scalar equations only"));
        }
        if g.arity_state > 1 {
            return Err(Error::dim(1, g.arity_state, "g state argument"));
        }
        if h.arity_state != 1 {
            return Err(Error::dim(1, h.arity_state, "h state argument"));
        }
        Ok(VieProblem {
            g,
            h,
            kernel,
            domain,
            scheme,
            seed: DEFAULT_SEED,
            cache: Mutex::new(None),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim
    }

    /// `L_g + L_h sup_t int_{I_t} |K|`.
    pub fn certificate(&self) -> Result<ContractionCertificate> {
        let lip_outer = if self.g.arity_state == 0 {
            0.0
        } else {
            self.g
                .lipschitz_in_state
                .ok_or_else(|| Error::MissingBound(format!("{} has no Lipschitz constant in the state", self.g.label)))?
        };
        let lip_inner = self
            .h
            .lipschitz_in_state
            .ok_or_else(|| Error::MissingBound(format!("{} has no Lipschitz constant in the state", self.h.label)))?;
        let mass = if self.domain.is_null() {
            0.0
        } else {
            // truncation leaves at most eps_tail outside the box
            verify_e1(&self.kernel.abs(), &self.scheme, &[vec![0.0; self.dim()]])?.sup_estimate + self.scheme.eps_tail
        };
        Ok(ContractionCertificate::new(lip_outer, lip_inner, mass))
    }

    pub fn operator(&self, window: &GridWindow) -> Result<Arc<LatticeOperator>> {
        let mut cache = self.cache.lock().expect("cache lock");
        if let Some(op) = cache.as_ref() {
            if op.matches_spacing(window) {
                return Ok(op.clone());
            }
        }
        let op = Arc::new(LatticeOperator::for_window(&self.kernel, &self.domain, window, &self.scheme)?);
        *cache = Some(op.clone());
        Ok(op)
    }

    /// Picard iteration from `u_0 = 0` until `sup_diff <= tol (1 - theta)`.
    pub fn solve(&self, window: &GridWindow, tol: f64) -> Result<IterationTrace> {
        let cert = self.certificate()?;
        cert.require_valid()?;
        let op = self.operator(window)?;
        let layout = op.layout(window)?;
        let mut sweeper = Sweeper::new(self, &op, &layout)?;
        let n_pts = window.len();
        let mut u = vec![0.0; n_pts];
        let mut prev = u.clone();
        let mut diffs = Vec::new();
        let mut cap = MAX_SWEEPS;
        let mut converged = false;
        while diffs.len() < cap {
            let next = sweeper.sweep(&u)?;
            let d = sup_diff(&next, &u);
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
        let check = sweeper.sweep(&u)?;
        let residual = sup_diff(&check, &u);
        let sup_u = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let quad_err = self.scheme.eps_tail * sweeper.sup_phi * cert.kernel_mass.max(1.0);
        let far_field_err = cert.lip_inner * op.clamped_mass(&layout) * 2.0 * sup_u;
        let mut notes = vec![format!(
            "lattice spacing {:?}, truncation {:?}, {} clamped extension node(s) per axis",
            op.h, op.truncation, layout.ext[0]
        )];
        if !converged {
            notes.push(format!("stopped after {} sweeps without meeting the tolerance", diffs.len()));
        }
        Ok(IterationTrace {
            certificate: cert,
            k_final: diffs.len(),
            sup_diffs: diffs,
            residual,
            quad_err,
            far_field_err,
            converged,
            seed: self.seed,
            notes,
            window: window.clone(),
            out_dim: 1,
            iterates_kept: [prev, u],
        })
    }

    /// One application of the discrete operator to `u` given on `window`.
    pub fn apply(&self, window: &GridWindow, u: &[f64]) -> Result<Vec<f64>> {
        let op = self.operator(window)?;
        let layout = op.layout(window)?;
        Sweeper::new(self, &op, &layout)?.sweep(u)
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

struct Sweeper<'a> {
    p: &'a VieProblem,
    op: &'a LatticeOperator,
    layout: &'a LatticeLayout,
    /// Coordinates of the extended lattice, `dim` per node.
    eta: Vec<f64>,
    clamp: Vec<usize>,
    g_fixed: Option<Vec<f64>>,
    points: Vec<Vec<f64>>,
    sup_phi: f64,
}

impl<'a> Sweeper<'a> {
    fn new(p: &'a VieProblem, op: &'a LatticeOperator, layout: &'a LatticeLayout) -> Result<Self> {
        let n = layout.sizes.len();
        let total = layout.len();
        let mut eta = vec![0.0; total * n];
        let mut clamp = vec![0usize; total];
        let mut idx = vec![0usize; n];
        for e in 0..total {
            layout.multi_index(e, &mut idx);
            layout.coord(&idx, &mut eta[e * n..(e + 1) * n]);
            clamp[e] = layout.clamp_to_window(&idx);
        }
        let points = layout.window.points();
        let g_fixed = if p.g.arity_state == 0 {
            Some(
                points
                    .par_iter()
                    .map(|t| p.g.eval_scalar(t, &[]))
                    .collect::<Result<Vec<f64>>>()?,
            )
        } else {
            None
        };
        Ok(Sweeper {
            p,
            op,
            layout,
            eta,
            clamp,
            g_fixed,
            points,
            sup_phi: 0.0,
        })
    }

    fn sweep(&mut self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.layout.sizes.len();
        let phi: Vec<f64> = if self.p.domain.is_null() {
            vec![0.0; self.clamp.len()]
        } else {
            (0..self.clamp.len())
                .into_par_iter()
                .map(|e| self.p.h.eval_scalar(&self.eta[e * n..(e + 1) * n], &[u[self.clamp[e]]]))
                .collect::<Result<_>>()?
        };
        self.sup_phi = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (0..self.points.len())
            .into_par_iter()
            .map(|w| {
                let outer = match &self.g_fixed {
                    Some(g) => g[w],
                    None => self.p.g.eval_scalar(&self.points[w], &[u[w]])?,
                };
                Ok(outer + self.op.apply(self.layout, &phi, w))
            })
            .collect()
    }
}

/// Infinite-delay Volterra equation on the causal cone, `g` without state.
pub fn solve_vie_infinite_delay(
    g: &FunctionExpr,
    h: &FunctionExpr,
    k: &KernelSpec,
    window: &GridWindow,
    q: &QuadratureScheme,
    tol: f64,
) -> Result<IterationTrace> {
    if g.arity_state != 0 {
        return Err(Error::dim(0, g.arity_state, "g takes no state argument here"));
    }
    let p = VieProblem::new(g.clone(), h.clone(), k.clone(), DomainDescriptor::causal_cone(k.dim), q.clone())?;
    p.solve(window, tol)
}

/// Asymptotic check run on a solved grid.
#[derive(Debug, Clone)]
pub struct AsymptoticCheck {
    pub family: SequenceFamily,
    pub window: GridWindow,
    pub options: DecomposeOptions,
}

#[derive(Debug, Clone)]
pub struct AsymptoticSolve {
    pub trace: IterationTrace,
    pub verdict: Option<DecomposeReport>,
}

/// Volterra equation on a restricted domain; the solution grid is then split
/// into its almost automorphic and vanishing parts.
#[allow(clippy::too_many_arguments)]
pub fn solve_vie_asymptotic(
    g: &FunctionExpr,
    h: &FunctionExpr,
    k: &KernelSpec,
    d: &DomainDescriptor,
    window: &GridWindow,
    q: &QuadratureScheme,
    tol: f64,
    check: Option<&AsymptoticCheck>,
) -> Result<AsymptoticSolve> {
    if !d.interior_nonempty(&window.hi) || d.is_null() {
        return Err(Error::EmptyInterior(format!("{:?}", d.kind)));
    }
    let p = VieProblem::new(g.clone(), h.clone(), k.clone(), d.clone(), q.clone())?;
    let trace = p.solve(window, tol)?;
    let verdict = match check {
        Some(c) => {
            let grid = trace.solution_grid();
            Some(asymptotic_decompose(&grid, &c.family, &BoundedSetSpec::none(), &c.window, &c.options)?)
        }
        None => None,
    };
    Ok(AsymptoticSolve { trace, verdict })
}

/// A solver that can produce its solution on any window of the right shape.
pub trait WindowSolver: Sync {
    fn label(&self) -> String;
    fn dim(&self) -> usize;
    fn solve_window(&self, window: &GridWindow) -> Result<Vec<f64>>;
}

/// A `VieProblem` solved to a fixed tolerance on each requested window.
pub struct VieWindowSolver {
    pub problem: VieProblem,
    pub tol: f64,
}

impl WindowSolver for VieWindowSolver {
    fn label(&self) -> String {
        format!("vie[{}]", self.problem.g.label)
    }
    fn dim(&self) -> usize {
        self.problem.dim()
    }
    fn solve_window(&self, window: &GridWindow) -> Result<Vec<f64>> {
        let mut trace = self.problem.solve(window, self.tol)?;
        Ok(std::mem::take(&mut trace.iterates_kept[1]))
    }
}

/// Solution viewed as a function: every window request is a fresh local
/// solve on that window, point requests solve on `base` centred at the point.
pub struct SolutionField<S: WindowSolver> {
    pub solver: S,
    pub base: GridWindow,
}

impl<S: WindowSolver> SolutionField<S> {
    pub fn new(solver: S, base: GridWindow) -> Result<Self> {
        if base.points_per_axis % 2 == 0 {
            return Err(Error::PreconditionFailed("base window needs an odd point count".into()));
        }
        if base.dim != solver.dim() {
            return Err(Error::dim(solver.dim(), base.dim, "base window"));
        }
        Ok(SolutionField { solver, base })
    }
}

impl<S: WindowSolver> Field for SolutionField<S> {
    fn label(&self) -> String {
        self.solver.label()
    }
    fn arity_time(&self) -> usize {
        self.base.dim
    }
    fn arity_state(&self) -> usize {
        0
    }
    fn out_dim(&self) -> usize {
        1
    }
    fn sup_bound(&self) -> Option<f64> {
        None
    }
    fn eval_into(&self, t: &[f64], _x: &[f64], out: &mut [f64]) -> Result<()> {
        let c = self.base.center();
        let shift: Vec<f64> = t.iter().zip(&c).map(|(a, b)| a - b).collect();
        let w = self.base.shifted(&shift);
        let vals = self.solver.solve_window(&w)?;
        out[0] = vals[w.len() / 2];
        Ok(())
    }
    fn eval_window(&self, window: &GridWindow, shift: &[f64], states: &[Vec<f64>]) -> Result<Vec<f64>> {
        let vals = self.solver.solve_window(&window.shifted(shift))?;
        let s = states.len().max(1);
        Ok(vals.iter().flat_map(|v| std::iter::repeat_n(*v, s)).collect())
    }
}
