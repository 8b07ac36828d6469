use super::domain::{DomainDescriptor, DomainKind};
use super::kernel::{Decay, KernelSpec};
use crate::error::{Error, Result};
use crate::function_core::{Field, GridWindow};
use crate::numerics::quadrature::{composite_aligned, Neumaier, QuadratureScheme};
use crate::sequence_limits::Ray;
use rayon::prelude::*;
use serde::Serialize;

/// Relative change tolerated when the truncation radius is doubled.
pub const DOUBLING_TOL: f64 = 1e-4;

/// Tensor nodes over a box with `weight * K(node)` folded in.
#[derive(Debug, Clone, Default)]
pub struct KernelTable {
    pub dim: usize,
    /// Flat node coordinates, `dim` per node.
    pub nodes: Vec<f64>,
    pub wk: Vec<f64>,
}

impl KernelTable {
    pub fn build(k: &KernelSpec, rbox: &[(f64, f64)], scheme: &QuadratureScheme) -> Result<Self> {
        let axes: Vec<_> = rbox
            .iter()
            .map(|(a, b)| composite_aligned(scheme.rule, scheme.panels_per_unit, *a, *b))
            .collect();
        let dim = rbox.len();
        let mut table = KernelTable {
            dim,
            ..Default::default()
        };
        if axes.iter().any(|a| a.is_empty()) {
            return Ok(table);
        }
        let mut idx = vec![0usize; dim];
        let mut r = vec![0.0; dim];
        loop {
            let mut w = 1.0;
            for d in 0..dim {
                r[d] = axes[d].x[idx[d]];
                w *= axes[d].w[idx[d]];
            }
            let kv = k.eval(&r)?;
            if kv != 0.0 {
                table.nodes.extend_from_slice(&r);
                table.wk.push(w * kv);
            }
            let mut d = dim;
            loop {
                if d == 0 {
                    return Ok(table);
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.wk.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wk.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mass(&self) -> f64 {
        let mut acc = Neumaier::default();
        self.wk.iter().for_each(|w| acc.add(*w));
        acc.sum()
    }

    pub fn min_weight(&self) -> Option<(f64, usize)> {
        self.wk
            .iter()
            .enumerate()
            .map(|(i, w)| (*w, i))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }
}

fn rel_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn check_nonnegative(k: &KernelSpec, table: &KernelTable) -> Result<()> {
    if let Some((w, i)) = table.min_weight() {
        if w < 0.0 {
            let r = table.node(i).to_vec();
            return Err(Error::NegativeKernel {
                value: k.eval(&r)?,
                at: format!("{r:?}"),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct E1Report {
    pub values: Vec<f64>,
    pub sup_estimate: f64,
    pub truncation: Vec<f64>,
    pub doubling_change: f64,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// `sup_t int_{I_t} K(t - eta) d eta` via `r = t - eta` over the truncated orthant.
pub fn verify_e1(k: &KernelSpec, q: &QuadratureScheme, t_samples: &[Vec<f64>]) -> Result<E1Report> {
    if let Some(t) = t_samples.iter().find(|t| t.len() != k.dim) {
        return Err(Error::dim(k.dim, t.len(), "E1 sample point"));
    }
    let trunc = k.truncation(q.eps_tail, 1.0);
    let rbox: Vec<(f64, f64)> = trunc.iter().map(|t| (0.0, *t)).collect();
    let table = KernelTable::build(k, &rbox, q)?;
    check_nonnegative(k, &table)?;
    let v = table.mass();
    let rbox2: Vec<(f64, f64)> = trunc.iter().map(|t| (0.0, 2.0 * t)).collect();
    let table2 = KernelTable::build(k, &rbox2, q)?;
    check_nonnegative(k, &table2)?;
    let v2 = table2.mass();
    let change = rel_change(v, v2);
    if change > DOUBLING_TOL || !v.is_finite() {
        return Err(Error::TruncationUnstable { rel: change });
    }
    let values = vec![v; t_samples.len().max(1)];
    let mut notes = vec!["translation-invariant kernel: the integral does not depend on t".to_string()];
    if let Some(tail) = k.tail_bound(&trunc) {
        notes.push(format!("analytic tail bound beyond truncation {tail:.3e}"));
    }
    Ok(E1Report {
        sup_estimate: v,
        values,
        truncation: trunc,
        doubling_change: change,
        passed: true,
        notes,
    })
}

/// `int_{D_t} K(t - eta) d eta`, optionally restricted to `|eta| <= ball`.
fn domain_integral(
    k: &KernelSpec,
    d: &DomainDescriptor,
    t: &[f64],
    trunc: &[f64],
    q: &QuadratureScheme,
    ball: Option<f64>,
) -> Result<f64> {
    if d.is_null() {
        return Ok(0.0);
    }
    let Some(mut rbox) = d.r_box(t, trunc) else {
        return Ok(0.0);
    };
    if let Some(rho) = ball {
        for (i, (lo, hi)) in rbox.iter_mut().enumerate() {
            *lo = lo.max(t[i] - rho);
            *hi = hi.min(t[i] + rho);
            if !(*hi > *lo) {
                return Ok(0.0);
            }
        }
    }
    let table = KernelTable::build(k, &rbox, q)?;
    let mut acc = Neumaier::default();
    let mut eta = vec![0.0; k.dim];
    for i in 0..table.len() {
        let r = table.node(i);
        eta.iter_mut().zip(t.iter().zip(r)).for_each(|(e, (ti, ri))| *e = ti - ri);
        if let Some(rho) = ball {
            if eta.iter().map(|v| v * v).sum::<f64>().sqrt() > rho {
                continue;
            }
        }
        if let DomainKind::Indicator(_) = d.kind {
            if !d.contains(&eta) {
                continue;
            }
        }
        acc.add(table.wk[i]);
    }
    Ok(acc.sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct E23Ray {
    pub ray: Ray,
    pub radii: Vec<f64>,
    /// `int_{D_t} K(t - eta)` at each radius.
    pub dt_integral: Vec<f64>,
    pub e2: Vec<f64>,
    /// `e3[j][i]`: ball radius `r_ladder[j]`, ray radius `radii[i]`.
    pub e3: Vec<Vec<f64>>,
    pub e2_pass: bool,
    pub e3_pass: Vec<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct E23Report {
    pub rays: Vec<E23Ray>,
    pub r_ladder: Vec<f64>,
    pub passed: bool,
    /// `int(D_t)` is empty: every integral over `D_t` vanishes identically.
    pub degenerate_interior: bool,
    pub notes: Vec<String>,
}

fn decays_below(seq: &[f64], target: f64, floor: f64) -> bool {
    let monotone = seq.windows(2).all(|w| w[1] <= w[0] * 1.1 + floor);
    monotone && seq.last().map(|v| *v <= target + floor).unwrap_or(true)
}

pub fn verify_e2_e3(
    k: &KernelSpec,
    d: &DomainDescriptor,
    q: &QuadratureScheme,
    radii: &[f64],
    r_ladder: &[f64],
) -> Result<E23Report> {
    if d.dim != k.dim {
        return Err(Error::dim(k.dim, d.dim, "domain vs kernel dimension"));
    }
    let e1 = verify_e1(k, q, &[vec![0.0; k.dim]])?;
    let trunc = e1.truncation.clone();
    let i_t = e1.sup_estimate;
    let floor = 4.0 * f64::EPSILON * i_t.abs();
    let mut rays = Vec::new();
    for ray in d.interior_rays() {
        let pts: Vec<Vec<f64>> = radii.iter().map(|r| ray.at(*r)).collect();
        let dt_integral: Vec<f64> = pts
            .iter()
            .map(|t| domain_integral(k, d, t, &trunc, q, None))
            .collect::<Result<_>>()?;
        let e2: Vec<f64> = dt_integral.iter().map(|v| i_t - v).collect();
        let e3: Vec<Vec<f64>> = r_ladder
            .iter()
            .map(|rho| {
                pts.iter()
                    .map(|t| domain_integral(k, d, t, &trunc, q, Some(*rho)))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let e2_pass = decays_below(&e2, q.eps_tail, floor);
        // the ball swallows D_t until the ray leaves it
        let e3_pass = e3
            .iter()
            .zip(r_ladder)
            .map(|(s, rho)| {
                let start = radii.iter().position(|r| r > rho).unwrap_or(radii.len().saturating_sub(1));
                decays_below(&s[start..], q.eps_tail, floor)
            })
            .collect();
        rays.push(E23Ray {
            ray,
            radii: radii.to_vec(),
            dt_integral,
            e2,
            e3,
            e2_pass,
            e3_pass,
        });
    }
    let degenerate_interior = d.is_null();
    let passed = !degenerate_interior && rays.iter().all(|r| r.e2_pass && r.e3_pass.iter().all(|p| *p));
    let mut notes = Vec::new();
    if degenerate_interior {
        notes.push("int(D_t) = empty: domain is Lebesgue-null, all integrals over D_t vanish".into());
    }
    if matches!(d.kind, DomainKind::FullSpace | DomainKind::CausalCone) {
        notes.push("D_t = I_t: the complement integral vanishes identically".into());
    }
    Ok(E23Report {
        rays,
        r_ladder: r_ladder.to_vec(),
        passed,
        degenerate_interior,
        notes,
    })
}

/// `(h * F)(t; x) = int h(sigma) F(t - sigma; x) d sigma` on a symmetric truncated box.
#[derive(Debug, Clone)]
pub struct ConvolutionField<'a, F: Field + ?Sized> {
    pub h: &'a KernelSpec,
    pub f: &'a F,
    pub scheme: QuadratureScheme,
    table: KernelTable,
    check_table: Option<KernelTable>,
    pub err_bound: f64,
    h_l1: f64,
    f_sup: f64,
}

impl<'a, F: Field + ?Sized> ConvolutionField<'a, F> {
    pub fn new(h: &'a KernelSpec, f: &'a F, scheme: &QuadratureScheme) -> Result<Self> {
        if h.dim != f.arity_time() {
            return Err(Error::dim(f.arity_time(), h.dim, "convolution kernel dimension"));
        }
        if h.singular {
            return Err(Error::SingularKernel);
        }
        let f_sup = f
            .sup_bound()
            .ok_or_else(|| Error::MissingBound(format!("{} has no sup_bound", f.label())))?;
        let orthants = 2f64.powi(h.dim as i32);
        let trunc = h.truncation(scheme.eps_tail, orthants);
        let rbox: Vec<(f64, f64)> = trunc.iter().map(|t| (-t, *t)).collect();
        let table = KernelTable::build(h, &rbox, scheme)?;
        let check_table = if h.has_analytic_tail() {
            None
        } else {
            let rbox2: Vec<(f64, f64)> = trunc.iter().map(|t| (-2.0 * t, 2.0 * t)).collect();
            Some(KernelTable::build(h, &rbox2, scheme)?)
        };
        let h_l1 = table.wk.iter().map(|w| w.abs()).sum::<f64>();
        Ok(ConvolutionField {
            h,
            f,
            scheme: scheme.clone(),
            table,
            check_table,
            err_bound: scheme.eps_tail * f_sup,
            h_l1,
            f_sup,
        })
    }

    fn apply(table: &KernelTable, f: &F, t: &[f64], x: &[f64], out: &mut [f64]) -> Result<()> {
        let q = out.len();
        let mut acc = vec![Neumaier::default(); q];
        let mut buf = vec![0.0; q];
        let mut p = vec![0.0; t.len()];
        for i in 0..table.len() {
            let s = table.node(i);
            p.iter_mut().zip(t.iter().zip(s)).for_each(|(a, (ti, si))| *a = ti - si);
            f.eval_into(&p, x, &mut buf)?;
            for c in 0..q {
                acc[c].add(table.wk[i] * buf[c]);
            }
        }
        out.iter_mut().zip(&acc).for_each(|(o, a)| *o = a.sum());
        Ok(())
    }
}

impl<F: Field + ?Sized> Field for ConvolutionField<'_, F> {
    fn label(&self) -> String {
        format!("{}*{}", self.h.label(), self.f.label())
    }
    fn arity_time(&self) -> usize {
        self.f.arity_time()
    }
    fn arity_state(&self) -> usize {
        self.f.arity_state()
    }
    fn out_dim(&self) -> usize {
        self.f.out_dim()
    }
    fn sup_bound(&self) -> Option<f64> {
        Some(self.h_l1 * self.f_sup + self.err_bound)
    }
    fn eval_into(&self, t: &[f64], x: &[f64], out: &mut [f64]) -> Result<()> {
        Self::apply(&self.table, self.f, t, x, out)?;
        if let Some(ct) = &self.check_table {
            let mut wide = vec![0.0; out.len()];
            Self::apply(ct, self.f, t, x, &mut wide)?;
            let rel = out
                .iter()
                .zip(&wide)
                .map(|(a, b)| (a - b).abs() / (1e-300 + self.f_sup * self.h_l1))
                .fold(0.0f64, f64::max);
            if rel > DOUBLING_TOL {
                return Err(Error::TruncationUnstable { rel });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvolveValue {
    pub values: Vec<f64>,
    pub err_bound: f64,
}

pub fn whole_space_convolve<F: Field + ?Sized>(
    h: &KernelSpec,
    f: &F,
    t: &[f64],
    x: &[f64],
    q: &QuadratureScheme,
) -> Result<ConvolveValue> {
    let field = ConvolutionField::new(h, f, q)?;
    let mut values = vec![0.0; f.out_dim()];
    field.eval_into(t, x, &mut values)?;
    Ok(ConvolveValue {
        values,
        err_bound: field.err_bound,
    })
}

/// The causal operator `Gamma f(t) = int_{D_t} K(t - eta) f(eta) d eta`.
#[derive(Debug, Clone)]
pub struct GammaOperator {
    pub kernel: KernelSpec,
    pub domain: DomainDescriptor,
    pub scheme: QuadratureScheme,
    pub truncation: Vec<f64>,
    /// `sup_t int |K|` over the cone.
    pub abs_mass: f64,
    cone_table: Option<KernelTable>,
}

impl GammaOperator {
    pub fn new(k: &KernelSpec, d: &DomainDescriptor, q: &QuadratureScheme) -> Result<Self> {
        if k.singular {
            return Err(Error::SingularKernel);
        }
        if d.dim != k.dim {
            return Err(Error::dim(k.dim, d.dim, "domain vs kernel dimension"));
        }
        let e1 = verify_e1(&k.abs(), q, &[vec![0.0; k.dim]]).map_err(|e| match e {
            Error::TruncationUnstable { .. } | Error::NegativeKernel { .. } => {
                Error::E1Violated(format!("{e}"))
            }
            other => other,
        })?;
        let cone_table = if d.is_full_cone() {
            let rbox: Vec<(f64, f64)> = e1.truncation.iter().map(|t| (0.0, *t)).collect();
            Some(KernelTable::build(k, &rbox, q)?)
        } else {
            None
        };
        Ok(GammaOperator {
            kernel: k.clone(),
            domain: d.clone(),
            scheme: q.clone(),
            truncation: e1.truncation,
            abs_mass: e1.sup_estimate,
            cone_table,
        })
    }

    /// `Gamma f(t)` for a field without state.
    pub fn apply_at<F: Field + ?Sized>(&self, f: &F, t: &[f64], out: &mut [f64]) -> Result<()> {
        if self.domain.is_null() {
            out.iter_mut().for_each(|o| *o = 0.0);
            return Ok(());
        }
        let owned;
        let table = match &self.cone_table {
            Some(t) => t,
            None => match self.domain.r_box(t, &self.truncation) {
                None => {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    return Ok(());
                }
                Some(rbox) => {
                    owned = KernelTable::build(&self.kernel, &rbox, &self.scheme)?;
                    &owned
                }
            },
        };
        let q = out.len();
        let mut acc = vec![Neumaier::default(); q];
        let mut buf = vec![0.0; q];
        let mut eta = vec![0.0; t.len()];
        let indicator = matches!(self.domain.kind, DomainKind::Indicator(_));
        for i in 0..table.len() {
            let r = table.node(i);
            eta.iter_mut().zip(t.iter().zip(r)).for_each(|(e, (ti, ri))| *e = ti - ri);
            if indicator && !self.domain.contains(&eta) {
                continue;
            }
            f.eval_into(&eta, &[], &mut buf)?;
            for c in 0..q {
                acc[c].add(table.wk[i] * buf[c]);
            }
        }
        out.iter_mut().zip(&acc).for_each(|(o, a)| *o = a.sum());
        Ok(())
    }

    /// Same integral in `eta` coordinates, nodes mapped by `eta = t - r`.
    pub fn apply_direct<F: Field + ?Sized>(&self, f: &F, t: &[f64]) -> Result<Vec<f64>> {
        let q = f.out_dim();
        let Some(rbox) = self.domain.r_box(t, &self.truncation) else {
            return Ok(vec![0.0; q]);
        };
        if self.domain.is_null() {
            return Ok(vec![0.0; q]);
        }
        let axes: Vec<_> = rbox
            .iter()
            .map(|(a, b)| composite_aligned(self.scheme.rule, self.scheme.panels_per_unit, *a, *b))
            .collect();
        let mut acc = vec![Neumaier::default(); q];
        let mut buf = vec![0.0; q];
        let n = t.len();
        let total: usize = axes.iter().map(|a| a.len()).product();
        let mut eta = vec![0.0; n];
        let mut diff = vec![0.0; n];
        for flat in 0..total {
            let mut rem = flat;
            let mut w = 1.0;
            for d in (0..n).rev() {
                let i = rem % axes[d].len();
                rem /= axes[d].len();
                eta[d] = t[d] - axes[d].x[i];
                w *= axes[d].w[i];
            }
            diff.iter_mut().zip(t.iter().zip(&eta)).for_each(|(r, (a, b))| *r = a - b);
            let kv = self.kernel.eval(&diff)?;
            if kv == 0.0 {
                continue;
            }
            f.eval_into(&eta, &[], &mut buf)?;
            for c in 0..q {
                acc[c].add(w * kv * buf[c]);
            }
        }
        Ok(acc.iter().map(|a| a.sum()).collect())
    }

    pub fn field<'a, F: Field + ?Sized>(&'a self, f: &'a F) -> Result<GammaField<'a, F>> {
        if f.arity_state() != 0 {
            return Err(Error::dim(0, f.arity_state(), "Gamma acts on functions without state"));
        }
        if f.arity_time() != self.kernel.dim {
            return Err(Error::dim(self.kernel.dim, f.arity_time(), "Gamma input dimension"));
        }
        Ok(GammaField { op: self, f })
    }
}

/// `Gamma f` evaluated pointwise by quadrature.
pub struct GammaField<'a, F: Field + ?Sized> {
    pub op: &'a GammaOperator,
    pub f: &'a F,
}

impl<F: Field + ?Sized> GammaField<'_, F> {
    pub fn err_bound(&self) -> f64 {
        self.op.scheme.eps_tail * self.f.sup_bound().unwrap_or(1.0)
    }
}

impl<F: Field + ?Sized> Field for GammaField<'_, F> {
    fn label(&self) -> String {
        format!("Gamma[{}]", self.f.label())
    }
    fn arity_time(&self) -> usize {
        self.f.arity_time()
    }
    fn arity_state(&self) -> usize {
        0
    }
    fn out_dim(&self) -> usize {
        self.f.out_dim()
    }
    fn sup_bound(&self) -> Option<f64> {
        self.f.sup_bound().map(|b| b * self.op.abs_mass + self.err_bound())
    }
    fn eval_into(&self, t: &[f64], _x: &[f64], out: &mut [f64]) -> Result<()> {
        self.op.apply_at(self.f, t, out)
    }
}

/// Sampled function on a grid with per-point error bounds.
#[derive(Debug, Clone, Serialize)]
pub struct SampledGrid {
    pub window: GridWindow,
    pub out_dim: usize,
    /// `[(point, component)]`.
    pub values: Vec<f64>,
    pub err_bound: Vec<f64>,
}

impl SampledGrid {
    pub fn value(&self, point: usize, comp: usize) -> f64 {
        self.values[point * self.out_dim + comp]
    }
}

pub fn gamma_apply<F: Field + ?Sized>(
    k: &KernelSpec,
    d: &DomainDescriptor,
    f: &F,
    window: &GridWindow,
    q: &QuadratureScheme,
) -> Result<SampledGrid> {
    let op = GammaOperator::new(k, d, q)?;
    let field = op.field(f)?;
    let qd = f.out_dim();
    let rows: Vec<Vec<f64>> = (0..window.len())
        .into_par_iter()
        .map(|i| {
            let mut out = vec![0.0; qd];
            field.eval_into(&window.point(i), &[], &mut out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let err = field.err_bound();
    Ok(SampledGrid {
        window: window.clone(),
        out_dim: qd,
        values: rows.into_iter().flatten().collect(),
        err_bound: vec![err; window.len()],
    })
}

/// Exponential decay helper for configs: `C exp(-sum a_i |r_i|)`.
pub fn exponential_decay(rates: Vec<f64>, constant: f64) -> Decay {
    Decay::Exponential { rates, constant }
}

/// Outcome of running the limit test on `Gamma f`.
#[derive(Debug, Clone, Serialize)]
pub struct GammaAaReport {
    pub domain: String,
    pub kernel_l1: f64,
    pub tol_effective: f64,
    pub bochner: Option<crate::sequence_limits::BochnerVerdict>,
    pub decompose: Option<crate::sequence_limits::DecomposeReport>,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Bochner test of `Gamma f` on the full cone, the asymptotic split on orthants.
///
/// `decompose` supplies rays and radii for the orthant case; interior rays
/// of the domain are used when it is `None`.
pub fn gamma_preserves_aa_check<F: Field + ?Sized>(
    k: &KernelSpec,
    d: &DomainDescriptor,
    f: &F,
    probe: &crate::sequence_limits::LimitProbe,
    decompose: Option<&crate::sequence_limits::DecomposeOptions>,
    q: &QuadratureScheme,
) -> Result<GammaAaReport> {
    use crate::sequence_limits::{asymptotic_decompose, bochner_test, DecomposeOptions};
    let op = GammaOperator::new(k, d, q)?;
    let field = op.field(f)?;
    let f_sup = match f.sup_bound() {
        Some(b) => b,
        None => {
            let samples = f.eval_window(&probe.window, &vec![0.0; probe.window.dim], &[vec![]])?;
            samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        }
    };
    let kernel_l1 = op.abs_mass;
    let tol_effective = probe.tol_limit * kernel_l1.max(f64::MIN_POSITIVE) + 2.0 * q.eps_tail * f_sup;
    let mut notes = Vec::new();
    if op.domain.is_full_cone() {
        let mut p = probe.clone();
        p.tol_limit = tol_effective;
        p.tol_subseq = probe.tol_subseq.max(p.tol_limit);
        let v = match bochner_test(&field, &p) {
            Ok(v) => v,
            Err(Error::NoConvergentSubsequence { survivors, note }) => {
                notes.push(format!("no convergent subsequence ({survivors} survivor(s)): {note}"));
                return Ok(GammaAaReport {
                    domain: format!("{:?}", op.domain.kind),
                    kernel_l1,
                    tol_effective,
                    bochner: None,
                    decompose: None,
                    passed: false,
                    notes,
                });
            }
            Err(e) => return Err(e),
        };
        Ok(GammaAaReport {
            domain: format!("{:?}", op.domain.kind),
            kernel_l1,
            tol_effective,
            passed: v.passed,
            bochner: Some(v),
            decompose: None,
            notes,
        })
    } else {
        let mut opts = decompose
            .cloned()
            .unwrap_or_else(|| DecomposeOptions::new(op.domain.interior_rays()));
        opts.tol = opts.tol.max(tol_effective);
        let r = asymptotic_decompose(&field, &probe.sequence, &probe.state_set, &probe.window, &opts)?;
        if let Some(w) = &r.witness_ray {
            notes.push(format!(
                "asymptotic part does not vanish along ray origin {:?} direction {:?}",
                w.origin, w.dir
            ));
        }
        Ok(GammaAaReport {
            domain: format!("{:?}", op.domain.kind),
            kernel_l1,
            tol_effective,
            passed: r.passed,
            bochner: None,
            decompose: Some(r),
            notes,
        })
    }
}

/// Writes `t1,...,tn,value,err_bound` rows (`value1..valueq` for vector output).
pub fn write_grid_csv<W: std::io::Write>(grid: &SampledGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=grid.window.dim).map(|i| format!("t{i}")).collect();
    if grid.out_dim == 1 {
        header.push("value".into());
    } else {
        header.extend((1..=grid.out_dim).map(|i| format!("value{i}")));
    }
    header.push("err_bound".into());
    w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
    let mut p = vec![0.0; grid.window.dim];
    for i in 0..grid.window.len() {
        grid.window.point_into(i, &mut p);
        let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        row.extend((0..grid.out_dim).map(|c| grid.value(i, c).to_string()));
        row.push(grid.err_bound[i].to_string());
        w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn grid_csv_string(grid: &SampledGrid) -> Result<String> {
    let mut buf = Vec::new();
    write_grid_csv(grid, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Samples any field on a window with a uniform error bound.
pub fn sample_grid<F: Field + ?Sized>(f: &F, window: &GridWindow, err_bound: f64) -> Result<SampledGrid> {
    let values = f.eval_window(window, &vec![0.0; window.dim], &[vec![0.0; f.arity_state()]])?;
    Ok(SampledGrid {
        window: window.clone(),
        out_dim: f.out_dim(),
        values,
        err_bound: vec![err_bound; window.len()],
    })
}

/// Multilinear interpolation of the grid; points outside the window are an error.
impl Field for SampledGrid {
    fn label(&self) -> String {
        "sampled_grid".into()
    }
    fn arity_time(&self) -> usize {
        self.window.dim
    }
    fn arity_state(&self) -> usize {
        0
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn sup_bound(&self) -> Option<f64> {
        None
    }
    fn eval_into(&self, t: &[f64], _x: &[f64], out: &mut [f64]) -> Result<()> {
        let w = &self.window;
        if t.len() != w.dim {
            return Err(Error::dim(w.dim, t.len(), "grid interpolation point"));
        }
        let n = w.dim;
        let m = w.points_per_axis;
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for d in 0..n {
            let h = w.spacing(d);
            let s = (t[d] - w.lo[d]) / h;
            if !(s >= -1e-9 && s <= (m - 1) as f64 + 1e-9) {
                return Err(Error::PreconditionFailed(format!(
                    "point {t:?} lies outside the sampled window [{:?}, {:?}]",
                    w.lo, w.hi
                )));
            }
            let i = (s.floor().max(0.0) as usize).min(m - 2);
            base[d] = i;
            frac[d] = (s - i as f64).clamp(0.0, 1.0);
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut flat = 0;
            for d in 0..n {
                let up = corner >> d & 1;
                weight *= if up == 1 { frac[d] } else { 1.0 - frac[d] };
                flat = flat * m + base[d] + up;
            }
            if weight == 0.0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o += weight * self.value(flat, c);
            }
        }
        Ok(())
    }
}

/// `int_{R^n} K`, for nonnegative kernels, stable under truncation doubling.
pub fn whole_space_mass(k: &KernelSpec, q: &QuadratureScheme) -> Result<f64> {
    let orthants = 2f64.powi(k.dim as i32);
    let trunc = k.truncation(q.eps_tail, orthants);
    let mass = |scale: f64| -> Result<f64> {
        let rbox: Vec<(f64, f64)> = trunc.iter().map(|t| (-scale * t, scale * t)).collect();
        let table = KernelTable::build(k, &rbox, q)?;
        check_nonnegative(k, &table)?;
        Ok(table.mass())
    };
    let v = mass(1.0)?;
    let v2 = mass(2.0)?;
    let change = rel_change(v, v2);
    if change > DOUBLING_TOL {
        return Err(Error::TruncationUnstable { rel: change });
    }
    Ok(v)
}
