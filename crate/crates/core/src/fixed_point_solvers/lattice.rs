use crate::error::{Error, Result};
use crate::function_core::GridWindow;
use crate::numerics::quadrature::{gauss_legendre, QuadratureScheme, Rule};
use crate::volterra_ops::{DomainDescriptor, DomainKind, KernelSpec};
use rayon::prelude::*;

/// Window plus the clamped extension below it.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLayout {
    pub window: GridWindow,
    pub h: Vec<f64>,
    /// Extension nodes below `lo` per axis.
    pub ext: Vec<usize>,
    /// Lattice index of `lo` counted from the orthant corner (orthant domains only).
    pub corner_offset: Option<Vec<usize>>,
    pub sizes: Vec<usize>,
}

impl LatticeLayout {
    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for d in (0..self.sizes.len()).rev() {
            out[d] = flat % self.sizes[d];
            flat /= self.sizes[d];
        }
    }

    pub fn coord(&self, idx: &[usize], out: &mut [f64]) {
        for d in 0..idx.len() {
            let k = idx[d] as isize - self.ext[d] as isize;
            out[d] = if k == self.window.points_per_axis as isize - 1 {
                self.window.hi[d]
            } else {
                self.window.lo[d] + k as f64 * self.h[d]
            };
        }
    }

    /// Flat window index of the nearest window node.
    pub fn clamp_to_window(&self, idx: &[usize]) -> usize {
        let n = self.window.points_per_axis;
        let mut flat = 0;
        for d in 0..idx.len() {
            let k = idx[d].saturating_sub(self.ext[d]).min(n - 1);
            flat = flat * n + k;
        }
        flat
    }

    pub fn is_clamped(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.ext).any(|(i, e)| i < e)
    }

    /// Flat extended index of a window node.
    pub fn window_to_ext(&self, w: usize) -> usize {
        let n = self.window.points_per_axis;
        let mut rem = w;
        let mut idx = vec![0; self.sizes.len()];
        for d in (0..idx.len()).rev() {
            idx[d] = rem % n + self.ext[d];
            rem /= n;
        }
        idx.iter().zip(&self.sizes).fold(0, |acc, (i, s)| acc * s + i)
    }
}

/// Product-integration discretization of `t -> int_{D_t} K(t - eta) phi(eta) d eta`
/// on a uniform lattice: `phi` is interpolated multilinearly between lattice
/// nodes and integrated exactly against the kernel cell moments.
#[derive(Debug, Clone)]
pub struct LatticeOperator {
    pub dim: usize,
    pub h: Vec<f64>,
    /// Cells per axis covering the truncation radius.
    pub cells: Vec<usize>,
    pub domain: DomainDescriptor,
    pub truncation: Vec<f64>,
    /// `tables[mask]`: node weights where bit `i` of `mask` marks a cut at node `j_i`.
    tables: Vec<Vec<f64>>,
    strides: Vec<usize>,
    /// `sum |w|` of the uncut table.
    pub abs_weight_sum: f64,
}

fn cell_rule(rule: Rule) -> (Vec<f64>, Vec<f64>) {
    let order = match rule {
        Rule::GaussLegendre(o) => o.max(2),
        Rule::Trapezoid => 8,
    };
    let (x, w) = gauss_legendre(order);
    (x.iter().map(|v| 0.5 * (v + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
}

impl LatticeOperator {
    pub fn new(k: &KernelSpec, d: &DomainDescriptor, h: &[f64], q: &QuadratureScheme) -> Result<Self> {
        let n = k.dim;
        if d.dim != n || h.len() != n {
            return Err(Error::dim(n, d.dim.min(h.len()), "lattice dimension"));
        }
        if k.singular {
            return Err(Error::SingularKernel);
        }
        match &d.kind {
            DomainKind::FullSpace | DomainKind::CausalCone | DomainKind::Lines { .. } => {}
            DomainKind::Orthant { signs, .. } if signs.iter().all(|s| *s > 0) => {}
            _ => {
                return Err(Error::PreconditionFailed(
                    "lattice solvers support the causal cone and orthants [c, inf)".into(),
                ))
            }
        }
        if h.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::PreconditionFailed("lattice spacing must be positive".into()));
        }
        let truncation = k.truncation(q.eps_tail, 1.0);
        let cells: Vec<usize> = truncation
            .iter()
            .zip(h)
            .map(|(t, hh)| ((t / hh) - 1e-9).ceil().max(1.0) as usize)
            .collect();
        let (gx, gw) = cell_rule(q.rule);
        let m = gx.len();
        let n_cells: usize = cells.iter().product();
        let corners = 1usize << n;
        // moments[cell][a]: int_cell K(r) prod_i (a_i ? s_i : 1 - s_i)
        let moments: Vec<Vec<f64>> = (0..n_cells)
            .into_par_iter()
            .map(|flat| {
                let mut cell = vec![0usize; n];
                let mut rem = flat;
                for dd in (0..n).rev() {
                    cell[dd] = rem % cells[dd];
                    rem /= cells[dd];
                }
                let mut out = vec![0.0; corners];
                let mut r = vec![0.0; n];
                let mut s = vec![0.0; n];
                let total = m.pow(n as u32);
                for node in 0..total {
                    let mut rem = node;
                    let mut w = 1.0;
                    for dd in (0..n).rev() {
                        let i = rem % m;
                        rem /= m;
                        s[dd] = gx[i];
                        r[dd] = (cell[dd] as f64 + gx[i]) * h[dd];
                        w *= gw[i] * h[dd];
                    }
                    let kv = k.eval(&r)? * w;
                    for (a, o) in out.iter_mut().enumerate() {
                        let mut basis = 1.0;
                        for dd in 0..n {
                            basis *= if a >> dd & 1 == 1 { s[dd] } else { 1.0 - s[dd] };
                        }
                        *o += kv * basis;
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let sizes: Vec<usize> = cells.iter().map(|c| c + 1).collect();
        let mut strides = vec![1usize; n];
        for dd in (0..n.saturating_sub(1)).rev() {
            strides[dd] = strides[dd + 1] * sizes[dd + 1];
        }
        let n_nodes: usize = sizes.iter().product();
        let mut tables = vec![vec![0.0; n_nodes]; corners];
        let mut j = vec![0usize; n];
        for (mask, table) in tables.iter_mut().enumerate() {
            for (flat, slot) in table.iter_mut().enumerate() {
                let mut rem = flat;
                for dd in (0..n).rev() {
                    j[dd] = rem % sizes[dd];
                    rem /= sizes[dd];
                }
                let mut acc = 0.0;
                'corner: for a in 0..corners {
                    let mut cflat = 0;
                    for dd in 0..n {
                        let ad = a >> dd & 1;
                        if mask >> dd & 1 == 1 && ad == 0 {
                            continue 'corner;
                        }
                        if j[dd] < ad || j[dd] - ad >= cells[dd] {
                            continue 'corner;
                        }
                        cflat = cflat * cells[dd] + (j[dd] - ad);
                    }
                    acc += moments[cflat][a];
                }
                *slot = acc;
            }
        }
        let abs_weight_sum = tables[0].iter().map(|w| w.abs()).sum();
        Ok(LatticeOperator {
            dim: n,
            h: h.to_vec(),
            cells,
            domain: d.clone(),
            truncation,
            tables,
            strides,
            abs_weight_sum,
        })
    }

    /// Operator for the spacing of `window`.
    pub fn for_window(k: &KernelSpec, d: &DomainDescriptor, window: &GridWindow, q: &QuadratureScheme) -> Result<Self> {
        let h: Vec<f64> = (0..window.dim).map(|i| window.spacing(i)).collect();
        Self::new(k, d, &h, q)
    }

    pub fn matches_spacing(&self, window: &GridWindow) -> bool {
        (0..window.dim).all(|i| (window.spacing(i) - self.h[i]).abs() <= 1e-12 * self.h[i].max(1.0))
    }

    pub fn layout(&self, window: &GridWindow) -> Result<LatticeLayout> {
        if window.dim != self.dim {
            return Err(Error::dim(self.dim, window.dim, "window vs lattice dimension"));
        }
        if !self.matches_spacing(window) {
            return Err(Error::LatticeMisaligned(format!(
                "window spacing differs from the lattice spacing {:?}",
                self.h
            )));
        }
        let (ext, corner_offset) = match &self.domain.kind {
            DomainKind::Orthant { corner, .. } => {
                let mut ext = Vec::with_capacity(self.dim);
                let mut off = Vec::with_capacity(self.dim);
                for i in 0..self.dim {
                    let qf = (window.lo[i] - corner[i]) / self.h[i];
                    let qi = qf.round();
                    if (qf - qi).abs() > 1e-7 || qi < 0.0 {
                        return Err(Error::LatticeMisaligned(format!(
                            "window lo {} is not a lattice point of the orthant with corner {} and spacing {}",
                            window.lo[i], corner[i], self.h[i]
                        )));
                    }
                    let qi = qi as usize;
                    off.push(qi);
                    ext.push(qi.min(self.cells[i]));
                }
                (ext, Some(off))
            }
            DomainKind::Lines { .. } => (vec![0; self.dim], None),
            _ => (self.cells.clone(), None),
        };
        let sizes = ext.iter().map(|e| e + window.points_per_axis).collect();
        Ok(LatticeLayout {
            window: window.clone(),
            h: self.h.clone(),
            ext,
            corner_offset,
            sizes,
        })
    }

    /// Cut index per axis for the window node with multi-index `w`.
    fn cuts(&self, layout: &LatticeLayout, w: &[usize]) -> Vec<usize> {
        match &layout.corner_offset {
            Some(off) => (0..self.dim).map(|i| self.cells[i].min(off[i] + w[i])).collect(),
            None => self.cells.clone(),
        }
    }

    /// `sum_j W_j phi(t_w - j h)` with `phi` given on the extended lattice.
    pub fn apply(&self, layout: &LatticeLayout, phi: &[f64], w_flat: usize) -> f64 {
        if self.domain.is_null() {
            return 0.0;
        }
        let n = self.dim;
        let w = layout.window.multi_index(w_flat);
        let m = self.cuts(layout, &w);
        let base: Vec<usize> = (0..n).map(|i| w[i] + layout.ext[i]).collect();
        let mut ext_strides = vec![1usize; n];
        for dd in (0..n.saturating_sub(1)).rev() {
            ext_strides[dd] = ext_strides[dd + 1] * layout.sizes[dd + 1];
        }
        let last = n - 1;
        let mut j = vec![0usize; n];
        let mut acc = 0.0;
        loop {
            let mut mask = 0usize;
            let mut t_off = 0usize;
            let mut p_off = 0usize;
            for dd in 0..last {
                if j[dd] == m[dd] {
                    mask |= 1 << dd;
                }
                t_off += j[dd] * self.strides[dd];
                p_off += (base[dd] - j[dd]) * ext_strides[dd];
            }
            let ml = m[last];
            let row = &self.tables[mask];
            let p_last = p_off + base[last];
            for jl in 0..ml {
                acc += row[t_off + jl] * phi[p_last - jl];
            }
            acc += self.tables[mask | 1 << last][t_off + ml] * phi[p_last - ml];
            // odometer over the leading axes
            let mut dd = last;
            loop {
                if dd == 0 {
                    return acc;
                }
                dd -= 1;
                j[dd] += 1;
                if j[dd] <= m[dd] {
                    break;
                }
                j[dd] = 0;
            }
        }
    }

    /// Largest `sum |W_j|` landing on clamped nodes, over window nodes.
    pub fn clamped_mass(&self, layout: &LatticeLayout) -> f64 {
        if self.domain.is_null() {
            return 0.0;
        }
        let n = self.dim;
        let mut worst = 0.0f64;
        let mut j = vec![0usize; n];
        let mut idx = vec![0usize; n];
        for w_flat in 0..layout.window.len() {
            let w = layout.window.multi_index(w_flat);
            let m = self.cuts(layout, &w);
            let total: usize = m.iter().map(|v| v + 1).product();
            let mut mass = 0.0;
            for flat in 0..total {
                let mut rem = flat;
                let mut mask = 0;
                let mut t_off = 0;
                for dd in (0..n).rev() {
                    j[dd] = rem % (m[dd] + 1);
                    rem /= m[dd] + 1;
                    if j[dd] == m[dd] {
                        mask |= 1 << dd;
                    }
                    t_off += j[dd] * self.strides[dd];
                    idx[dd] = w[dd] + layout.ext[dd] - j[dd];
                }
                if layout.is_clamped(&idx) {
                    mass += self.tables[mask][t_off].abs();
                }
            }
            worst = worst.max(mass);
        }
        worst
    }

    /// Total weight at the uncut truncation, an estimate of the kernel mass.
    pub fn total_weight(&self) -> f64 {
        self.tables[0].iter().sum()
    }
}
