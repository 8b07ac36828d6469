//! One-dimensional quadrature rules and composite panels.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be at least 1");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Rule applied on each panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Trapezoid,
    GaussLegendre(usize),
}

/// Quadrature scheme: panel rule, panel density and tail tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub rule: Rule,
    pub panels_per_unit: usize,
    pub eps_tail: f64,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        QuadratureScheme {
            rule: Rule::GaussLegendre(8),
            panels_per_unit: 1,
            eps_tail: 1e-10,
        }
    }
}

impl QuadratureScheme {
    pub fn gauss(order: usize, panels_per_unit: usize, eps_tail: f64) -> Self {
        QuadratureScheme {
            rule: Rule::GaussLegendre(order),
            panels_per_unit: panels_per_unit.max(1),
            eps_tail,
        }
    }

    pub fn trapezoid(panels_per_unit: usize, eps_tail: f64) -> Self {
        QuadratureScheme {
            rule: Rule::Trapezoid,
            panels_per_unit: panels_per_unit.max(1),
            eps_tail,
        }
    }

    /// Composite nodes and weights on [a, b].
    ///
    /// Panel boundaries sit on the lattice `a + k / panels_per_unit`, so a kink
    /// at `a` or at an integer offset from `a` is never straddled.
    pub fn nodes(&self, a: f64, b: f64) -> Nodes1d {
        composite(self.rule, self.panels_per_unit, a, b)
    }
}

/// Composite 1D nodes and weights.
#[derive(Debug, Clone, Default)]
pub struct Nodes1d {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Nodes1d {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = Neumaier::default();
        for (x, w) in self.x.iter().zip(&self.w) {
            acc.add(w * f(*x));
        }
        acc.sum()
    }
}

pub fn composite(rule: Rule, panels_per_unit: usize, a: f64, b: f64) -> Nodes1d {
    if b <= a {
        return Nodes1d::default();
    }
    let len = b - a;
    let panels = ((len * panels_per_unit as f64) - 1e-9).ceil().max(1.0) as usize;
    let h = len / panels as f64;
    let mut out = Nodes1d::default();
    match rule {
        Rule::Trapezoid => {
            for k in 0..=panels {
                let x = if k == panels { b } else { a + k as f64 * h };
                let w = if k == 0 || k == panels { 0.5 * h } else { h };
                out.x.push(x);
                out.w.push(w);
            }
        }
        Rule::GaussLegendre(order) => {
            let (gx, gw) = gauss_legendre(order);
            for k in 0..panels {
                let lo = a + k as f64 * h;
                let mid = lo + 0.5 * h;
                for (x, w) in gx.iter().zip(&gw) {
                    out.x.push(mid + 0.5 * h * x);
                    out.w.push(0.5 * h * w);
                }
            }
        }
    }
    out
}

/// Composite nodes on [a, b] with panel boundaries on the lattice `k / panels_per_unit`.
pub fn composite_aligned(rule: Rule, panels_per_unit: usize, a: f64, b: f64) -> Nodes1d {
    if b <= a {
        return Nodes1d::default();
    }
    let ppu = panels_per_unit.max(1) as f64;
    let mut out = Nodes1d::default();
    let mut lo = a;
    let mut k = (a * ppu).floor() + 1.0;
    while lo < b {
        let hi = (k / ppu).min(b);
        if hi > lo {
            let seg = composite(rule, panels_per_unit, lo, hi);
            out.x.extend(seg.x);
            out.w.extend(seg.w);
        }
        lo = hi;
        k += 1.0;
    }
    out
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.c
    }
}

/// Tensor-product integration over a box given per-axis node sets.
pub fn tensor_integrate(axes: &[Nodes1d], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let n = axes.len();
    if axes.iter().any(|a| a.is_empty()) {
        return 0.0;
    }
    let mut idx = vec![0usize; n];
    let mut point = vec![0.0; n];
    let mut acc = Neumaier::default();
    loop {
        let mut w = 1.0;
        for d in 0..n {
            point[d] = axes[d].x[idx[d]];
            w *= axes[d].w[idx[d]];
        }
        acc.add(w * f(&point));
        let mut d = n;
        loop {
            if d == 0 {
                return acc.sum();
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
