use crate::error::{Error, Result};
use crate::numerics::rng::Stream;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Compact box in `R^n` sampled on a uniform tensor grid including endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWindow {
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points_per_axis: usize,
}

impl GridWindow {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, points_per_axis: usize) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::dim(lo.len(), hi.len(), "window lo/hi"));
        }
        if lo.is_empty() {
            return Err(Error::dim(1, 0, "window dimension"));
        }
        if points_per_axis < 2 {
            return Err(Error::PreconditionFailed("points_per_axis must be at least 2".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::PreconditionFailed("window needs finite lo < hi on every axis".into()));
        }
        Ok(GridWindow {
            dim: lo.len(),
            lo,
            hi,
            points_per_axis,
        })
    }

    /// Cube `[-r, r]^n`.
    pub fn cube(dim: usize, r: f64, points_per_axis: usize) -> Result<Self> {
        Self::new(vec![-r; dim], vec![r; dim], points_per_axis)
    }

    /// Cube of half-width `r` around `center`.
    pub fn centered(center: &[f64], r: f64, points_per_axis: usize) -> Result<Self> {
        Self::new(
            center.iter().map(|c| c - r).collect(),
            center.iter().map(|c| c + r).collect(),
            points_per_axis,
        )
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.points_per_axis - 1) as f64
    }

    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.points_per_axis {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.axis_coord(axis, i)).collect()
    }

    /// Multi-index of the flat row-major index (last axis fastest).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for d in (0..self.dim).rev() {
            idx[d] = flat % self.points_per_axis;
            flat /= self.points_per_axis;
        }
        idx
    }

    pub fn point_into(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for d in (0..self.dim).rev() {
            out[d] = self.axis_coord(d, rem % self.points_per_axis);
            rem /= self.points_per_axis;
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        self.point_into(flat, &mut p);
        p
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn shifted(&self, shift: &[f64]) -> GridWindow {
        GridWindow {
            dim: self.dim,
            lo: self.lo.iter().zip(shift).map(|(a, s)| a + s).collect(),
            hi: self.hi.iter().zip(shift).map(|(a, s)| a + s).collect(),
            points_per_axis: self.points_per_axis,
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *x >= *a && *x <= *b)
    }
}

/// Bounded state set `B` with a deterministic sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundedKind {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Finite { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedSetSpec {
    pub dim: usize,
    pub kind: BoundedKind,
    pub sample_count: usize,
}

impl BoundedSetSpec {
    /// The single empty state, for functions without a state argument.
    pub fn none() -> Self {
        BoundedSetSpec {
            dim: 0,
            kind: BoundedKind::Finite { points: vec![vec![]] },
            sample_count: 1,
        }
    }

    pub fn ball(center: Vec<f64>, radius: f64, sample_count: usize) -> Result<Self> {
        if radius < 0.0 {
            return Err(Error::PreconditionFailed("ball radius must be nonnegative".into()));
        }
        Self::checked(center.len(), BoundedKind::Ball { center, radius }, sample_count)
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>, sample_count: usize) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::dim(lo.len(), hi.len(), "box lo/hi"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::PreconditionFailed("box needs lo <= hi".into()));
        }
        Self::checked(lo.len(), BoundedKind::Box { lo, hi }, sample_count)
    }

    pub fn finite(points: Vec<Vec<f64>>, sample_count: usize) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).ok_or_else(|| Error::EmptyList("finite state set".into()))?;
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::dim(dim, 0, "finite state set points"));
        }
        Self::checked(dim, BoundedKind::Finite { points }, sample_count)
    }

    fn checked(dim: usize, kind: BoundedKind, sample_count: usize) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::PreconditionFailed("sample_count must be at least 1".into()));
        }
        Ok(BoundedSetSpec { dim, kind, sample_count })
    }

    /// `sample_count` deterministic samples; identical for identical seeds.
    pub fn samples(&self, seed: u64) -> Vec<Vec<f64>> {
        let stream = Stream::new(seed, 0x5354_4154);
        match &self.kind {
            BoundedKind::Finite { points } => (0..self.sample_count).map(|i| points[i % points.len()].clone()).collect(),
            BoundedKind::Box { lo, hi } => (0..self.sample_count)
                .map(|i| {
                    (0..self.dim)
                        .map(|d| stream.uniform_in((i * self.dim + d) as u64, lo[d], hi[d]))
                        .collect()
                })
                .collect(),
            BoundedKind::Ball { center, radius } => {
                let mut counter = 0u64;
                (0..self.sample_count)
                    .map(|_| loop {
                        let v: Vec<f64> = (0..self.dim)
                            .map(|_| {
                                counter += 1;
                                stream.uniform_in(counter, -1.0, 1.0)
                            })
                            .collect();
                        if v.iter().map(|a| a * a).sum::<f64>() <= 1.0 {
                            break v.iter().zip(center).map(|(a, c)| c + radius * a).collect();
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim {
            return false;
        }
        match &self.kind {
            BoundedKind::Ball { center, radius } => {
                p.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt() <= radius * (1.0 + 1e-12)
            }
            BoundedKind::Box { lo, hi } => p.iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| x >= a && x <= b),
            BoundedKind::Finite { points } => points.iter().any(|q| q.as_slice() == p),
        }
    }
}

/// Unbounded scalar sequence generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ScalarSource {
    /// `start + k * step`.
    Arithmetic { start: f64, step: f64 },
    /// `start * ratio^k`.
    Geometric { start: f64, ratio: f64 },
    /// Uniform in `T_k / 2 <= |a| <= T_k`, `T_k = t0 + growth * k`, optionally
    /// rounded to a nonzero multiple of `quantum`.
    RandomUniform {
        t0: f64,
        growth: f64,
        quantum: Option<f64>,
    },
}

impl ScalarSource {
    pub fn value(&self, k: usize, stream: &Stream) -> f64 {
        match self {
            ScalarSource::Arithmetic { start, step } => start + k as f64 * step,
            ScalarSource::Geometric { start, ratio } => start * ratio.powi(k as i32),
            ScalarSource::RandomUniform { t0, growth, quantum } => {
                let tk = t0 + growth * k as f64;
                let mag = stream.uniform_in(k as u64, 0.5 * tk, tk);
                let a = if stream.coin(k as u64) { mag } else { -mag };
                match quantum {
                    Some(q) if *q > 0.0 => {
                        let m = (a / q).round();
                        let m = if m == 0.0 { a.signum() } else { m };
                        m * q
                    }
                    _ => a,
                }
            }
        }
    }

    pub fn is_unbounded(&self) -> bool {
        match self {
            ScalarSource::Arithmetic { step, .. } => *step != 0.0,
            ScalarSource::Geometric { start, ratio } => *start != 0.0 && ratio.abs() > 1.0,
            ScalarSource::RandomUniform { growth, .. } => *growth > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `(a, a, ..., a)`.
    Diagonal { source: ScalarSource },
    /// `a * e_axis`.
    Axis { axis: usize, source: ScalarSource },
    /// Independent coordinates rounded to integers.
    IntegerLattice { source: ScalarSource },
    /// Independent coordinates.
    Full { source: ScalarSource },
    /// A fixed list, cycled.
    Explicit { vectors: Vec<Vec<f64>> },
    /// Concatenation of two families.
    Product {
        first: Box<SequenceFamily>,
        second: Box<SequenceFamily>,
    },
}

/// Generator of translate sequences in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFamily {
    pub ambient_dim: usize,
    pub kind: FamilyKind,
    pub seed: u64,
}

impl SequenceFamily {
    pub fn new(ambient_dim: usize, kind: FamilyKind, seed: u64) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::dim(1, 0, "family ambient_dim"));
        }
        match &kind {
            FamilyKind::Axis { axis, .. } if *axis >= ambient_dim => {
                return Err(Error::dim(ambient_dim, axis + 1, "family axis"));
            }
            FamilyKind::Explicit { vectors } => {
                if vectors.is_empty() {
                    return Err(Error::EmptyList("explicit family has no vectors".into()));
                }
                if let Some(v) = vectors.iter().find(|v| v.len() != ambient_dim) {
                    return Err(Error::dim(ambient_dim, v.len(), "explicit family vector"));
                }
            }
            FamilyKind::Product { first, second } => {
                if first.ambient_dim + second.ambient_dim != ambient_dim {
                    return Err(Error::dim(ambient_dim, first.ambient_dim + second.ambient_dim, "product family"));
                }
            }
            _ => {}
        }
        Ok(SequenceFamily { ambient_dim, kind, seed })
    }

    pub fn diagonal(n: usize, source: ScalarSource, seed: u64) -> Self {
        Self::new(n, FamilyKind::Diagonal { source }, seed).expect("valid diagonal family")
    }

    pub fn axis(n: usize, axis: usize, source: ScalarSource, seed: u64) -> Result<Self> {
        Self::new(n, FamilyKind::Axis { axis, source }, seed)
    }

    pub fn explicit(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let n = vectors.first().map(|v| v.len()).unwrap_or(0);
        Self::new(n.max(1), FamilyKind::Explicit { vectors }, 0)
    }

    pub fn product(first: SequenceFamily, second: SequenceFamily) -> Self {
        let n = first.ambient_dim + second.ambient_dim;
        let seed = first.seed;
        Self::new(
            n,
            FamilyKind::Product {
                first: Box::new(first),
                second: Box::new(second),
            },
            seed,
        )
        .expect("product dimensions add up")
    }

    fn stream(&self, coord: u64) -> Stream {
        Stream::new(self.seed, 0x4641_4d00 + coord)
    }

    /// The `k`-th element (0-based).
    pub fn element(&self, k: usize) -> Vec<f64> {
        let n = self.ambient_dim;
        match &self.kind {
            FamilyKind::Diagonal { source } => vec![source.value(k, &self.stream(0)); n],
            FamilyKind::Axis { axis, source } => {
                let mut v = vec![0.0; n];
                v[*axis] = source.value(k, &self.stream(0));
                v
            }
            FamilyKind::IntegerLattice { source } => {
                (0..n).map(|d| source.value(k, &self.stream(d as u64)).round()).collect()
            }
            FamilyKind::Full { source } => (0..n).map(|d| source.value(k, &self.stream(d as u64))).collect(),
            FamilyKind::Explicit { vectors } => vectors[k % vectors.len()].clone(),
            FamilyKind::Product { first, second } => {
                let mut v = first.element(k);
                v.extend(second.element(k));
                v
            }
        }
    }

    pub fn elements(&self, depth: usize) -> Vec<Vec<f64>> {
        (0..depth).map(|k| self.element(k)).collect()
    }

    /// Condition that every subsequence is unbounded.
    pub fn is_unbounded(&self) -> bool {
        match &self.kind {
            FamilyKind::Diagonal { source }
            | FamilyKind::Axis { source, .. }
            | FamilyKind::IntegerLattice { source }
            | FamilyKind::Full { source } => source.is_unbounded(),
            FamilyKind::Explicit { .. } => false,
            FamilyKind::Product { first, second } => first.is_unbounded() && second.is_unbounded(),
        }
    }

    /// Whether `v` lies in the pattern set of this family.
    pub fn in_pattern(&self, v: &[f64]) -> bool {
        if v.len() != self.ambient_dim {
            return false;
        }
        match &self.kind {
            FamilyKind::Diagonal { .. } => v.iter().all(|a| *a == v[0]),
            FamilyKind::Axis { axis, .. } => v.iter().enumerate().all(|(i, a)| i == *axis || *a == 0.0),
            FamilyKind::IntegerLattice { .. } => v.iter().all(|a| a.fract() == 0.0),
            FamilyKind::Full { .. } => v.iter().all(|a| a.is_finite()),
            FamilyKind::Explicit { vectors } => vectors.iter().any(|w| w.as_slice() == v),
            FamilyKind::Product { first, second } => {
                first.in_pattern(&v[..first.ambient_dim]) && second.in_pattern(&v[first.ambient_dim..])
            }
        }
    }

    /// Unit vector along which the family's translates move.
    pub fn scan_direction(&self) -> Vec<f64> {
        let n = self.ambient_dim;
        let raw = match &self.kind {
            FamilyKind::Axis { axis, .. } => {
                let mut v = vec![0.0; n];
                v[*axis] = 1.0;
                v
            }
            FamilyKind::Explicit { vectors } => vectors
                .iter()
                .find(|v| v.iter().any(|a| *a != 0.0))
                .cloned()
                .unwrap_or_else(|| vec![1.0; n]),
            FamilyKind::Product { first, second } => {
                let mut v = first.scan_direction();
                v.extend(second.scan_direction());
                v
            }
            _ => vec![1.0; n],
        };
        let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
        raw.into_iter().map(|a| a / norm).collect()
    }

    /// Subsequence as an explicit family (closure under subsequences).
    pub fn subsequence(&self, indices: &[usize]) -> Result<Self> {
        Self::explicit(indices.iter().map(|&k| self.element(k)).collect())
    }

    pub fn describe(&self) -> String {
        fn src(s: &ScalarSource) -> String {
            match s {
                ScalarSource::Arithmetic { start, step } => format!("arithmetic(start={start}, step={step})"),
                ScalarSource::Geometric { start, ratio } => format!("geometric(start={start}, ratio={ratio})"),
                ScalarSource::RandomUniform { t0, growth, quantum } => match quantum {
                    Some(q) => format!("random_uniform(t0={t0}, growth={growth}, quantum={q})"),
                    None => format!("random_uniform(t0={t0}, growth={growth})"),
                },
            }
        }
        match &self.kind {
            FamilyKind::Diagonal { source } => format!("diagonal[{}] {}", self.ambient_dim, src(source)),
            FamilyKind::Axis { axis, source } => format!("axis{axis}[{}] {}", self.ambient_dim, src(source)),
            FamilyKind::IntegerLattice { source } => format!("integer_lattice[{}] {}", self.ambient_dim, src(source)),
            FamilyKind::Full { source } => format!("full[{}] {}", self.ambient_dim, src(source)),
            FamilyKind::Explicit { vectors } => format!("explicit[{}] {} vectors", self.ambient_dim, vectors.len()),
            FamilyKind::Product { first, second } => format!("product({} x {})", first.describe(), second.describe()),
        }
    }
}

/// Smallest-error near common period `T = 2 pi k / freqs[0]`, `1 <= k <= max_k`:
/// returns `(T, err)` where `err` is the largest phase defect (radians) of
/// `T * freqs[j]` against a multiple of `2 pi`.
pub fn near_common_period(freqs: &[f64], max_k: u64) -> (f64, f64) {
    assert!(!freqs.is_empty() && freqs[0] > 0.0);
    let base = 2.0 * PI / freqs[0];
    let mut best = (base, f64::INFINITY);
    for k in 1..=max_k {
        let mut err = 0.0f64;
        for w in &freqs[1..] {
            let turns = k as f64 * w / freqs[0];
            err = err.max((turns - turns.round()).abs());
        }
        let err = 2.0 * PI * err;
        if err < best.1 {
            best = (k as f64 * base, err);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts_and_endpoints() {
        let w = GridWindow::new(vec![-1.0, 0.0], vec![1.0, 2.0], 5).unwrap();
        assert_eq!(w.len(), 25);
        assert_eq!(w.point(0), vec![-1.0, 0.0]);
        assert_eq!(w.point(24), vec![1.0, 2.0]);
        assert_eq!(w.point(1), vec![-1.0, 0.5]);
    }

    #[test]
    fn random_source_lies_in_annulus() {
        let s = ScalarSource::RandomUniform {
            t0: 10.0,
            growth: 5.0,
            quantum: None,
        };
        let st = Stream::new(1, 2);
        for k in 0..100 {
            let a = s.value(k, &st).abs();
            let tk = 10.0 + 5.0 * k as f64;
            assert!(a >= 0.5 * tk && a <= tk);
        }
    }

    #[test]
    fn near_period_of_sqrt2() {
        let (t, err) = near_common_period(&[1.0, 2f64.sqrt()], 20000);
        assert!((t / (2.0 * PI) - 13860.0).abs() < 1e-6);
        assert!(err < 2e-4);
    }
}
