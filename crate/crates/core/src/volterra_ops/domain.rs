use crate::error::{Error, Result};
use crate::function_core::FunctionExpr;
use crate::sequence_limits::Ray;

/// Integration domain `D`; `D_t` is its intersection with `(-inf, t_1] x ... x (-inf, t_n]`.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    FullSpace,
    CausalCone,
    /// Product of half-lines `[c_i, inf)` (sign +1) or `(-inf, c_i]` (sign -1).
    Orthant { corner: Vec<f64>, signs: Vec<i8> },
    /// Finite union of lines `point + s * dir`; Lebesgue-null.
    Lines { point: Vec<f64>, dirs: Vec<Vec<f64>> },
    /// 0/1 indicator.
    Indicator(FunctionExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainDescriptor {
    pub dim: usize,
    pub kind: DomainKind,
}

impl DomainDescriptor {
    pub fn full_space(dim: usize) -> Self {
        DomainDescriptor {
            dim,
            kind: DomainKind::FullSpace,
        }
    }

    pub fn causal_cone(dim: usize) -> Self {
        DomainDescriptor {
            dim,
            kind: DomainKind::CausalCone,
        }
    }

    pub fn orthant(corner: Vec<f64>, signs: Vec<i8>) -> Result<Self> {
        if corner.len() != signs.len() {
            return Err(Error::dim(corner.len(), signs.len(), "orthant signs"));
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::PreconditionFailed("orthant signs must be +1 or -1".into()));
        }
        Ok(DomainDescriptor {
            dim: corner.len(),
            kind: DomainKind::Orthant { corner, signs },
        })
    }

    /// `[0, inf)^n`.
    pub fn first_orthant(dim: usize) -> Self {
        Self::orthant(vec![0.0; dim], vec![1; dim]).expect("valid orthant")
    }

    pub fn lines(point: Vec<f64>, dirs: Vec<Vec<f64>>) -> Result<Self> {
        if dirs.is_empty() {
            return Err(Error::EmptyList("line directions".into()));
        }
        if dirs.iter().any(|d| d.len() != point.len()) {
            return Err(Error::dim(point.len(), 0, "line direction"));
        }
        Ok(DomainDescriptor {
            dim: point.len(),
            kind: DomainKind::Lines { point, dirs },
        })
    }

    pub fn indicator(f: FunctionExpr) -> Result<Self> {
        if f.out_dim() != 1 || f.arity_state != 0 {
            return Err(Error::dim(1, f.out_dim(), "indicator must be scalar"));
        }
        Ok(DomainDescriptor {
            dim: f.arity_time,
            kind: DomainKind::Indicator(f),
        })
    }

    /// Null sets integrate to zero by construction.
    pub fn is_null(&self) -> bool {
        matches!(self.kind, DomainKind::Lines { .. })
    }

    pub fn is_full_cone(&self) -> bool {
        matches!(self.kind, DomainKind::FullSpace | DomainKind::CausalCone)
    }

    pub fn contains(&self, eta: &[f64]) -> bool {
        match &self.kind {
            DomainKind::FullSpace | DomainKind::CausalCone => true,
            DomainKind::Orthant { corner, signs } => eta
                .iter()
                .zip(corner.iter().zip(signs))
                .all(|(e, (c, s))| if *s > 0 { e >= c } else { e <= c }),
            DomainKind::Lines { point, dirs } => dirs.iter().any(|d| {
                let dd: f64 = d.iter().map(|v| v * v).sum();
                let s: f64 = eta.iter().zip(point).zip(d).map(|((e, p), v)| (e - p) * v).sum::<f64>() / dd;
                eta.iter()
                    .zip(point)
                    .zip(d)
                    .all(|((e, p), v)| (e - p - s * v).abs() <= 1e-12 * (1.0 + e.abs()))
            }),
            DomainKind::Indicator(f) => f.eval_scalar(eta, &[]).map(|v| v > 0.5).unwrap_or(false),
        }
    }

    /// Box of `r = t - eta` values covering `D_t`, clipped to `[0, trunc]`;
    /// `None` when the box is empty.
    pub fn r_box(&self, t: &[f64], trunc: &[f64]) -> Option<Vec<(f64, f64)>> {
        let mut out = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let (mut lo, mut hi) = (0.0f64, trunc[i]);
            if let DomainKind::Orthant { corner, signs } = &self.kind {
                if signs[i] > 0 {
                    hi = hi.min(t[i] - corner[i]);
                } else {
                    lo = lo.max(t[i] - corner[i]);
                }
            }
            if !(hi > lo) {
                return None;
            }
            out.push((lo, hi));
        }
        Some(out)
    }

    /// Whether `D_t` has nonempty interior.
    pub fn interior_nonempty(&self, t: &[f64]) -> bool {
        match &self.kind {
            DomainKind::FullSpace | DomainKind::CausalCone => true,
            DomainKind::Orthant { .. } => self.r_box(t, &vec![f64::INFINITY; self.dim]).is_some(),
            DomainKind::Lines { .. } => false,
            DomainKind::Indicator(_) => true,
        }
    }

    /// Rays into the interior of `D` used by the asymptotic checks.
    pub fn interior_rays(&self) -> Vec<Ray> {
        let n = self.dim;
        match &self.kind {
            DomainKind::Orthant { corner, signs } => {
                let s: Vec<f64> = signs.iter().map(|v| f64::from(*v)).collect();
                let mut rays = vec![Ray::new(corner.clone(), s.clone())];
                if n == 2 {
                    rays.push(Ray::new(corner.clone(), vec![2.0 * s[0], s[1]]));
                    rays.push(Ray::new(corner.clone(), vec![s[0], 2.0 * s[1]]));
                }
                rays
            }
            DomainKind::Lines { point, dirs } => dirs.iter().map(|d| Ray::new(point.clone(), d.clone())).collect(),
            _ => vec![
                Ray::new(vec![0.0; n], vec![1.0; n]),
                Ray::new(vec![0.0; n], vec![-1.0; n]),
            ],
        }
    }

    /// Rays parallel to the coordinate axes at fixed offset `x0` from the corner.
    pub fn axis_rays(&self, x0: f64) -> Vec<Ray> {
        let n = self.dim;
        let (corner, signs) = match &self.kind {
            DomainKind::Orthant { corner, signs } => (corner.clone(), signs.iter().map(|s| f64::from(*s)).collect()),
            _ => (vec![0.0; n], vec![1.0; n]),
        };
        (0..n)
            .map(|axis| {
                let origin: Vec<f64> = corner.iter().zip(&signs).map(|(c, s)| c + s * x0).collect();
                let mut dir = vec![0.0; n];
                dir[axis] = signs[axis];
                Ray::new(origin, dir)
            })
            .collect()
    }
}
