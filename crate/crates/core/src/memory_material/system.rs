use crate::error::{Error, Result};
use crate::function_core::FunctionExpr;
use nalgebra::DMatrix;

/// Nonlocal initial term `g(u)` acting on a sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlocal {
    Zero,
    /// `coeff * clamp(mean_t u(t), -clip, clip)` per component, trapezoid mean.
    MeanClip { coeff: f64, clip: f64 },
}

impl Nonlocal {
    /// Lipschitz constant in the sup norm.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Nonlocal::Zero => 0.0,
            Nonlocal::MeanClip { coeff, .. } => coeff.abs(),
        }
    }

    /// `u` is laid out `[(time, component)]` on a uniform grid.
    pub fn apply(&self, u: &[f64], dim: usize) -> Vec<f64> {
        match self {
            Nonlocal::Zero => vec![0.0; dim],
            Nonlocal::MeanClip { coeff, clip } => {
                let n = u.len() / dim;
                (0..dim)
                    .map(|c| {
                        let mean = if n == 1 {
                            u[c]
                        } else {
                            let inner: f64 = (1..n - 1).map(|k| u[k * dim + c]).sum();
                            (inner + 0.5 * (u[c] + u[(n - 1) * dim + c])) / (n - 1) as f64
                        };
                        coeff * mean.clamp(-clip, *clip)
                    })
                    .collect()
            }
        }
    }
}

/// `u' = A u + int_0^t F(t - s) A u(s) ds + f(t, u)`, `u(0) = u0 + g(u)`.
#[derive(Debug, Clone)]
pub struct MemorySystem {
    pub dim: usize,
    pub a: DMatrix<f64>,
    /// Scalar memory profile `F`, so that `B(t) = F(t) A`; `None` means `B = 0`.
    pub memory: Option<FunctionExpr>,
    /// Forcing `(t, u) -> R^d`.
    pub forcing: Option<FunctionExpr>,
    pub nonlocal: Nonlocal,
    pub u0: Vec<f64>,
    /// `-max Re(eig A)`; positive for a stable generator.
    pub gamma: f64,
}

impl MemorySystem {
    pub fn new(a: DMatrix<f64>, memory: Option<FunctionExpr>, u0: Vec<f64>) -> Result<Self> {
        let dim = a.nrows();
        if dim == 0 || a.ncols() != dim {
            return Err(Error::dim(dim, a.ncols(), "A must be square and nonempty"));
        }
        if u0.len() != dim {
            return Err(Error::dim(dim, u0.len(), "u0"));
        }
        if let Some(f) = &memory {
            if f.arity_time != 1 || f.arity_state != 0 || f.out_dim() != 1 {
                return Err(Error::PreconditionFailed(format!(
                    "memory profile {} must be scalar in one time variable",
                    f.label
                )));
            }
        }
        let gamma = -a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(MemorySystem {
            dim,
            a,
            memory,
            forcing: None,
            nonlocal: Nonlocal::Zero,
            u0,
            gamma,
        })
    }

    pub fn with_forcing(mut self, f: FunctionExpr) -> Result<Self> {
        if f.arity_time != 1 || f.arity_state != self.dim || f.out_dim() != self.dim {
            return Err(Error::dim(self.dim, f.arity_state, "forcing maps (t, u) to R^d"));
        }
        self.forcing = Some(f);
        Ok(self)
    }

    pub fn with_nonlocal(mut self, g: Nonlocal) -> Self {
        self.nonlocal = g;
        self
    }

    pub fn is_stable(&self) -> bool {
        self.gamma > 0.0
    }

    pub fn memory_at(&self, t: f64) -> Result<f64> {
        match &self.memory {
            None => Ok(0.0),
            Some(f) => f.eval_scalar(&[t], &[]),
        }
    }

    /// Largest ratio of `max(|F(t)|, |F'(t)|)` to `gamma e^{-gamma t} / (p M)` on a grid of `[0, t_max]`.
    pub fn memory_bound_ratio(&self, m: f64, p: f64, t_max: f64, samples: usize) -> Result<f64> {
        if self.memory.is_none() {
            return Ok(0.0);
        }
        let h = 1e-5;
        let mut worst = 0.0f64;
        for k in 0..samples.max(2) {
            let t = t_max * k as f64 / (samples.max(2) - 1) as f64;
            let f = self.memory_at(t)?.abs();
            let df = ((self.memory_at(t + h)? - self.memory_at((t - h).max(0.0))?) / (t + h - (t - h).max(0.0))).abs();
            let bound = self.gamma * (-self.gamma * t).exp() / (p * m);
            worst = worst.max(f.max(df) / bound);
        }
        Ok(worst)
    }
}

/// `(1/h^2) tridiag(1, -2, 1)` of size `d`.
pub fn laplacian1d(d: usize, h: f64) -> DMatrix<f64> {
    let s = 1.0 / (h * h);
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            -2.0 * s
        } else if i.abs_diff(j) == 1 {
            s
        } else {
            0.0
        }
    })
}

/// `laplacian1d(d, h)` or rows separated by `;` with entries separated by `,` or spaces.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let t = text.trim();
    let bad = |msg: String| Error::Parse { pos: 0, msg };
    if let Some(args) = t.strip_prefix("laplacian1d(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(bad(format!("laplacian1d takes (d, h), got {t:?}")));
        }
        let d: usize = parts[0].parse().map_err(|_| bad(format!("bad size in {t:?}")))?;
        let h: f64 = parts[1].parse().map_err(|_| bad(format!("bad spacing in {t:?}")))?;
        if d == 0 || !(h > 0.0) {
            return Err(bad(format!("laplacian1d needs d >= 1 and h > 0, got {t:?}")));
        }
        return Ok(laplacian1d(d, h));
    }
    let rows: Vec<Vec<f64>> = t
        .split(';')
        .map(|r| {
            r.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad matrix entry {s:?}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(bad(format!("matrix {t:?} is not square")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}
