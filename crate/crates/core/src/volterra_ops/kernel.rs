use crate::error::{Error, Result};
use crate::function_core::{Expr, FunctionExpr, Unary};
use serde::Serialize;

/// Decay descriptor of a kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "decay", rename_all = "snake_case")]
pub enum Decay {
    /// `|K(r)| <= constant * exp(-sum rates_i |r_i|)`.
    Exponential { rates: Vec<f64>, constant: f64 },
    /// Integrable with negligible mass beyond `tail_radius` per axis.
    IntegrableDeclared { tail_radius: f64 },
    None,
}

/// Radius used when a kernel declares no decay; stability is then checked by doubling.
pub const UNDECLARED_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub dim: usize,
    pub expr: FunctionExpr,
    pub decay: Decay,
    pub singular: bool,
}

impl KernelSpec {
    pub fn new(expr: FunctionExpr, decay: Decay) -> Result<Self> {
        if expr.arity_state != 0 || expr.out_dim() != 1 {
            return Err(Error::dim(1, expr.out_dim(), "kernel must be scalar with no state argument"));
        }
        let dim = expr.arity_time;
        if let Decay::Exponential { rates, constant } = &decay {
            if rates.len() != dim {
                return Err(Error::dim(dim, rates.len(), "exponential decay rates"));
            }
            if rates.iter().any(|a| !(*a > 0.0)) || !(*constant >= 0.0) {
                return Err(Error::PreconditionFailed("decay rates must be positive and the constant nonnegative".into()));
            }
        }
        let k = KernelSpec {
            dim,
            expr,
            decay,
            singular: false,
        };
        k.check_decay_bound()?;
        Ok(k)
    }

    pub fn parse(label: &str, dim: usize, text: &str, decay: Decay) -> Result<Self> {
        Self::new(FunctionExpr::parse(label, dim, 0, text)?, decay)
    }

    pub fn label(&self) -> &str {
        &self.expr.label
    }

    pub fn eval(&self, r: &[f64]) -> Result<f64> {
        self.expr.eval_scalar(r, &[])
    }

    /// Sample `|K|` against the declared exponential envelope on a grid over `[-8, 8]^n`.
    pub fn check_decay_bound(&self) -> Result<()> {
        let Decay::Exponential { rates, constant } = &self.decay else {
            return Ok(());
        };
        let m: usize = if self.dim == 1 { 161 } else if self.dim == 2 { 41 } else { 11 };
        let total = m.pow(self.dim as u32);
        let mut r = vec![0.0; self.dim];
        for flat in 0..total {
            let mut rem = flat;
            for d in 0..self.dim {
                r[d] = -8.0 + 16.0 * (rem % m) as f64 / (m - 1) as f64;
                rem /= m;
            }
            let v = match self.eval(&r) {
                Ok(v) => v.abs(),
                Err(Error::SingularPoint(_)) => continue,
                Err(e) => return Err(e),
            };
            let env = constant * (-r.iter().zip(rates).map(|(x, a)| a * x.abs()).sum::<f64>()).exp();
            if v > env * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::PreconditionFailed(format!(
                    "kernel {} exceeds its declared envelope at {r:?}: {v} > {env}",
                    self.label()
                )));
            }
        }
        Ok(())
    }

    /// Per-axis truncation radius with analytic tail mass `<= eps` over
    /// `orthants` orthants (1 for a cone, `2^n` for the whole space).
    pub fn truncation(&self, eps: f64, orthants: f64) -> Vec<f64> {
        match &self.decay {
            Decay::Exponential { rates, constant } => {
                let n = self.dim as f64;
                let inv: f64 = rates.iter().map(|a| 1.0 / a).product();
                let c = n * constant * inv * orthants;
                rates
                    .iter()
                    .map(|a| if c <= eps { 0.0 } else { (c / eps).ln() / a })
                    .collect()
            }
            Decay::IntegrableDeclared { tail_radius } => vec![*tail_radius; self.dim],
            Decay::None => vec![UNDECLARED_RADIUS; self.dim],
        }
    }

    /// Analytic tail mass beyond `radius` over one orthant, if known.
    pub fn tail_bound(&self, radius: &[f64]) -> Option<f64> {
        match &self.decay {
            Decay::Exponential { rates, constant } => {
                let inv: f64 = rates.iter().map(|a| 1.0 / a).product();
                Some(
                    rates
                        .iter()
                        .zip(radius)
                        .map(|(a, t)| constant * inv * (-a * t).exp())
                        .sum(),
                )
            }
            _ => None,
        }
    }

    pub fn has_analytic_tail(&self) -> bool {
        matches!(self.decay, Decay::Exponential { .. })
    }

    /// `|K|`, with the same decay descriptor.
    pub fn abs(&self) -> KernelSpec {
        let mut expr = self.expr.clone();
        expr.body = vec![Expr::un(Unary::Abs, self.expr.body[0].clone())];
        expr.label = format!("|{}|", self.expr.label);
        KernelSpec {
            dim: self.dim,
            expr,
            decay: self.decay.clone(),
            singular: self.singular,
        }
    }

    /// `exp(-sum alpha_i |r_i|)` with its exact exponential envelope.
    pub fn exponential(rates: &[f64]) -> Result<Self> {
        let terms: Vec<Expr> = rates
            .iter()
            .enumerate()
            .map(|(i, a)| Expr::mul(vec![Expr::c(-a), Expr::un(Unary::Abs, Expr::t(i))]))
            .collect();
        let f = FunctionExpr::new("k_exp", rates.len(), 0, vec![Expr::exp(Expr::add(terms))])?;
        Self::new(
            f,
            Decay::Exponential {
                rates: rates.to_vec(),
                constant: 1.0,
            },
        )
    }
}

/// Built-in kernels by catalogue name.
pub fn catalogue_kernel(name: &str) -> Result<KernelSpec> {
    let labelled = |mut k: KernelSpec, label: &str| {
        k.expr.label = label.to_string();
        k
    };
    match name {
        "k_exp" => Ok(labelled(KernelSpec::exponential(&[1.0, 1.0])?, "k_exp")),
        "k_abs" => Ok(labelled(KernelSpec::exponential(&[1.0, 1.0])?, "k_abs")),
        "k_wave" => KernelSpec::parse(
            "k_wave",
            2,
            "(neg (exp (mul -0.5 (add (abs t0) (abs t1)))))",
            Decay::Exponential {
                rates: vec![0.5, 0.5],
                constant: 1.0,
            },
        ),
        // e^{-r^2/4} <= e^{1 - |r|}
        "k_heat" => KernelSpec::parse(
            "k_heat",
            1,
            "(div (exp (div (mul t0 t0) -4)) (sqrt (mul 4 pi)))",
            Decay::Exponential {
                rates: vec![1.0],
                constant: std::f64::consts::E / (4.0 * std::f64::consts::PI).sqrt(),
            },
        ),
        "lambda_bi" => KernelSpec::parse(
            "lambda_bi",
            1,
            "(mul 0.25 (exp (neg (abs t0))))",
            Decay::Exponential {
                rates: vec![1.0],
                constant: 0.25,
            },
        ),
        _ => Err(Error::Config(format!("unknown catalogue kernel `{name}`"))),
    }
}
