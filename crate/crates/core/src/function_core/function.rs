use super::expr::{parse_body, print_body, Env, Expr, Unary, Var};
use crate::error::{Error, Result};

/// A closed-form map `(t, x) -> F(t; x)` from `R^n x R^p` to `R^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionExpr {
    pub label: String,
    pub arity_time: usize,
    pub arity_state: usize,
    pub body: Vec<Expr>,
    pub lipschitz_in_state: Option<f64>,
    pub sup_bound: Option<f64>,
}

/// Relative slack on Lipschitz spot checks.
pub const EPS_LIP: f64 = 1e-6;

impl FunctionExpr {
    pub fn new(
        label: impl Into<String>,
        arity_time: usize,
        arity_state: usize,
        body: Vec<Expr>,
    ) -> Result<Self> {
        if arity_time == 0 {
            return Err(Error::dim(1, 0, "arity_time must be at least 1"));
        }
        if body.is_empty() {
            return Err(Error::EmptyList("function body has no components".into()));
        }
        for e in &body {
            e.check_scoping()?;
            let (nt, np, _) = e.arities();
            if nt > arity_time {
                return Err(Error::dim(arity_time, nt, "body uses a time variable beyond arity_time"));
            }
            if np > arity_state {
                return Err(Error::dim(arity_state, np, "body uses a state variable beyond arity_state"));
            }
        }
        Ok(FunctionExpr {
            label: label.into(),
            arity_time,
            arity_state,
            body,
            lipschitz_in_state: None,
            sup_bound: None,
        })
    }

    /// Scalar function of time only.
    pub fn scalar(label: impl Into<String>, arity_time: usize, e: Expr) -> Result<Self> {
        Self::new(label, arity_time, 0, vec![e])
    }

    pub fn parse(
        label: impl Into<String>,
        arity_time: usize,
        arity_state: usize,
        text: &str,
    ) -> Result<Self> {
        Self::new(label, arity_time, arity_state, parse_body(text)?)
    }

    pub fn constant(value: f64, arity_time: usize) -> Self {
        FunctionExpr::new(format!("const({value})"), arity_time, 0, vec![Expr::c(value)])
            .expect("constant is well formed")
            .with_sup_bound(value.abs())
    }

    pub fn with_sup_bound(mut self, b: f64) -> Self {
        self.sup_bound = Some(b);
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz_in_state = Some(l);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn out_dim(&self) -> usize {
        self.body.len()
    }

    pub fn text(&self) -> String {
        print_body(&self.body)
    }

    pub fn has_jumps(&self) -> bool {
        self.body.iter().any(|e| e.has_jumps())
    }

    fn check_dims(&self, t: &[f64], x: &[f64]) -> Result<()> {
        if t.len() != self.arity_time {
            return Err(Error::dim(self.arity_time, t.len(), format!("time argument of {}", self.label)));
        }
        if x.len() != self.arity_state {
            return Err(Error::dim(self.arity_state, x.len(), format!("state argument of {}", self.label)));
        }
        if t.iter().chain(x).any(|v| !v.is_finite()) {
            return Err(Error::SingularPoint(format!("non-finite argument to {}", self.label)));
        }
        Ok(())
    }

    /// Evaluate into `out`; enforces the declared sup bound in the max norm.
    pub fn eval_into(&self, t: &[f64], x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dims(t, x)?;
        if out.len() != self.out_dim() {
            return Err(Error::dim(self.out_dim(), out.len(), "output buffer"));
        }
        let mut env = Env::new(t, x);
        let mut norm = 0.0f64;
        for (o, e) in out.iter_mut().zip(&self.body) {
            *o = e.eval_env(&mut env)?;
            norm = norm.max(o.abs());
        }
        if let Some(b) = self.sup_bound {
            if norm > b * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::BoundViolation { value: norm, bound: b });
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.out_dim()];
        self.eval_into(t, x, &mut out)?;
        Ok(out)
    }

    /// First output component.
    pub fn eval_scalar(&self, t: &[f64], x: &[f64]) -> Result<f64> {
        if self.out_dim() == 1 {
            let mut out = [0.0];
            self.eval_into(t, x, &mut out)?;
            Ok(out[0])
        } else {
            Ok(self.eval(t, x)?[0])
        }
    }

    pub fn is_regular_at(&self, t: &[f64], x: &[f64], eps: f64) -> bool {
        self.body.iter().all(|e| e.is_regular_at(t, x, eps))
    }

    fn map_body(&self, f: impl Fn(&Expr) -> Expr) -> Vec<Expr> {
        self.body.iter().map(f).collect()
    }

    /// `t -> F(t + shift; x)`.
    pub fn shifted(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.arity_time {
            return Err(Error::dim(self.arity_time, shift.len(), "shift"));
        }
        let body = self.map_body(|e| {
            e.map_vars(&|v| match v {
                Var::Time(i) => Expr::add(vec![Expr::t(i), Expr::c(shift[i])]),
                other => Expr::Var(other),
            })
        });
        let mut g = FunctionExpr::new(format!("{}(.+tau)", self.label), self.arity_time, self.arity_state, body)?;
        g.sup_bound = self.sup_bound;
        g.lipschitz_in_state = self.lipschitz_in_state;
        Ok(g)
    }

    /// `alpha * F`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let body = self.map_body(|e| Expr::mul(vec![Expr::c(alpha), e.clone()]));
        let mut g = FunctionExpr::new(format!("{alpha}*{}", self.label), self.arity_time, self.arity_state, body)
            .expect("scaling preserves arities");
        g.sup_bound = self.sup_bound.map(|b| alpha.abs() * b);
        g.lipschitz_in_state = self.lipschitz_in_state.map(|l| alpha.abs() * l);
        g
    }

    /// `alpha * F + beta * G`.
    pub fn linear_combination(alpha: f64, f: &Self, beta: f64, g: &Self) -> Result<Self> {
        if f.arity_time != g.arity_time || f.arity_state != g.arity_state {
            return Err(Error::dim(f.arity_time, g.arity_time, "linear combination arities"));
        }
        if f.out_dim() != g.out_dim() {
            return Err(Error::dim(f.out_dim(), g.out_dim(), "linear combination out_dim"));
        }
        let body = f
            .body
            .iter()
            .zip(&g.body)
            .map(|(a, b)| {
                Expr::add(vec![
                    Expr::mul(vec![Expr::c(alpha), a.clone()]),
                    Expr::mul(vec![Expr::c(beta), b.clone()]),
                ])
            })
            .collect();
        let mut h = FunctionExpr::new(
            format!("{alpha}*{}+{beta}*{}", f.label, g.label),
            f.arity_time,
            f.arity_state,
            body,
        )?;
        h.sup_bound = match (f.sup_bound, g.sup_bound) {
            (Some(a), Some(b)) => Some(alpha.abs() * a + beta.abs() * b),
            _ => None,
        };
        h.lipschitz_in_state = match (f.lipschitz_in_state, g.lipschitz_in_state) {
            (Some(a), Some(b)) => Some(alpha.abs() * a + beta.abs() * b),
            _ => None,
        };
        Ok(h)
    }

    fn time_offset(e: &Expr, axis: usize, d: f64) -> Expr {
        e.map_vars(&|v| match v {
            Var::Time(i) if i == axis => Expr::add(vec![Expr::t(i), Expr::c(d)]),
            other => Expr::Var(other),
        })
    }

    /// Central difference `(F(t + h e_i) - F(t - h e_i)) / 2h`.
    pub fn central_difference(&self, axis: usize, h: f64) -> Result<Self> {
        if axis >= self.arity_time {
            return Err(Error::dim(self.arity_time, axis + 1, "difference axis"));
        }
        if h <= 0.0 {
            return Err(Error::PreconditionFailed(format!("finite-difference step {h} must be positive")));
        }
        let body = self.map_body(|e| {
            Expr::div(
                Expr::sub(Self::time_offset(e, axis, h), Self::time_offset(e, axis, -h)),
                Expr::c(2.0 * h),
            )
        });
        FunctionExpr::new(format!("d{axis}[{}]", self.label), self.arity_time, self.arity_state, body)
    }

    /// Five-point style Laplacian `sum_i (F(t+he_i) - 2F(t) + F(t-he_i)) / h^2`.
    pub fn laplacian(&self, h: f64) -> Result<Self> {
        if h <= 0.0 {
            return Err(Error::PreconditionFailed(format!("finite-difference step {h} must be positive")));
        }
        let n = self.arity_time;
        let body = self.map_body(|e| {
            let mut terms = Vec::with_capacity(2 * n + 1);
            for axis in 0..n {
                terms.push(Self::time_offset(e, axis, h));
                terms.push(Self::time_offset(e, axis, -h));
            }
            terms.push(Expr::mul(vec![Expr::c(-2.0 * n as f64), e.clone()]));
            Expr::div(Expr::add(terms), Expr::c(h * h))
        });
        FunctionExpr::new(format!("lap[{}]", self.label), n, self.arity_state, body)
    }
}

/// Green kernel `G(t, s; x) = exp(int_s^t phi) * M e^{-delta (t - s)} x` for `t >= s`,
/// extended by zero for `t < s`. Time arguments are `(t0, t1) = (t, s)`.
pub fn make_green_kernel(phi: &FunctionExpr, m: f64, delta: f64, state_dim: usize) -> Result<FunctionExpr> {
    let phi_bound = phi
        .sup_bound
        .ok_or_else(|| Error::MissingBound(format!("phi `{}` has no sup_bound", phi.label)))?;
    if phi.arity_time != 1 || phi.out_dim() != 1 || phi.arity_state != 0 {
        return Err(Error::dim(1, phi.arity_time, "phi must be a scalar function of one time variable"));
    }
    if state_dim == 0 {
        return Err(Error::dim(1, 0, "Green kernel state dimension"));
    }
    if !(m > 0.0 && delta > 0.0) {
        return Err(Error::PreconditionFailed(format!("semigroup constants M={m}, delta={delta} must be positive")));
    }
    let var = phi.body[0].arities().2;
    let phi_v = phi.body[0].map_vars(&|v| match v {
        Var::Time(_) => Expr::v(var),
        other => Expr::Var(other),
    });
    let lag = Expr::sub(Expr::t(0), Expr::t(1));
    let factor = Expr::mul(vec![
        Expr::exp(Expr::integral(var, Expr::t(1), Expr::t(0), phi_v)),
        Expr::c(m),
        Expr::exp(Expr::mul(vec![Expr::c(-delta), lag.clone()])),
        Expr::un(Unary::Step, lag),
    ]);
    let body = (0..state_dim)
        .map(|j| Expr::mul(vec![factor.clone(), Expr::x(j)]))
        .collect();
    let mut g = FunctionExpr::new(format!("green[{}]", phi.label), 2, state_dim, body)?;
    if phi_bound <= delta {
        g.lipschitz_in_state = Some(m);
    }
    Ok(g)
}

/// Matrix of products `f_i(t) g_j(s)` on `R^{n+m}`, flattened row-major.
pub fn make_tensor_product(fs: &[FunctionExpr], gs: &[FunctionExpr]) -> Result<FunctionExpr> {
    if fs.is_empty() || gs.is_empty() {
        return Err(Error::EmptyList("tensor product needs non-empty factor lists".into()));
    }
    let n = fs[0].arity_time;
    let m = gs[0].arity_time;
    for f in fs {
        if f.arity_time != n {
            return Err(Error::dim(n, f.arity_time, "left factors must share arity_time"));
        }
    }
    for g in gs {
        if g.arity_time != m {
            return Err(Error::dim(m, g.arity_time, "right factors must share arity_time"));
        }
    }
    for h in fs.iter().chain(gs) {
        if h.out_dim() != 1 {
            return Err(Error::dim(1, h.out_dim(), "tensor factors must be scalar"));
        }
        if h.arity_state != 0 {
            return Err(Error::dim(0, h.arity_state, "tensor factors take no state"));
        }
    }
    let mut body = Vec::with_capacity(fs.len() * gs.len());
    for f in fs {
        for g in gs {
            let gs_shifted = g.body[0].map_vars(&|v| match v {
                Var::Time(i) => Expr::t(i + n),
                other => Expr::Var(other),
            });
            body.push(Expr::mul(vec![f.body[0].clone(), gs_shifted]));
        }
    }
    let labels = |v: &[FunctionExpr]| v.iter().map(|f| f.label.as_str()).collect::<Vec<_>>().join(",");
    let mut out = FunctionExpr::new(format!("tensor[{}|{}]", labels(fs), labels(gs)), n + m, 0, body)?;
    let fb: Option<Vec<f64>> = fs.iter().map(|f| f.sup_bound).collect();
    let gb: Option<Vec<f64>> = gs.iter().map(|g| g.sup_bound).collect();
    if let (Some(fb), Some(gb)) = (fb, gb) {
        let max = |v: Vec<f64>| v.into_iter().fold(0.0f64, f64::max);
        out.sup_bound = Some(max(fb) * max(gb));
    }
    Ok(out)
}

/// Superposition `W(t; x) = G(t; F(t; x))`.
pub fn make_nemytskii(g_outer: &FunctionExpr, f_inner: &FunctionExpr) -> Result<FunctionExpr> {
    if f_inner.out_dim() != g_outer.arity_state {
        return Err(Error::dim(g_outer.arity_state, f_inner.out_dim(), "inner out_dim vs outer arity_state"));
    }
    if f_inner.arity_time != g_outer.arity_time {
        return Err(Error::dim(g_outer.arity_time, f_inner.arity_time, "inner vs outer arity_time"));
    }
    let body = g_outer
        .body
        .iter()
        .map(|e| {
            e.map_vars(&|v| match v {
                Var::State(j) => f_inner.body[j].clone(),
                other => Expr::Var(other),
            })
        })
        .collect();
    let mut w = FunctionExpr::new(
        format!("{}o{}", g_outer.label, f_inner.label),
        f_inner.arity_time,
        f_inner.arity_state,
        body,
    )?;
    w.sup_bound = g_outer.sup_bound;
    if let (Some(lg), Some(lf)) = (g_outer.lipschitz_in_state, f_inner.lipschitz_in_state) {
        w.lipschitz_in_state = Some(lg * lf);
    }
    Ok(w)
}
