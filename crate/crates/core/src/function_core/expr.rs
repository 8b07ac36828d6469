//! Expression trees over time coordinates `t_i`, state coordinates `x_j` and
//! integration variables `v_k`, with a prefix text form.
//!
//! Grammar (one expression per line):
//!
//! ```text
//! expr  := number | "pi" | var | "(" op expr* ")"
//! var   := "t" digits | "x" digits | "v" digits
//! op    := add | sub | mul | div | neg | min | max
//!        | sin | cos | exp | ln | abs | sqrt | atan | tanh | floor | step
//!        | int            ; (int vK lo hi body)
//! ```
//!
//! `floor` is the left-continuous floor `ceil(a) - 1`; `step` is the
//! Heaviside function with `step(0) = 1`.

use crate::error::{Error, Result};
use crate::numerics::quadrature::gauss_legendre;
use std::fmt;
use std::sync::OnceLock;

/// Maximum nesting depth of integration variables.
pub const MAX_BOUND: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Time(usize),
    State(usize),
    Bound(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unary {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Abs,
    Sqrt,
    Atan,
    Tanh,
    Floor,
    Step,
}

impl Unary {
    const ALL: [Unary; 11] = [
        Unary::Neg,
        Unary::Sin,
        Unary::Cos,
        Unary::Exp,
        Unary::Ln,
        Unary::Abs,
        Unary::Sqrt,
        Unary::Atan,
        Unary::Tanh,
        Unary::Floor,
        Unary::Step,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Unary::Neg => "neg",
            Unary::Sin => "sin",
            Unary::Cos => "cos",
            Unary::Exp => "exp",
            Unary::Ln => "ln",
            Unary::Abs => "abs",
            Unary::Sqrt => "sqrt",
            Unary::Atan => "atan",
            Unary::Tanh => "tanh",
            Unary::Floor => "floor",
            Unary::Step => "step",
        }
    }

    fn from_name(s: &str) -> Option<Unary> {
        Unary::ALL.iter().copied().find(|u| u.name() == s)
    }

    fn apply(self, a: f64) -> Result<f64> {
        Ok(match self {
            Unary::Neg => -a,
            Unary::Sin => a.sin(),
            Unary::Cos => a.cos(),
            Unary::Exp => a.exp(),
            Unary::Ln => {
                if a <= 0.0 {
                    return Err(Error::SingularPoint(format!("ln of {a}")));
                }
                a.ln()
            }
            Unary::Abs => a.abs(),
            Unary::Sqrt => {
                if a < 0.0 {
                    return Err(Error::SingularPoint(format!("sqrt of {a}")));
                }
                a.sqrt()
            }
            Unary::Atan => a.atan(),
            Unary::Tanh => a.tanh(),
            Unary::Floor => a.ceil() - 1.0,
            Unary::Step => {
                if a >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Nary {
    Add,
    Mul,
    Min,
    Max,
}

impl Nary {
    pub fn name(self) -> &'static str {
        match self {
            Nary::Add => "add",
            Nary::Mul => "mul",
            Nary::Min => "min",
            Nary::Max => "max",
        }
    }

    fn from_name(s: &str) -> Option<Nary> {
        [Nary::Add, Nary::Mul, Nary::Min, Nary::Max]
            .into_iter()
            .find(|n| n.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(Unary, Box<Expr>),
    Nary(Nary, Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Definite integral of `body` over `var` from `lo` to `hi`.
    Integral {
        var: usize,
        lo: Box<Expr>,
        hi: Box<Expr>,
        body: Box<Expr>,
    },
}

/// Gauss-Legendre rule used for `int` nodes (order 8 per unit panel).
fn int_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

pub(crate) struct Env<'a> {
    pub t: &'a [f64],
    pub x: &'a [f64],
    pub b: [f64; MAX_BOUND],
}

impl<'a> Env<'a> {
    pub fn new(t: &'a [f64], x: &'a [f64]) -> Self {
        Env {
            t,
            x,
            b: [0.0; MAX_BOUND],
        }
    }
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }
    pub fn t(i: usize) -> Expr {
        Expr::Var(Var::Time(i))
    }
    pub fn x(i: usize) -> Expr {
        Expr::Var(Var::State(i))
    }
    pub fn v(i: usize) -> Expr {
        Expr::Var(Var::Bound(i))
    }
    pub fn un(op: Unary, a: Expr) -> Expr {
        Expr::Unary(op, Box::new(a))
    }
    pub fn sin(a: Expr) -> Expr {
        Expr::un(Unary::Sin, a)
    }
    pub fn cos(a: Expr) -> Expr {
        Expr::un(Unary::Cos, a)
    }
    pub fn exp(a: Expr) -> Expr {
        Expr::un(Unary::Exp, a)
    }
    pub fn neg(a: Expr) -> Expr {
        Expr::un(Unary::Neg, a)
    }
    pub fn add(items: Vec<Expr>) -> Expr {
        Expr::Nary(Nary::Add, items)
    }
    pub fn mul(items: Vec<Expr>) -> Expr {
        Expr::Nary(Nary::Mul, items)
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }
    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }
    pub fn integral(var: usize, lo: Expr, hi: Expr, body: Expr) -> Expr {
        Expr::Integral {
            var,
            lo: Box::new(lo),
            hi: Box::new(hi),
            body: Box::new(body),
        }
    }

    pub(crate) fn eval_env(&self, env: &mut Env<'_>) -> Result<f64> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::Time(i)) => env.t[*i],
            Expr::Var(Var::State(i)) => env.x[*i],
            Expr::Var(Var::Bound(i)) => env.b[*i],
            Expr::Unary(op, a) => op.apply(a.eval_env(env)?)?,
            Expr::Nary(op, items) => {
                let mut it = items.iter();
                let mut acc = match it.next() {
                    Some(e) => e.eval_env(env)?,
                    None => {
                        return Ok(match op {
                            Nary::Add => 0.0,
                            Nary::Mul => 1.0,
                            Nary::Min => f64::INFINITY,
                            Nary::Max => f64::NEG_INFINITY,
                        })
                    }
                };
                for e in it {
                    let v = e.eval_env(env)?;
                    acc = match op {
                        Nary::Add => acc + v,
                        Nary::Mul => acc * v,
                        Nary::Min => acc.min(v),
                        Nary::Max => acc.max(v),
                    };
                }
                acc
            }
            Expr::Sub(a, b) => a.eval_env(env)? - b.eval_env(env)?,
            Expr::Div(a, b) => {
                let num = a.eval_env(env)?;
                let den = b.eval_env(env)?;
                if den == 0.0 {
                    return Err(Error::SingularPoint("division by zero".into()));
                }
                num / den
            }
            Expr::Integral { var, lo, hi, body } => {
                let a = lo.eval_env(env)?;
                let b = hi.eval_env(env)?;
                let saved = env.b[*var];
                let r = integrate_1d(body, *var, a, b, env);
                env.b[*var] = saved;
                r?
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::SingularPoint(format!(
                "non-finite value produced by `{self}`"
            )))
        }
    }

    /// Evaluate with no state and no integration context.
    pub fn eval(&self, t: &[f64], x: &[f64]) -> Result<f64> {
        let mut env = Env::new(t, x);
        self.eval_env(&mut env)
    }

    /// Largest variable indices used: (time, state, bound), each +1.
    pub fn arities(&self) -> (usize, usize, usize) {
        let mut a = (0, 0, 0);
        self.visit(&mut |e| {
            if let Expr::Var(v) = e {
                match v {
                    Var::Time(i) => a.0 = a.0.max(i + 1),
                    Var::State(i) => a.1 = a.1.max(i + 1),
                    Var::Bound(i) => a.2 = a.2.max(i + 1),
                }
            }
            if let Expr::Integral { var, .. } = e {
                a.2 = a.2.max(var + 1);
            }
        });
        a
    }

    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Unary(_, a) => a.visit(f),
            Expr::Nary(_, items) => items.iter().for_each(|e| e.visit(f)),
            Expr::Sub(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Integral { lo, hi, body, .. } => {
                lo.visit(f);
                hi.visit(f);
                body.visit(f);
            }
        }
    }

    /// Rebuild the tree bottom-up, replacing variables through `f`.
    pub fn map_vars(&self, f: &impl Fn(Var) -> Expr) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => f(*v),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.map_vars(f))),
            Expr::Nary(op, items) => Expr::Nary(*op, items.iter().map(|e| e.map_vars(f)).collect()),
            Expr::Sub(a, b) => Expr::sub(a.map_vars(f), b.map_vars(f)),
            Expr::Div(a, b) => Expr::div(a.map_vars(f), b.map_vars(f)),
            Expr::Integral { var, lo, hi, body } => Expr::Integral {
                var: *var,
                lo: Box::new(lo.map_vars(f)),
                hi: Box::new(hi.map_vars(f)),
                body: Box::new(body.map_vars(f)),
            },
        }
    }

    /// Check that bound variables only occur inside an integral binding them.
    pub fn check_scoping(&self) -> Result<()> {
        fn go(e: &Expr, bound: &mut Vec<usize>) -> Result<()> {
            match e {
                Expr::Var(Var::Bound(i)) => {
                    if !bound.contains(i) {
                        return Err(Error::Parse {
                            pos: 0,
                            msg: format!("free integration variable v{i}"),
                        });
                    }
                    Ok(())
                }
                Expr::Const(_) | Expr::Var(_) => Ok(()),
                Expr::Unary(_, a) => go(a, bound),
                Expr::Nary(_, items) => items.iter().try_for_each(|x| go(x, bound)),
                Expr::Sub(a, b) | Expr::Div(a, b) => {
                    go(a, bound)?;
                    go(b, bound)
                }
                Expr::Integral { var, lo, hi, body } => {
                    if *var >= MAX_BOUND {
                        return Err(Error::Parse {
                            pos: 0,
                            msg: format!("integration variable v{var} exceeds v{}", MAX_BOUND - 1),
                        });
                    }
                    go(lo, bound)?;
                    go(hi, bound)?;
                    bound.push(*var);
                    let r = go(body, bound);
                    bound.pop();
                    r
                }
            }
        }
        go(self, &mut Vec::new())
    }

    /// True when no `floor`/`step` argument outside integral bodies lies
    /// within `eps` of a jump.
    pub fn is_regular_at(&self, t: &[f64], x: &[f64], eps: f64) -> bool {
        fn go(e: &Expr, env: &mut Env<'_>, eps: f64) -> bool {
            match e {
                Expr::Const(_) | Expr::Var(_) => true,
                Expr::Unary(op, a) => {
                    if !go(a, env, eps) {
                        return false;
                    }
                    match op {
                        Unary::Floor => match a.eval_env(env) {
                            Ok(v) => (v - v.round()).abs() > eps,
                            Err(_) => false,
                        },
                        Unary::Step => match a.eval_env(env) {
                            Ok(v) => v.abs() > eps,
                            Err(_) => false,
                        },
                        _ => true,
                    }
                }
                Expr::Nary(_, items) => items.iter().all(|i| go(i, env, eps)),
                Expr::Sub(a, b) | Expr::Div(a, b) => go(a, env, eps) && go(b, env, eps),
                Expr::Integral { lo, hi, .. } => go(lo, env, eps) && go(hi, env, eps),
            }
        }
        let mut env = Env::new(t, x);
        go(self, &mut env, eps)
    }

    /// True if the tree contains `floor` or `step` anywhere.
    pub fn has_jumps(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Unary(Unary::Floor | Unary::Step, _)) {
                found = true;
            }
        });
        found
    }
}

fn integrate_1d(body: &Expr, var: usize, a: f64, b: f64, env: &mut Env<'_>) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (gx, gw) = int_rule();
    let panels = (hi - lo).ceil().max(1.0) as usize;
    let h = (hi - lo) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * h;
        for (x, w) in gx.iter().zip(gw) {
            env.b[var] = mid + 0.5 * h * x;
            acc += 0.5 * h * w * body.eval_env(env)?;
        }
    }
    Ok(sign * acc)
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Time(i) => write!(f, "t{i}"),
            Var::State(i) => write!(f, "x{i}"),
            Var::Bound(i) => write!(f, "v{i}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Unary(op, a) => write!(f, "({} {a})", op.name()),
            Expr::Nary(op, items) => {
                write!(f, "({}", op.name())?;
                for e in items {
                    write!(f, " {e}")?;
                }
                write!(f, ")")
            }
            Expr::Sub(a, b) => write!(f, "(sub {a} {b})"),
            Expr::Div(a, b) => write!(f, "(div {a} {b})"),
            Expr::Integral { var, lo, hi, body } => write!(f, "(int v{var} {lo} {hi} {body})"),
        }
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open(usize),
    Close(usize),
    Atom(usize, &'a str),
}

fn tokenize(src: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push(Tok::Open(i));
                i += 1;
            }
            b')' => {
                out.push(Tok::Close(i));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && bytes[i] != b'('
                    && bytes[i] != b')'
                {
                    i += 1;
                }
                out.push(Tok::Atom(start, &src[start..i]));
            }
        }
    }
    out
}

struct Parser<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
    len: usize,
}

fn perr(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        pos,
        msg: msg.into(),
    }
}

impl<'a> Parser<'a> {
    fn here(&self) -> usize {
        match self.toks.get(self.pos) {
            Some(Tok::Open(p)) | Some(Tok::Close(p)) | Some(Tok::Atom(p, _)) => *p,
            None => self.len,
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let at = self.here();
        match self.toks.get(self.pos).cloned() {
            None => Err(perr(at, "unexpected end of input")),
            Some(Tok::Close(p)) => Err(perr(p, "unexpected ')'")),
            Some(Tok::Atom(p, s)) => {
                self.pos += 1;
                atom(p, s)
            }
            Some(Tok::Open(_)) => {
                self.pos += 1;
                let (p, head) = match self.toks.get(self.pos).cloned() {
                    Some(Tok::Atom(p, s)) => (p, s),
                    _ => return Err(perr(self.here(), "expected an operator after '('")),
                };
                self.pos += 1;
                let e = if head == "int" {
                    let var = match self.toks.get(self.pos).cloned() {
                        Some(Tok::Atom(vp, s)) => match atom(vp, s)? {
                            Expr::Var(Var::Bound(k)) => k,
                            _ => return Err(perr(vp, "int expects an integration variable vK")),
                        },
                        _ => return Err(perr(self.here(), "int expects an integration variable vK")),
                    };
                    self.pos += 1;
                    let lo = self.expr()?;
                    let hi = self.expr()?;
                    let body = self.expr()?;
                    Expr::integral(var, lo, hi, body)
                } else {
                    let mut args = Vec::new();
                    while !matches!(self.toks.get(self.pos), Some(Tok::Close(_)) | None) {
                        args.push(self.expr()?);
                    }
                    build(p, head, args)?
                };
                match self.toks.get(self.pos) {
                    Some(Tok::Close(_)) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => Err(perr(self.here(), "expected ')'")),
                }
            }
        }
    }
}

fn atom(p: usize, s: &str) -> Result<Expr> {
    if s == "pi" {
        return Ok(Expr::Const(std::f64::consts::PI));
    }
    let var = |rest: &str, k: fn(usize) -> Var| -> Option<Expr> {
        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
            rest.parse().ok().map(|i| Expr::Var(k(i)))
        } else {
            None
        }
    };
    if let Some(rest) = s.strip_prefix('t') {
        if let Some(e) = var(rest, Var::Time) {
            return Ok(e);
        }
    }
    if let Some(rest) = s.strip_prefix('x') {
        if let Some(e) = var(rest, Var::State) {
            return Ok(e);
        }
    }
    if let Some(rest) = s.strip_prefix('v') {
        if let Some(e) = var(rest, Var::Bound) {
            return Ok(e);
        }
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Expr::Const(v)),
        _ => Err(perr(p, format!("unknown atom `{s}`"))),
    }
}

fn build(p: usize, head: &str, mut args: Vec<Expr>) -> Result<Expr> {
    if let Some(op) = Unary::from_name(head) {
        if args.len() != 1 {
            return Err(perr(p, format!("`{head}` takes one argument, got {}", args.len())));
        }
        return Ok(Expr::un(op, args.pop().unwrap()));
    }
    if let Some(op) = Nary::from_name(head) {
        if args.is_empty() {
            return Err(perr(p, format!("`{head}` needs at least one argument")));
        }
        return Ok(Expr::Nary(op, args));
    }
    match head {
        "sub" | "div" => {
            if args.len() != 2 {
                return Err(perr(p, format!("`{head}` takes two arguments, got {}", args.len())));
            }
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            Ok(if head == "sub" { Expr::sub(a, b) } else { Expr::div(a, b) })
        }
        _ => Err(perr(p, format!("unknown operator `{head}`"))),
    }
}

/// Parse a single expression; trailing tokens are an error.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: tokenize(src),
        pos: 0,
        len: src.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(perr(p.here(), "trailing input after expression"));
    }
    e.check_scoping()?;
    Ok(e)
}

/// Parse either a single expression or `(vec e1 e2 ...)`.
pub fn parse_body(src: &str) -> Result<Vec<Expr>> {
    let toks = tokenize(src);
    if let (Some(Tok::Open(_)), Some(Tok::Atom(_, "vec"))) = (toks.first(), toks.get(1)) {
        let mut p = Parser {
            toks,
            pos: 2,
            len: src.len(),
        };
        let mut items = Vec::new();
        while !matches!(p.toks.get(p.pos), Some(Tok::Close(_)) | None) {
            let e = p.expr()?;
            e.check_scoping()?;
            items.push(e);
        }
        if !matches!(p.toks.get(p.pos), Some(Tok::Close(_))) {
            return Err(perr(p.here(), "expected ')' closing vec"));
        }
        p.pos += 1;
        if p.pos != p.toks.len() {
            return Err(perr(p.here(), "trailing input after vec"));
        }
        if items.is_empty() {
            return Err(perr(0, "vec needs at least one component"));
        }
        Ok(items)
    } else {
        Ok(vec![parse_expr(src)?])
    }
}

/// Print a body in the form accepted by [`parse_body`].
pub fn print_body(body: &[Expr]) -> String {
    if body.len() == 1 {
        body[0].to_string()
    } else {
        let parts: Vec<String> = body.iter().map(|e| e.to_string()).collect();
        format!("(vec {})", parts.join(" "))
    }
}
