//! Built-in functions and kernels.

use super::expr::parse_expr;
use super::function::{make_green_kernel, make_tensor_product, FunctionExpr};
use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Function,
    Kernel,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogueEntry {
    pub name: &'static str,
    pub citation: &'static str,
    pub kind: EntryKind,
    pub description: &'static str,
}

impl CatalogueEntry {
    pub fn line(&self) -> String {
        let kind = match self.kind {
            EntryKind::Function => "function",
            EntryKind::Kernel => "kernel",
        };
        format!("{} ({}) [{kind}] {}", self.name, self.citation, self.description)
    }
}

const ENTRIES: &[CatalogueEntry] = &[
    CatalogueEntry {
        name: "levitan",
        citation: "Example 2.6",
        kind: EntryKind::Function,
        description: "sin(1/(2 + cos t + cos(sqrt2 t))): almost automorphic, not uniformly continuous",
    },
    CatalogueEntry {
        name: "green_exp",
        citation: "Example 2.3",
        kind: EntryKind::Function,
        description: "G(t,s;x) = exp(int_s^t cos) e^{-2(t-s)} x for t >= s, zero otherwise",
    },
    CatalogueEntry {
        name: "tensor",
        citation: "Example 2.5",
        kind: EntryKind::Function,
        description: "(sin t, cos t) x (sin sqrt2 s, cos sqrt2 s), 2x2 product matrix on R^2",
    },
    CatalogueEntry {
        name: "z_piecewise",
        citation: "Example 2.6",
        kind: EntryKind::Function,
        description: "|z| (int_[t]^t e^{-(t-eta)} cos(2 pi eta) + sin(psi(s)) cos(psi([s])) + levitan(u)), Z x Z x R",
    },
    CatalogueEntry {
        name: "sin_sqrt2",
        citation: "Definition 2.1",
        kind: EntryKind::Function,
        description: "sin t + sin(sqrt2 t), quasi-periodic",
    },
    CatalogueEntry {
        name: "sin_pi",
        citation: "Definition 2.1",
        kind: EntryKind::Function,
        description: "sin t + sin(pi t), quasi-periodic",
    },
    CatalogueEntry {
        name: "vie_g",
        citation: "Section 3.1",
        kind: EntryKind::Function,
        description: "[sin x + sin pi x][cos x + cos pi x] + 1/sqrt(1 + x^2 + y^2)",
    },
    CatalogueEntry {
        name: "vie_h",
        citation: "Section 3.1",
        kind: EntryKind::Function,
        description: "0.1 cos(eta1) sin(eta2) ln(1 + |u|)",
    },
    CatalogueEntry {
        name: "wave_g",
        citation: "Section 3.2",
        kind: EntryKind::Function,
        description: "e^{-y/2} - e^{-s/2}",
    },
    CatalogueEntry {
        name: "wave_h",
        citation: "Section 3.2",
        kind: EntryKind::Function,
        description: "0.05 cos((Y - S)/2) sin(v)",
    },
    CatalogueEntry {
        name: "k_exp",
        citation: "Example 2.24",
        kind: EntryKind::Kernel,
        description: "exp(-alpha r1) exp(-beta r2), alpha = beta = 1, mass 1/(alpha beta) on the orthant",
    },
    CatalogueEntry {
        name: "k_abs",
        citation: "Section 3.1",
        kind: EntryKind::Kernel,
        description: "exp(-|r1| - |r2|), mass 1 over the causal cone",
    },
    CatalogueEntry {
        name: "k_wave",
        citation: "Section 3.2",
        kind: EntryKind::Kernel,
        description: "-exp(-(r1 + r2)/2), absolute mass 4 on the orthant",
    },
    CatalogueEntry {
        name: "k_heat",
        citation: "Section 3.4",
        kind: EntryKind::Kernel,
        description: "(4 pi t)^{-n/2} exp(-|xi|^2 / 4t), unit mass",
    },
    CatalogueEntry {
        name: "lambda_bi",
        citation: "Theorem 2.28",
        kind: EntryKind::Kernel,
        description: "1/4 e^{-|r|}, mass 1/2 on R",
    },
];

pub fn entries() -> &'static [CatalogueEntry] {
    ENTRIES
}

/// Entries whose kind equals `filter` ("kernel"/"function") or whose name
/// contains it; an empty filter returns everything.
pub fn filter(filter: &str) -> Vec<&'static CatalogueEntry> {
    let f = filter.trim();
    ENTRIES
        .iter()
        .filter(|e| match f {
            "" => true,
            "kernel" | "kernels" => e.kind == EntryKind::Kernel,
            "function" | "functions" => e.kind == EntryKind::Function,
            _ => e.name.contains(f),
        })
        .collect()
}

pub const SQRT2: f64 = std::f64::consts::SQRT_2;
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn expr_fn(label: &str, n: usize, p: usize, text: &str) -> FunctionExpr {
    FunctionExpr::parse(label, n, p, text).expect("catalogue expression parses")
}

pub fn levitan() -> FunctionExpr {
    expr_fn(
        "levitan",
        1,
        0,
        "(sin (div 1 (add 2 (cos t0) (cos (mul 1.4142135623730951 t0)))))",
    )
    .with_sup_bound(1.0)
}

pub fn sin_sqrt2() -> FunctionExpr {
    expr_fn("sin_sqrt2", 1, 0, "(add (sin t0) (sin (mul 1.4142135623730951 t0)))").with_sup_bound(2.0)
}

pub fn sin_pi() -> FunctionExpr {
    expr_fn("sin_pi", 1, 0, "(add (sin t0) (sin (mul pi t0)))").with_sup_bound(2.0)
}

pub fn green_exp() -> FunctionExpr {
    let phi = expr_fn("cos", 1, 0, "(cos t0)").with_sup_bound(1.0);
    make_green_kernel(&phi, 1.0, 2.0, 1)
        .expect("green kernel builds")
        .with_label("green_exp")
}

pub fn tensor() -> FunctionExpr {
    let fs = [
        expr_fn("sin", 1, 0, "(sin t0)").with_sup_bound(1.0),
        expr_fn("cos", 1, 0, "(cos t0)").with_sup_bound(1.0),
    ];
    let gs = [
        expr_fn("sin_r2", 1, 0, "(sin (mul 1.4142135623730951 t0))").with_sup_bound(1.0),
        expr_fn("cos_r2", 1, 0, "(cos (mul 1.4142135623730951 t0))").with_sup_bound(1.0),
    ];
    make_tensor_product(&fs, &gs).expect("tensor builds").with_label("tensor")
}

pub fn z_piecewise() -> FunctionExpr {
    let tp = "6.283185307179586";
    let text = format!(
        "(mul (abs x0) (add \
           (int v0 (floor t0) t0 (mul (exp (sub v0 t0)) (cos (mul {tp} v0)))) \
           (mul (sin (sin (mul {tp} t1))) (cos (sin (mul {tp} (floor t1))))) \
           (sin (div 1 (add 2 (cos t2) (cos (mul 1.4142135623730951 t2)))))))"
    );
    expr_fn("z_piecewise", 3, 1, &text)
}

pub fn vie_g() -> FunctionExpr {
    expr_fn(
        "vie_g",
        2,
        0,
        "(add (mul (add (sin t0) (sin (mul pi t0))) (add (cos t0) (cos (mul pi t0)))) \
              (div 1 (sqrt (add 1 (mul t0 t0) (mul t1 t1)))))",
    )
    .with_sup_bound(5.0)
}

/// `gamma cos(eta1) sin(eta2) ln(1 + |u|)`, `gamma`-Lipschitz in `u`.
pub fn vie_h(gamma: f64) -> FunctionExpr {
    expr_fn(
        "vie_h",
        2,
        1,
        &format!("(mul {gamma} (cos t0) (sin t1) (ln (add 1 (abs x0))))"),
    )
    .with_lipschitz(gamma.abs())
}

pub fn wave_g() -> FunctionExpr {
    expr_fn("wave_g", 2, 1, "(sub (exp (mul -0.5 t0)) (exp (mul -0.5 t1)))").with_lipschitz(0.0)
}

/// `delta cos((Y - S)/2) sin(v)`, `delta`-Lipschitz in `v`.
pub fn wave_h(delta: f64) -> FunctionExpr {
    expr_fn(
        "wave_h",
        2,
        1,
        &format!("(mul {delta} (cos (mul 0.5 (sub t0 t1))) (sin x0))"),
    )
    .with_lipschitz(delta.abs())
}

/// Catalogue functions by name.
pub fn function(name: &str) -> Result<FunctionExpr> {
    Ok(match name {
        "levitan" => levitan(),
        "green_exp" => green_exp(),
        "tensor" => tensor(),
        "z_piecewise" => z_piecewise(),
        "sin_sqrt2" => sin_sqrt2(),
        "sin_pi" => sin_pi(),
        "vie_g" => vie_g(),
        "vie_h" => vie_h(0.1),
        "wave_g" => wave_g(),
        "wave_h" => wave_h(0.05),
        _ => return Err(Error::Config(format!("unknown catalogue function `{name}`"))),
    })
}

/// Catalogue function with its scalar parameter (`gamma` for `vie_h`, `delta` for `wave_h`).
pub fn function_with(name: &str, param: Option<f64>) -> Result<FunctionExpr> {
    match (name, param) {
        ("vie_h", Some(p)) => Ok(vie_h(p)),
        ("wave_h", Some(p)) => Ok(wave_h(p)),
        (_, None) => function(name),
        (_, Some(_)) => Err(Error::Config(format!("catalogue function `{name}` takes no parameter"))),
    }
}

/// Sanity check that the text form of every built-in parses.
pub fn check_texts() -> Result<()> {
    for e in ENTRIES.iter().filter(|e| e.kind == EntryKind::Function) {
        let f = function(e.name)?;
        parse_expr(&f.body[0].to_string())?;
    }
    Ok(())
}
