//! Turning config sections into toolkit objects.

use super::config::{ExperimentConfig, Values};
use crate::error::{Error, Result};
use crate::function_core::{catalogue, near_common_period, FunctionExpr, GridWindow, ScalarSource, SequenceFamily};
use crate::fixed_point_solvers::AsymptoticCheck;
use crate::function_core::BoundedSetSpec;
use crate::numerics::quadrature::QuadratureScheme;
use crate::sequence_limits::{DecomposeOptions, LimitProbe, DEFAULT_DEPTH, DEFAULT_TOL_LIMIT, DEFAULT_TOL_SUBSEQ};
use crate::volterra_ops::{catalogue_kernel, Decay, DomainDescriptor, KernelSpec};

pub fn function(cfg: &ExperimentConfig, name: &str) -> Result<FunctionExpr> {
    let v = Values::new(cfg, name);
    if !v.present() {
        return Err(Error::Config(format!("missing [{name}] section")));
    }
    let mut f = match (v.raw("catalogue"), v.raw("expr")) {
        (Some(c), None) => {
            let param = v.raw("param").map(|_| v.f64("param")).transpose()?;
            catalogue::function_with(c, param)?
        }
        (None, Some(e)) => {
            let label = v.raw("label").unwrap_or(name);
            FunctionExpr::parse(label, v.usize("arity_time")?, v.usize_or("arity_state", 0)?, e)?
        }
        _ => return Err(Error::Config(format!("[{name}] needs exactly one of `catalogue` and `expr`"))),
    };
    if v.raw("sup_bound").is_some() {
        f = f.with_sup_bound(v.f64("sup_bound")?);
    }
    if v.raw("lipschitz").is_some() {
        f = f.with_lipschitz(v.f64("lipschitz")?);
    }
    if let Some(l) = v.raw("label") {
        f = f.with_label(l);
    }
    Ok(f)
}

pub fn kernel(cfg: &ExperimentConfig) -> Result<KernelSpec> {
    let v = Values::new(cfg, "kernel");
    if let Some(c) = v.raw("catalogue") {
        return catalogue_kernel(c);
    }
    let dim = v.usize("dim")?;
    let decay = match (v.list("rates")?, v.raw("tail_radius")) {
        (Some(rates), None) => Decay::Exponential {
            rates,
            constant: v.f64_or("constant", 1.0)?,
        },
        (None, Some(_)) => Decay::IntegrableDeclared {
            tail_radius: v.f64("tail_radius")?,
        },
        (None, None) => Decay::None,
        (Some(_), Some(_)) => return Err(Error::Config("[kernel] takes `rates` or `tail_radius`, not both".into())),
    };
    KernelSpec::parse(v.raw("label").unwrap_or("kernel"), dim, v.require("expr")?, decay)
}

pub fn domain(cfg: &ExperimentConfig, dim: usize) -> Result<DomainDescriptor> {
    let v = Values::new(cfg, "domain");
    let dim = v.usize_or("dim", dim)?;
    match v.raw("kind").unwrap_or("cone") {
        "cone" => Ok(DomainDescriptor::causal_cone(dim)),
        "full" => Ok(DomainDescriptor::full_space(dim)),
        "first_orthant" => Ok(DomainDescriptor::first_orthant(dim)),
        "orthant" => {
            let corner = v.list_req("corner")?;
            let signs = v
                .list_req("signs")?
                .into_iter()
                .map(|s| if s < 0.0 { -1 } else { 1 })
                .collect();
            DomainDescriptor::orthant(corner, signs)
        }
        "lines" => DomainDescriptor::lines(
            v.list_req("point")?,
            v.vectors("dirs")?.ok_or_else(|| Error::Config("[domain] lines need `dirs`".into()))?,
        ),
        k => Err(Error::Config(format!("unknown domain kind `{k}`"))),
    }
}

pub fn quadrature(cfg: &ExperimentConfig) -> Result<QuadratureScheme> {
    let v = Values::new(cfg, "quadrature");
    let d = QuadratureScheme::default();
    let ppu = v.usize_or("panels_per_unit", d.panels_per_unit)?;
    let eps = v.f64_or("eps_tail", d.eps_tail)?;
    match v.raw("rule").unwrap_or("gauss") {
        "gauss" => Ok(QuadratureScheme::gauss(v.usize_or("order", 8)?, ppu, eps)),
        "trapezoid" => Ok(QuadratureScheme::trapezoid(ppu, eps)),
        r => Err(Error::Config(format!("unknown quadrature rule `{r}`"))),
    }
}

pub fn grid(cfg: &ExperimentConfig) -> Result<GridWindow> {
    let v = Values::new(cfg, "grid");
    GridWindow::new(v.list_req("lo")?, v.list_req("hi")?, v.usize("points")?)
        .map_err(|e| Error::Config(format!("[grid]: {e}")))
}

/// Translate step: `step` if given, otherwise a near common period of `freqs`.
fn step(v: &Values) -> Result<f64> {
    match (v.raw("step"), v.list("freqs")?) {
        (Some(_), None) => v.f64("step"),
        (None, Some(freqs)) => {
            if freqs.is_empty() || !(freqs[0] > 0.0) {
                return Err(Error::Config("`freqs` must start with a positive frequency".into()));
            }
            Ok(near_common_period(&freqs, v.usize_or("max_k", 100_000)? as u64).0)
        }
        _ => Err(Error::Config("[probe] needs exactly one of `step` and `freqs`".into())),
    }
}

pub fn family(cfg: &ExperimentConfig, dim: usize) -> Result<SequenceFamily> {
    let v = Values::new(cfg, "probe");
    if let Some(vectors) = v.vectors("vectors")? {
        return SequenceFamily::explicit(vectors);
    }
    let step = step(&v)?;
    let source = ScalarSource::Arithmetic {
        start: v.f64_or("start", step)?,
        step,
    };
    match v.raw("family").unwrap_or("diagonal") {
        "diagonal" => Ok(SequenceFamily::diagonal(dim, source, cfg.seed)),
        "axis" => SequenceFamily::axis(dim, v.usize_or("axis", 0)?, source, cfg.seed),
        f => Err(Error::Config(format!("unknown family `{f}`"))),
    }
}

pub fn probe(cfg: &ExperimentConfig, dim: usize) -> Result<LimitProbe> {
    let v = Values::new(cfg, "probe");
    let fam = family(cfg, dim)?;
    let r = v.f64_or("window_radius", 5.0)?;
    let pts = v.usize_or("window_points", 33)?;
    let window = match v.list("window_center")? {
        Some(c) => GridWindow::centered(&c, r, pts)?,
        None => GridWindow::cube(dim, r, pts)?,
    };
    LimitProbe::new(
        window,
        BoundedSetSpec::none(),
        fam,
        v.usize_or("depth", DEFAULT_DEPTH)?,
        v.f64_or("tol_limit", DEFAULT_TOL_LIMIT)?,
        v.f64_or("tol_subseq", DEFAULT_TOL_SUBSEQ)?,
    )
}

pub fn decompose_options(cfg: &ExperimentConfig, d: &DomainDescriptor) -> Result<DecomposeOptions> {
    let v = Values::new(cfg, "decompose");
    let rays = match v.raw("rays").unwrap_or("interior") {
        "interior" => d.interior_rays(),
        "axis" => d.axis_rays(v.f64_or("axis_x0", 1.0)?),
        r => return Err(Error::Config(format!("unknown ray set `{r}`"))),
    };
    let mut o = DecomposeOptions::new(rays);
    o.min_translate_norm = v.f64_or("min_translate_norm", o.min_translate_norm)?;
    o.depth = v.usize_or("depth", o.depth)?;
    o.max_pairs = v.usize_or("max_pairs", o.max_pairs)?;
    o.tol = v.f64_or("tol", o.tol)?;
    o.slack = v.f64_or("slack", o.slack)?;
    if let Some(r) = v.list("radii")? {
        o.radii = r;
    }
    Ok(o)
}

/// Split check applied to a solved grid: diagonal translates and a sub-window.
pub fn asymptotic_check(cfg: &ExperimentConfig, d: &DomainDescriptor) -> Result<AsymptoticCheck> {
    let v = Values::new(cfg, "decompose");
    let n = d.dim;
    let step = v.f64_or("family_step", 5.0)?;
    let family = SequenceFamily::diagonal(n, ScalarSource::Arithmetic { start: step, step }, cfg.seed);
    let lo = v.list("window_lo")?.unwrap_or(vec![0.0; n]);
    let hi = v.list("window_hi")?.unwrap_or(vec![5.0; n]);
    let window = GridWindow::new(lo, hi, v.usize_or("window_points", 11)?)?;
    Ok(AsymptoticCheck {
        family,
        window,
        options: decompose_options(cfg, d)?,
    })
}
