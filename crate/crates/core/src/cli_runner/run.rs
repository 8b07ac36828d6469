//! Experiment execution, artifacts and the run manifest.

use super::build;
use super::config::{ExperimentConfig, ExperimentKind, Values};
use crate::error::{Error, Result};
use crate::fixed_point_solvers::{solve_vie_asymptotic, BikernelProblem, VieProblem};
use crate::memory_material::{build_resolvent, parse_matrix, solve_mild_nonlocal, verify_property_r, MemorySystem, Nonlocal};
use crate::pde_experiments::{heat_preserves_aa_check, heat_solve, poisson_synthetic_check, HeatConfig, DEFAULT_H_FD};
use crate::sequence_limits::{
    asymptotic_decompose, bochner_test, compactness_equivalence_check, supremum_formula_check, ScanOptions,
    DEFAULT_DELTAS,
};
use crate::function_core::{BoundedSetSpec, FunctionExpr};
use crate::volterra_ops::{gamma_apply, gamma_preserves_aa_check, grid_csv_string, DomainDescriptor};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";
pub const RESULT: &str = "result.json";

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub passed: bool,
    pub expected_pass: bool,
    pub output_dir: PathBuf,
    pub artifacts: Vec<Artifact>,
    pub summary: String,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed == self.expected_pass {
            0
        } else {
            1
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Outputs of one experiment before they touch the disk.
struct Report {
    passed: bool,
    summary: String,
    body: Value,
    files: Vec<(String, String)>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn solver_tol(cfg: &ExperimentConfig) -> Result<(f64, Option<f64>)> {
    let v = Values::new(cfg, "solver");
    let max_res = if v.raw("max_residual").is_some() {
        Some(v.f64("max_residual")?)
    } else {
        None
    };
    Ok((v.f64_or("tol", 1e-6)?, max_res))
}

fn scan_options(cfg: &ExperimentConfig) -> Result<(ScanOptions, Vec<f64>)> {
    let v = Values::new(cfg, "scan");
    let d = ScanOptions::default();
    let opts = ScanOptions {
        line_half_length: v.f64_or("line_half_length", d.line_half_length)?,
        line_step: v.f64_or("line_step", d.line_step)?,
        window_only: v.bool_or("window_only", d.window_only)?,
    };
    Ok((opts, v.list("deltas")?.unwrap_or(DEFAULT_DELTAS.to_vec())))
}

fn memory_system(cfg: &ExperimentConfig) -> Result<MemorySystem> {
    let v = Values::new(cfg, "memory");
    let a = parse_matrix(v.require("a")?)?;
    let d = a.nrows();
    let profile = v.raw("memory").map(|e| FunctionExpr::parse("F", 1, 0, e)).transpose()?;
    let u0 = v.list("u0")?.unwrap_or(vec![0.0; d]);
    let mut sys = MemorySystem::new(a, profile, u0)?;
    if let Some(e) = v.raw("forcing") {
        let mut f = FunctionExpr::parse("f", 1, d, e)?;
        if v.raw("forcing_lipschitz").is_some() {
            f = f.with_lipschitz(v.f64("forcing_lipschitz")?);
        }
        sys = sys.with_forcing(f)?;
    }
    if v.raw("nonlocal_coeff").is_some() {
        sys = sys.with_nonlocal(Nonlocal::MeanClip {
            coeff: v.f64("nonlocal_coeff")?,
            clip: v.f64_or("nonlocal_clip", 1.0)?,
        });
    }
    Ok(sys)
}

fn execute(cfg: &ExperimentConfig) -> Result<Report> {
    use ExperimentKind::*;
    let report = match cfg.kind {
        AaTest => {
            let f = build::function(cfg, "function")?;
            let probe = build::probe(cfg, f.arity_time)?;
            let v = bochner_test(&f, &probe)?;
            Report {
                passed: v.passed,
                summary: format!("forward {:.3e}, backward {:.3e}", v.forward_residual, v.backward_residual),
                body: to_value(&v),
                files: vec![],
            }
        }
        Compactness => {
            let f = build::function(cfg, "function")?;
            let probe = build::probe(cfg, f.arity_time)?;
            let (opts, deltas) = scan_options(cfg)?;
            let r = compactness_equivalence_check(&f, &probe, &deltas, &opts)?;
            Report {
                passed: r.agreement,
                summary: format!(
                    "pointwise {}, uniformly continuous {}, compact {}",
                    r.pointwise, r.uniform_continuity, r.compact
                ),
                body: to_value(&r),
                files: vec![],
            }
        }
        Supremum => {
            let f = build::function(cfg, "function")?;
            let fam = build::family(cfg, f.arity_time)?;
            let v = Values::new(cfg, "supremum");
            let r = supremum_formula_check(&f, &fam, v.f64("a")?, v.f64("radius")?, v.f64_or("step", 0.01)?)?;
            Report {
                passed: r.gap.abs() <= v.f64_or("tol", 1e-3)?,
                summary: format!("sup {:.6}, tail sup {:.6}", r.sup_all, r.sup_tail),
                body: to_value(&r),
                files: vec![],
            }
        }
        Decompose => {
            let f = build::function(cfg, "function")?;
            let probe = build::probe(cfg, f.arity_time)?;
            let opts = build::decompose_options(cfg, &DomainDescriptor::full_space(f.arity_time))?;
            let r = asymptotic_decompose(&f, &probe.sequence, &BoundedSetSpec::none(), &probe.window, &opts)?;
            Report {
                passed: r.passed,
                summary: format!("sup |G| {:.3e}, sup |Q| {:.3e}", r.g_sup, r.q_sup),
                body: to_value(&r),
                files: vec![],
            }
        }
        Convolve => {
            let f = build::function(cfg, "function")?;
            let k = build::kernel(cfg)?;
            let d = build::domain(cfg, k.dim)?;
            let q = build::quadrature(cfg)?;
            let grid = build::grid(cfg)?;
            let probe = build::probe(cfg, k.dim)?;
            let opts = match cfg.section("decompose") {
                Some(_) => Some(build::decompose_options(cfg, &d)?),
                None => None,
            };
            let sampled = gamma_apply(&k, &d, &f, &grid, &q)?;
            let r = gamma_preserves_aa_check(&k, &d, &f, &probe, opts.as_ref(), &q)?;
            Report {
                passed: r.passed,
                summary: format!("kernel L1 {:.6}, effective tolerance {:.3e}", r.kernel_l1, r.tol_effective),
                body: to_value(&r),
                files: vec![("convolution.csv".into(), grid_csv_string(&sampled)?)],
            }
        }
        SolveVie | SolveVieAsymptotic => {
            let g = build::function(cfg, "g")?;
            let h = build::function(cfg, "h")?;
            let k = build::kernel(cfg)?;
            let q = build::quadrature(cfg)?;
            let grid = build::grid(cfg)?;
            let (tol, max_res) = solver_tol(cfg)?;
            let (trace, verdict) = if cfg.kind == SolveVie {
                let p = VieProblem::new(g, h, k.clone(), DomainDescriptor::causal_cone(k.dim), q)?.with_seed(cfg.seed);
                (p.solve(&grid, tol)?, None)
            } else {
                let d = build::domain(cfg, k.dim)?;
                let check = build::asymptotic_check(cfg, &d)?;
                let s = solve_vie_asymptotic(&g, &h, &k, &d, &grid, &q, tol, Some(&check))?;
                (s.trace, s.verdict)
            };
            let residual_ok = max_res.is_none_or(|m| trace.residual <= m);
            let split_ok = verdict.as_ref().is_none_or(|v| v.passed);
            Report {
                passed: trace.converged && residual_ok && split_ok,
                summary: format!(
                    "theta {:.4}, {} sweep(s), residual {:.3e}",
                    trace.certificate.theta, trace.k_final, trace.residual
                ),
                body: json!({ "trace": to_value(&trace), "decompose": verdict.as_ref().map(to_value) }),
                files: vec![("solution.csv".into(), grid_csv_string(&trace.solution_grid())?)],
            }
        }
        SolveBikernel => {
            let g = build::function(cfg, "bikernel")?;
            let lambda = build::kernel(cfg)?;
            let q = build::quadrature(cfg)?;
            let grid = build::grid(cfg)?;
            let (tol, max_res) = solver_tol(cfg)?;
            let mut p = BikernelProblem::new(g, lambda, q)?;
            p.seed = cfg.seed;
            let trace = p.solve(&grid, tol)?;
            Report {
                passed: trace.converged && max_res.is_none_or(|m| trace.residual <= m),
                summary: format!(
                    "theta {:.4}, {} sweep(s), residual {:.3e}",
                    trace.certificate.theta, trace.k_final, trace.residual
                ),
                body: json!({ "trace": to_value(&trace) }),
                files: vec![("solution.csv".into(), grid_csv_string(&trace.solution_grid())?)],
            }
        }
        Heat => {
            let f = build::function(cfg, "function")?;
            let hc = HeatConfig::new(f.arity_time, Values::new(cfg, "heat").f64("time")?, f, build::quadrature(cfg)?)?;
            let grid = build::grid(cfg)?;
            let probe = build::probe(cfg, hc.dim)?;
            let sampled = heat_solve(&hc, &grid)?;
            let r = heat_preserves_aa_check(&hc, &probe)?;
            Report {
                passed: r.passed,
                summary: format!("kernel mass {:.12}, solution forward {:.3e}", r.kernel_mass, r.solution.forward_residual),
                body: to_value(&r),
                files: vec![("solution.csv".into(), grid_csv_string(&sampled)?)],
            }
        }
        Poisson => {
            let u = build::function(cfg, "function")?;
            let probe = build::probe(cfg, u.arity_time)?;
            let h_fd = Values::new(cfg, "poisson").f64_or("h_fd", DEFAULT_H_FD)?;
            let r = poisson_synthetic_check(&u, &probe, h_fd)?;
            Report {
                passed: r.passed,
                summary: format!("Richardson gap {:.3e}", r.richardson_gap),
                body: to_value(&r),
                files: vec![],
            }
        }
        Memory => {
            let sys = memory_system(cfg)?;
            let v = Values::new(cfg, "memory");
            let t_max = v.f64("t_max")?;
            let table = build_resolvent(&sys, t_max, v.f64_or("dt", 1e-3)?)?;
            let prop = verify_property_r(&table);
            let rho = if v.raw("rho").is_some() { Some(v.f64("rho")?) } else { None };
            let mild = solve_mild_nonlocal(&sys, &table, v.f64_or("horizon", t_max)?, v.f64_or("tol", 1e-9)?, rho)?;
            let ball_ok = mild.ball_ok.unwrap_or(true);
            Report {
                passed: prop.passed && mild.trace.converged && ball_ok,
                summary: format!(
                    "M {:.4}, delta {:.4}, theta {:.4}, {} sweep(s)",
                    prop.m_est, prop.delta_est, mild.trace.certificate.theta, mild.trace.k_final
                ),
                body: json!({
                    "property_r": to_value(&prop),
                    "halving_err": table.halving_err,
                    "mild": to_value(&mild),
                }),
                files: vec![
                    ("resolvent.csv".into(), table.csv_string()),
                    ("mild.csv".into(), mild_csv(&mild.trace, sys.dim)),
                ],
            }
        }
    };
    Ok(report)
}

fn mild_csv(trace: &crate::fixed_point_solvers::IterationTrace, d: usize) -> String {
    let mut out = String::from("t");
    for i in 1..=d {
        out.push_str(&format!(",u{i}"));
    }
    out.push('\n');
    let u = trace.solution();
    for k in 0..u.len() / d {
        out.push_str(&trace.window.axis_coord(0, k).to_string());
        for v in &u[k * d..(k + 1) * d] {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<Artifact> {
    std::fs::write(dir.join(name), bytes).map_err(|e| Error::Io(format!("{}: {e}", dir.join(name).display())))?;
    Ok(Artifact {
        file: name.to_string(),
        bytes: bytes.len(),
        sha256: sha256_hex(bytes),
    })
}

/// Runs `cfg`, writing artifacts and `manifest.json` to `out` (or the configured directory).
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let started = chrono::Utc::now();
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let report = execute(cfg)?;
    let canonical = cfg.print();
    let mut artifacts = vec![write_artifact(&dir, "config.cfg", canonical.as_bytes())?];
    let result = json!({
        "kind": cfg.kind.name(),
        "seed": cfg.seed,
        "passed": report.passed,
        "expected_pass": cfg.expect_pass,
        "summary": report.summary,
        "report": report.body,
    });
    let text = serde_json::to_string_pretty(&result).expect("result serializes") + "\n";
    artifacts.push(write_artifact(&dir, RESULT, text.as_bytes())?);
    for (name, body) in &report.files {
        artifacts.push(write_artifact(&dir, name, body.as_bytes())?);
    }
    let manifest = json!({
        "config_sha256": sha256_hex(canonical.as_bytes()),
        "version": env!("CARGO_PKG_VERSION"),
        "kind": cfg.kind.name(),
        "seed": cfg.seed,
        "started": started.to_rfc3339(),
        "finished": chrono::Utc::now().to_rfc3339(),
        "artifacts": to_value(&artifacts),
        "verdict": { "passed": report.passed, "expected_pass": cfg.expect_pass },
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(dir.join(MANIFEST), text).map_err(|e| Error::Io(e.to_string()))?;
    Ok(RunOutcome {
        passed: report.passed,
        expected_pass: cfg.expect_pass,
        output_dir: dir,
        artifacts,
        summary: report.summary,
    })
}

/// Reads, runs and reports; the return value is the process exit code.
pub fn run_file(path: &Path, out: Option<&Path>) -> i32 {
    let result = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        .and_then(|text| ExperimentConfig::parse(&text))
        .and_then(|cfg| run_experiment(&cfg, out));
    match result {
        Ok(o) => {
            let verdict = if o.passed { "pass" } else { "fail" };
            println!("{verdict}: {} ({})", o.summary, o.output_dir.display());
            o.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
