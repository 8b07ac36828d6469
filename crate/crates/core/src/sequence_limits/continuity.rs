use super::bochner::{bochner_passes, bochner_test, LimitProbe};
use crate::error::{Error, Result};
use crate::function_core::{Field, GridWindow, SequenceFamily};
use rayon::prelude::*;
use serde::Serialize;

/// Where to look for pairs `(a_k, a_k + delta_k u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    /// Half-length of the line scan through the window center.
    pub line_half_length: f64,
    pub line_step: f64,
    /// Scan only the probe window; the verdict is then local.
    pub window_only: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            line_half_length: 2000.0,
            line_step: 0.005,
            window_only: false,
        }
    }
}

pub const DEFAULT_DELTAS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub state: Vec<f64>,
    pub diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformContinuityReport {
    pub passed: bool,
    /// False when only the probe window was scanned.
    pub global: bool,
    pub deltas: Vec<f64>,
    pub sup_diffs: Vec<f64>,
    /// Largest difference found at the smallest delta.
    pub witness: Option<Witness>,
    /// Base points of the largest differences at the smallest delta, best first.
    #[serde(skip)]
    pub top_points: Vec<Vec<f64>>,
    pub notes: Vec<String>,
}

fn base_points(probe: &LimitProbe, opts: &ScanOptions) -> Vec<Vec<f64>> {
    let mut pts = probe.window.points();
    if !opts.window_only {
        let dir = probe.sequence.scan_direction();
        let c = probe.window.center();
        let n = (opts.line_half_length / opts.line_step).floor() as i64;
        for i in -n..=n {
            let s = i as f64 * opts.line_step;
            pts.push(c.iter().zip(&dir).map(|(a, d)| a + s * d).collect());
        }
    }
    pts
}

pub fn uniform_continuity_test<F: Field + ?Sized>(
    f: &F,
    probe: &LimitProbe,
    deltas: &[f64],
    opts: &ScanOptions,
) -> Result<UniformContinuityReport> {
    if deltas.is_empty() {
        return Err(Error::EmptyList("delta sequence".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|d| *d <= 0.0) {
        return Err(Error::PreconditionFailed("delta sequence must be positive and decreasing".into()));
    }
    let states = probe.states();
    let dir = probe.sequence.scan_direction();
    let pts = base_points(probe, opts);
    let q = f.out_dim();
    let mut sup_diffs = Vec::with_capacity(deltas.len());
    let mut witness = None;
    let mut top_points = Vec::new();
    for (di, &delta) in deltas.iter().enumerate() {
        let per_point: Vec<(f64, usize)> = pts
            .par_iter()
            .map(|a| {
                let b: Vec<f64> = a.iter().zip(&dir).map(|(x, d)| x + delta * d).collect();
                let mut fa = vec![0.0; q];
                let mut fb = vec![0.0; q];
                let mut best = (0.0f64, 0usize);
                for (si, x) in states.iter().enumerate() {
                    if !(f.is_regular_point(a, x) && f.is_regular_point(&b, x)) {
                        continue;
                    }
                    if f.eval_into(a, x, &mut fa).is_err() || f.eval_into(&b, x, &mut fb).is_err() {
                        continue;
                    }
                    let d = fa.iter().zip(&fb).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
                    if d > best.0 {
                        best = (d, si);
                    }
                }
                best
            })
            .collect();
        let (imax, &(dmax, smax)) = per_point
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(b.0.cmp(&a.0)))
            .expect("at least one base point");
        sup_diffs.push(dmax);
        if di + 1 == deltas.len() {
            let a = pts[imax].clone();
            let b = a.iter().zip(&dir).map(|(x, d)| x + delta * d).collect();
            witness = Some(Witness {
                a,
                b,
                state: states[smax].clone(),
                diff: dmax,
            });
            let mut order: Vec<usize> = (0..pts.len()).collect();
            order.sort_by(|&i, &j| per_point[j].0.total_cmp(&per_point[i].0).then(i.cmp(&j)));
            top_points = order.iter().take(3).map(|&i| pts[i].clone()).collect();
        }
    }
    let passed = *sup_diffs.last().unwrap() <= probe.tol_limit;
    let mut notes = Vec::new();
    if opts.window_only {
        notes.push("scan restricted to the probe window; verdict is local, not global".into());
    } else {
        notes.push(format!(
            "line scan |s| <= {} step {} along the family direction plus the probe window",
            opts.line_half_length, opts.line_step
        ));
    }
    Ok(UniformContinuityReport {
        passed,
        global: !opts.window_only,
        deltas: deltas.to_vec(),
        sup_diffs,
        witness,
        top_points,
        notes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompactnessReport {
    pub pointwise: bool,
    pub uniform_continuity: bool,
    pub compact: bool,
    /// `compact == (pointwise && uniform_continuity)`.
    pub agreement: bool,
    pub counterexample: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

/// Half-width and resolution of the local windows placed at continuity witnesses.
pub const LOCAL_HALF_WIDTH: f64 = 0.5;
pub const LOCAL_POINTS: usize = 33;

pub fn compactness_equivalence_check<F: Field + ?Sized>(
    f: &F,
    probe: &LimitProbe,
    deltas: &[f64],
    opts: &ScanOptions,
) -> Result<CompactnessReport> {
    let pointwise = bochner_passes(f, probe)?;
    let uc = uniform_continuity_test(f, probe, deltas, opts)?;
    let mut compact = pointwise;
    let mut counterexample = None;
    let mut notes = Vec::new();
    if compact {
        for c in &uc.top_points {
            let local = probe.with_window(GridWindow::centered(c, LOCAL_HALF_WIDTH, LOCAL_POINTS)?);
            let ok = match bochner_test(f, &local) {
                Ok(v) => v.passed,
                Err(Error::NoConvergentSubsequence { .. }) => false,
                Err(e) => return Err(e),
            };
            if !ok {
                compact = false;
                notes.push(format!("limits not uniform on the compact window centered at {c:?}"));
                counterexample = Some(c.clone());
                break;
            }
        }
    }
    let agreement = compact == (pointwise && uc.passed);
    if let Some(w) = &uc.witness {
        if !uc.passed {
            notes.push(format!("continuity witness a={:?}, diff {:.3e}", w.a, w.diff));
            counterexample.get_or_insert_with(|| w.a.clone());
        }
    }
    Ok(CompactnessReport {
        pointwise,
        uniform_continuity: uc.passed,
        compact,
        agreement,
        counterexample,
        notes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SupremumReport {
    pub sup_all: f64,
    pub sup_tail: f64,
    pub gap: f64,
}

/// Dense-sampling estimate of `sup |F|` over `|t| <= radius` and over
/// `a <= |t| <= radius`.
pub fn supremum_formula_check<F: Field + ?Sized>(
    f: &F,
    family: &SequenceFamily,
    a: f64,
    radius: f64,
    step: f64,
) -> Result<SupremumReport> {
    if !family.is_unbounded() {
        return Err(Error::FamilyNotUnbounded(family.describe()));
    }
    if radius < 4.0 * a || a < 0.0 {
        return Err(Error::PreconditionFailed(format!("need a >= 0 and radius >= 4a, got a={a}, radius={radius}")));
    }
    let n = f.arity_time();
    let ppa = ((2.0 * radius / step).round() as usize + 1).max(2);
    let win = GridWindow::cube(n, radius, ppa)?;
    let x = vec![0.0; f.arity_state()];
    let q = f.out_dim();
    let (sup_all, sup_tail) = (0..win.len())
        .into_par_iter()
        .map(|i| {
            let t = win.point(i);
            let r = t.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > radius {
                return (0.0, 0.0);
            }
            let mut out = vec![0.0; q];
            if f.eval_into(&t, &x, &mut out).is_err() {
                return (0.0, 0.0);
            }
            let m = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (m, if r >= a { m } else { 0.0 })
        })
        .reduce(|| (0.0, 0.0), |u, v| (u.0.max(v.0), u.1.max(v.1)));
    Ok(SupremumReport {
        sup_all,
        sup_tail,
        gap: sup_all - sup_tail,
    })
}
