use super::bochner::{extract_subsequence, LimitProbe};
use crate::error::{Error, Result};
use crate::function_core::{BoundedSetSpec, Field, GridWindow, SequenceFamily};
use serde::Serialize;

/// Half-line `origin + r * dir`, `r >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ray {
    pub origin: Vec<f64>,
    pub dir: Vec<f64>,
}

impl Ray {
    pub fn new(origin: Vec<f64>, dir: Vec<f64>) -> Self {
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        Ray {
            origin,
            dir: dir.into_iter().map(|d| d / norm).collect(),
        }
    }

    pub fn at(&self, r: f64) -> Vec<f64> {
        self.origin.iter().zip(&self.dir).map(|(o, d)| o + r * d).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeOptions {
    pub min_translate_norm: f64,
    /// Candidate translates drawn before the norm filter.
    pub draw_limit: usize,
    pub depth: usize,
    pub max_pairs: usize,
    pub tol_subseq: f64,
    pub rays: Vec<Ray>,
    pub radii: Vec<f64>,
    pub tol: f64,
    /// Relative growth allowed between successive ray samples.
    pub slack: f64,
}

impl DecomposeOptions {
    pub fn new(rays: Vec<Ray>) -> Self {
        DecomposeOptions {
            min_translate_norm: 50.0,
            draw_limit: 4096,
            depth: 16,
            max_pairs: 16,
            tol_subseq: 3e-2,
            rays,
            radii: vec![5.0, 10.0, 20.0, 40.0, 80.0],
            tol: 1e-2,
            slack: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RayDecay {
    pub ray: Ray,
    pub radii: Vec<f64>,
    /// `max |Q|` over states at each radius.
    pub q_abs: Vec<f64>,
    pub decays: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeReport {
    pub function_id: String,
    pub translates_used: usize,
    pub pairs_used: usize,
    /// `G` on the window, `[(point, state, component)]`.
    pub g_est: Vec<f64>,
    pub q_est: Vec<f64>,
    pub residual: f64,
    pub g_sup: f64,
    pub q_sup: f64,
    pub rays: Vec<RayDecay>,
    /// `Q` decays along every ray.
    pub passed: bool,
    pub witness_ray: Option<Ray>,
    pub notes: Vec<String>,
}

/// Translate pairs `(l, m)` with `|b_m - b_l| >= min_norm`; `m` is the deepest.
fn pair_shifts(translates: &[Vec<f64>], survivors: &[usize], min_norm: f64, max_pairs: usize) -> Vec<Vec<f64>> {
    let mut shifts = Vec::new();
    let m = *survivors.last().unwrap();
    for &l in survivors.iter().rev().skip(1) {
        let d: Vec<f64> = translates[m].iter().zip(&translates[l]).map(|(a, b)| a - b).collect();
        if d.iter().map(|v| v * v).sum::<f64>().sqrt() >= min_norm {
            shifts.push(d);
            if shifts.len() == max_pairs {
                break;
            }
        }
    }
    shifts
}

fn mean_translated<F: Field + ?Sized>(f: &F, points: &[Vec<f64>], states: &[Vec<f64>], shifts: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut acc: Option<Vec<f64>> = None;
    for s in shifts {
        let pts: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.iter().zip(s).map(|(a, b)| a + b).collect())
            .collect();
        let v = f.eval_points(&pts, states)?;
        match &mut acc {
            None => acc = Some(v),
            Some(a) => a.iter_mut().zip(&v).for_each(|(x, y)| *x += y),
        }
    }
    let mut a = acc.unwrap_or_default();
    let inv = 1.0 / shifts.len() as f64;
    a.iter_mut().for_each(|x| *x *= inv);
    Ok(a)
}

/// Split `F = G + Q` with `G` from the double limit over large translates.
pub fn asymptotic_decompose<F: Field + ?Sized>(
    f: &F,
    family: &SequenceFamily,
    state_set: &BoundedSetSpec,
    window: &GridWindow,
    opts: &DecomposeOptions,
) -> Result<DecomposeReport> {
    let mut large = Vec::new();
    let mut k = 0;
    while large.len() < opts.depth && k < opts.draw_limit {
        let b = family.element(k);
        if b.iter().map(|v| v * v).sum::<f64>().sqrt() >= opts.min_translate_norm {
            large.push(b);
        }
        k += 1;
    }
    if large.len() < 2 {
        return Err(Error::NoConvergentSubsequence {
            survivors: large.len(),
            note: format!("fewer than 2 translates with norm >= {}", opts.min_translate_norm),
        });
    }
    let depth = large.len().max(8);
    let filtered = SequenceFamily::explicit(large.clone())?;
    let probe = LimitProbe::new(window.clone(), state_set.clone(), filtered, depth, opts.tol_subseq, opts.tol_subseq)?;
    let sub = extract_subsequence(f, &probe)?;
    let shifts = pair_shifts(&sub.translates, &sub.indices, opts.min_translate_norm, opts.max_pairs);
    if shifts.is_empty() {
        return Err(Error::NoConvergentSubsequence {
            survivors: sub.indices.len(),
            note: format!("no surviving pair separated by >= {}", opts.min_translate_norm),
        });
    }
    let states = probe.states();
    let pts = window.points();
    let g_est = mean_translated(f, &pts, &states, &shifts)?;
    let f_vals = f.eval_points(&pts, &states)?;
    let q_est: Vec<f64> = f_vals.iter().zip(&g_est).map(|(a, b)| a - b).collect();
    let residual = f_vals
        .iter()
        .zip(g_est.iter().zip(&q_est))
        .fold(0.0f64, |m, (a, (g, q))| m.max((a - (g + q)).abs()));
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let q = f.out_dim();
    let s = states.len();
    let mut rays = Vec::new();
    let mut witness_ray = None;
    for ray in &opts.rays {
        let pts: Vec<Vec<f64>> = opts.radii.iter().map(|&r| ray.at(r)).collect();
        let g = mean_translated(f, &pts, &states, &shifts)?;
        let fv = f.eval_points(&pts, &states)?;
        let q_abs: Vec<f64> = (0..pts.len())
            .map(|i| sup(&fv[i * s * q..(i + 1) * s * q].iter().zip(&g[i * s * q..(i + 1) * s * q]).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .collect();
        let monotone = q_abs
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + opts.slack) || w[1] <= opts.tol * opts.slack);
        let decays = monotone && *q_abs.last().unwrap_or(&0.0) < opts.tol;
        if !decays && witness_ray.is_none() {
            witness_ray = Some(ray.clone());
        }
        rays.push(RayDecay {
            ray: ray.clone(),
            radii: opts.radii.clone(),
            q_abs,
            decays,
        });
    }
    let passed = rays.iter().all(|r| r.decays);
    let mut notes = sub.notes.clone();
    notes.push(format!(
        "G from {} translate pair(s) with |b_m - b_l| >= {}",
        shifts.len(),
        opts.min_translate_norm
    ));
    Ok(DecomposeReport {
        function_id: f.label(),
        translates_used: sub.indices.len(),
        pairs_used: shifts.len(),
        g_sup: sup(&g_est),
        q_sup: sup(&q_est),
        g_est,
        q_est,
        residual,
        rays,
        passed,
        witness_ray,
        notes,
    })
}
