use crate::error::{Error, Result};
use crate::function_core::{BoundedSetSpec, Field, GridWindow, SequenceFamily};
use rayon::prelude::*;
use serde::Serialize;

/// What to probe, along which translates, and how tightly.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitProbe {
    pub window: GridWindow,
    pub state_set: BoundedSetSpec,
    pub sequence: SequenceFamily,
    pub depth: usize,
    pub tol_limit: f64,
    pub tol_subseq: f64,
}

pub const DEFAULT_DEPTH: usize = 64;
pub const DEFAULT_TOL_LIMIT: f64 = 1e-2;
pub const DEFAULT_TOL_SUBSEQ: f64 = 3e-2;

impl LimitProbe {
    pub fn new(
        window: GridWindow,
        state_set: BoundedSetSpec,
        sequence: SequenceFamily,
        depth: usize,
        tol_limit: f64,
        tol_subseq: f64,
    ) -> Result<Self> {
        if depth < 8 {
            return Err(Error::PreconditionFailed(format!("depth {depth} < 8")));
        }
        if !(tol_limit > 0.0) || tol_subseq < tol_limit {
            return Err(Error::PreconditionFailed(format!(
                "need 0 < tol_limit <= tol_subseq, got {tol_limit}, {tol_subseq}"
            )));
        }
        if window.dim != sequence.ambient_dim {
            return Err(Error::dim(window.dim, sequence.ambient_dim, "window vs family dimension"));
        }
        Ok(LimitProbe {
            window,
            state_set,
            sequence,
            depth,
            tol_limit,
            tol_subseq,
        })
    }

    /// Default tolerances and depth on the window `[-5, 5]^n` with 33 points per axis.
    pub fn with_defaults(sequence: SequenceFamily, state_set: BoundedSetSpec) -> Result<Self> {
        let window = GridWindow::cube(sequence.ambient_dim, 5.0, 33)?;
        Self::new(window, state_set, sequence, DEFAULT_DEPTH, DEFAULT_TOL_LIMIT, DEFAULT_TOL_SUBSEQ)
    }

    pub fn with_window(&self, window: GridWindow) -> Self {
        LimitProbe {
            window,
            ..self.clone()
        }
    }

    pub fn states(&self) -> Vec<Vec<f64>> {
        self.state_set.samples(self.sequence.seed)
    }
}

/// Result of the greedy subsequence extraction.
#[derive(Debug, Clone)]
pub struct Subsequence {
    pub indices: Vec<usize>,
    pub translates: Vec<Vec<f64>>,
    /// Cluster means, `[(point, state, component)]`.
    pub limit_table: Vec<f64>,
    /// Translate values per drawn index, same layout as `limit_table`.
    pub values: Vec<Vec<f64>>,
    /// Probes excluded because some translate hits a jump.
    pub regular: Vec<bool>,
    pub notes: Vec<String>,
}

/// Largest cluster of width `<= width` among `(value, index)` pairs; ties go
/// to the cluster whose smallest index is earliest.
fn largest_cluster(vals: &mut [(f64, usize)], width: f64) -> Vec<usize> {
    vals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best: Option<(usize, usize, usize)> = None; // (count, min_index, start)
    let mut j = 0;
    for i in 0..vals.len() {
        if j < i {
            j = i;
        }
        while j + 1 < vals.len() && vals[j + 1].0 - vals[i].0 <= width {
            j += 1;
        }
        let count = j - i + 1;
        let min_idx = vals[i..=j].iter().map(|v| v.1).min().unwrap();
        let better = match best {
            None => true,
            Some((c, m, _)) => count > c || (count == c && min_idx < m),
        };
        if better {
            best = Some((count, min_idx, i));
        }
    }
    let (count, _, start) = best.expect("non-empty cluster input");
    let mut out: Vec<usize> = vals[start..start + count].iter().map(|v| v.1).collect();
    out.sort_unstable();
    out
}

pub fn extract_subsequence<F: Field + ?Sized>(f: &F, probe: &LimitProbe) -> Result<Subsequence> {
    if f.arity_time() != probe.window.dim {
        return Err(Error::dim(f.arity_time(), probe.window.dim, "function vs window dimension"));
    }
    if f.arity_state() != probe.state_set.dim {
        return Err(Error::dim(f.arity_state(), probe.state_set.dim, "function vs state set dimension"));
    }
    let states = probe.states();
    let translates = probe.sequence.elements(probe.depth);
    let values: Vec<Vec<f64>> = translates
        .iter()
        .map(|b| f.eval_window(&probe.window, b, &states))
        .collect::<Result<_>>()?;
    let q = f.out_dim();
    let s = states.len();
    let n_probe = probe.window.len() * s * q;

    let mut notes = Vec::new();
    let regular: Vec<bool> = if f.has_jumps() {
        let flags: Vec<bool> = (0..probe.window.len() * s)
            .into_par_iter()
            .map(|ps| {
                let p = probe.window.point(ps / s);
                let x = &states[ps % s];
                std::iter::once(&vec![0.0; p.len()]).chain(translates.iter()).all(|b| {
                    let tp: Vec<f64> = p.iter().zip(b).map(|(a, c)| a + c).collect();
                    f.is_regular_point(&tp, x)
                })
            })
            .collect();
        let skipped = flags.iter().filter(|r| !**r).count();
        if skipped > 0 {
            notes.push(format!("{skipped} probe(s) at jump points skipped; piecewise-continuous function"));
        }
        flags.iter().flat_map(|r| std::iter::repeat_n(*r, q)).collect()
    } else {
        vec![true; n_probe]
    };

    if f.sup_bound().is_none() {
        let max = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        notes.push(format!("no sup_bound declared; sampled max |F| = {max:.6e}"));
    }

    let mut survivors: Vec<usize> = (0..probe.depth).collect();
    let mut buf = Vec::with_capacity(probe.depth);
    for j in 0..n_probe {
        if !regular[j] {
            continue;
        }
        buf.clear();
        buf.extend(survivors.iter().map(|&k| (values[k][j], k)));
        survivors = largest_cluster(&mut buf, probe.tol_subseq);
        if survivors.len() < 2 {
            let mut note = format!("cluster collapsed at probe {j}");
            if f.sup_bound().is_none() {
                note.push_str("; translates diverge, function appears unbounded along the family");
            }
            return Err(Error::NoConvergentSubsequence {
                survivors: survivors.len(),
                note,
            });
        }
    }

    let limit_table = (0..n_probe)
        .map(|j| anchored_mean(survivors.iter().map(|&k| values[k][j])))
        .collect();
    Ok(Subsequence {
        indices: survivors,
        translates,
        limit_table,
        values,
        regular,
        notes,
    })
}

/// Mean computed relative to the first value, exact when all values agree.
pub(crate) fn anchored_mean(mut it: impl Iterator<Item = f64>) -> f64 {
    let first = it.next().unwrap_or(0.0);
    let (sum, count) = it.fold((0.0, 1usize), |(s, c), v| (s + (v - first), c + 1));
    first + sum / count as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub tol_limit: f64,
    pub tol_subseq: f64,
}

/// Outcome of the two-limit test.
#[derive(Debug, Clone, Serialize)]
pub struct BochnerVerdict {
    pub function_id: String,
    pub family: String,
    pub depth: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub survivors: usize,
    pub subsequence_indices: Vec<usize>,
    pub forward_residual: f64,
    pub backward_residual: f64,
    pub passed: bool,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub limit_table: Vec<f64>,
}

impl BochnerVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

fn max_abs_diff(a: &[f64], b: &[f64], mask: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mask)
        .filter(|(_, m)| **m)
        .fold(0.0f64, |acc, ((x, y), _)| acc.max((x - y).abs()))
}

/// Mean of `F(t - b_l + b_m)` over surviving `m != l`, `l` the deepest survivor.
pub(crate) fn backward_reconstruction<F: Field + ?Sized>(
    f: &F,
    window: &GridWindow,
    states: &[Vec<f64>],
    sub: &Subsequence,
) -> Result<Vec<f64>> {
    let l = *sub.indices.last().expect("at least two survivors");
    let bl = &sub.translates[l];
    let others: Vec<usize> = sub.indices.iter().copied().filter(|&m| m != l).collect();
    let rows: Vec<Vec<f64>> = others
        .iter()
        .map(|&m| {
            let shift: Vec<f64> = sub.translates[m].iter().zip(bl).map(|(a, b)| a - b).collect();
            f.eval_window(window, &shift, states)
        })
        .collect::<Result<_>>()?;
    Ok((0..sub.limit_table.len())
        .map(|j| anchored_mean(rows.iter().map(|r| r[j])))
        .collect())
}

pub fn bochner_test<F: Field + ?Sized>(f: &F, probe: &LimitProbe) -> Result<BochnerVerdict> {
    let sub = extract_subsequence(f, probe)?;
    let states = probe.states();
    let deepest = *sub.indices.last().unwrap();
    let forward_residual = max_abs_diff(&sub.values[deepest], &sub.limit_table, &sub.regular);
    let back = backward_reconstruction(f, &probe.window, &states, &sub)?;
    let base = f.eval_window(&probe.window, &vec![0.0; probe.window.dim], &states)?;
    let backward_residual = max_abs_diff(&back, &base, &sub.regular);
    let passed = forward_residual <= probe.tol_limit && backward_residual <= probe.tol_limit;
    let mut notes = sub.notes.clone();
    notes.push(format!(
        "almost automorphic at depth {}, tol {:e}: {}",
        probe.depth,
        probe.tol_limit,
        if passed { "pass" } else { "fail" }
    ));
    Ok(BochnerVerdict {
        function_id: f.label(),
        family: probe.sequence.describe(),
        depth: probe.depth,
        seed: probe.sequence.seed,
        tolerances: Tolerances {
            tol_limit: probe.tol_limit,
            tol_subseq: probe.tol_subseq,
        },
        survivors: sub.indices.len(),
        subsequence_indices: sub.indices,
        forward_residual,
        backward_residual,
        passed,
        notes,
        limit_table: sub.limit_table,
    })
}

/// True iff the test runs and passes; a failed extraction counts as a fail.
pub fn bochner_passes<F: Field + ?Sized>(f: &F, probe: &LimitProbe) -> Result<bool> {
    match bochner_test(f, probe) {
        Ok(v) => Ok(v.passed),
        Err(Error::NoConvergentSubsequence { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Bochner test on the central-difference derivative along `axis`.
pub fn derivative_aa_check(
    f: &crate::function_core::FunctionExpr,
    axis: usize,
    probe: &LimitProbe,
    h_fd: f64,
) -> Result<BochnerVerdict> {
    let d = f.central_difference(axis, h_fd)?;
    let mut v = bochner_test(&d, probe)?;
    v.notes.push(format!(
        "central difference step {h_fd:e}; truncation error O(h^2) = {:.1e} times sup|F'''|/6",
        h_fd * h_fd
    ));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_tie_break_prefers_earliest_index() {
        let mut v = vec![(0.0, 3), (0.01, 4), (1.0, 0), (1.01, 1)];
        assert_eq!(largest_cluster(&mut v, 0.02), vec![0, 1]);
    }

    #[test]
    fn cluster_picks_largest() {
        let mut v = vec![(0.0, 0), (5.0, 1), (5.01, 2), (5.02, 3)];
        assert_eq!(largest_cluster(&mut v, 0.03), vec![1, 2, 3]);
    }
}
