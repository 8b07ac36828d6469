use super::system::MemorySystem;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::Serialize;
use std::io::Write;

/// Relative change under step halving above which a table is rejected.
pub const HALVING_TOL: f64 = 1e-3;
/// Slack on the exponential envelope.
pub const ENVELOPE_SLACK: f64 = 0.05;

/// Sampled resolvent `R(t_k)` on a uniform grid, row-major `d x d` per time.
#[derive(Debug, Clone)]
pub struct ResolventTable {
    pub dim: usize,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub step: f64,
    /// `max_k |R_dt(t_k) - R_{dt/2}(t_k)|_inf` before extrapolation.
    pub halving_err: f64,
    pub m_est: f64,
    pub delta_est: f64,
    pub notes: Vec<String>,
}

/// Outcome of the exponential-stability check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropertyR {
    pub m_est: f64,
    pub delta_est: f64,
    pub passed: bool,
}

/// Induced sup norm (largest absolute row sum).
pub(crate) fn norm_inf(m: &[f64], d: usize) -> f64 {
    (0..d).map(|i| m[i * d..(i + 1) * d].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.ncols();
    (0..m.nrows() * d).map(|i| m[(i / d, i % d)]).collect()
}

fn matmul(a: &[f64], b: &[f64], d: usize, out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = s;
        }
    }
}

/// Explicit midpoint in time, trapezoid in the memory integral.
fn integrate(sys: &MemorySystem, t_max: f64, dt: f64) -> Result<Vec<Vec<f64>>> {
    let d = sys.dim;
    let dd = d * d;
    let steps = (t_max / dt - 1e-9).ceil() as usize;
    let a = row_major(&sys.a);
    let has_memory = sys.memory.is_some();
    // F on the half-step lattice j dt / 2
    let fh: Vec<f64> = if has_memory {
        (0..=2 * steps + 2).map(|j| sys.memory_at(j as f64 * 0.5 * dt)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let mut r: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let mut id = vec![0.0; dd];
    (0..d).for_each(|i| id[i * d + i] = 1.0);
    r.push(id);
    let mut s = vec![0.0; dd];
    let mut tmp = vec![0.0; dd];
    let mut half = vec![0.0; dd];
    // S(t) = int_0^t F(t - s) R(s) ds by trapezoid over the grid with F at lattice index `lag(k)`
    let memory_sum = |r: &[Vec<f64>], n: usize, lag: &dyn Fn(usize) -> usize, out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        if n == 0 {
            return;
        }
        for (k, rk) in r.iter().enumerate().take(n + 1) {
            let w = if k == 0 || k == n { 0.5 * dt } else { dt } * fh[lag(k)];
            out.iter_mut().zip(rk).for_each(|(o, v)| *o += w * v);
        }
    };
    for n in 0..steps {
        let rn = r[n].clone();
        // slope at t_n
        if has_memory {
            memory_sum(&r, n, &|k| 2 * (n - k), &mut s);
        }
        tmp.iter_mut().zip(&rn).zip(&s).for_each(|((t, a), b)| *t = a + b);
        let mut slope = vec![0.0; dd];
        matmul(&a, &tmp, d, &mut slope);
        half.iter_mut().zip(&rn).zip(&slope).for_each(|((h, a), b)| *h = a + 0.5 * dt * b);
        // S at t_n + dt/2: grid part plus the half panel [t_n, t_n + dt/2]
        if has_memory {
            s.iter_mut().for_each(|v| *v = 0.0);
            for (k, rk) in r.iter().enumerate().take(n + 1) {
                let w = if n == 0 { 0.0 } else if k == 0 || k == n { 0.5 * dt } else { dt } * fh[2 * (n - k) + 1];
                s.iter_mut().zip(rk).for_each(|(o, v)| *o += w * v);
            }
            let q = 0.25 * dt;
            s.iter_mut()
                .zip(&rn)
                .zip(&half)
                .for_each(|((o, a), b)| *o += q * (fh[1] * a + fh[0] * b));
        }
        tmp.iter_mut().zip(&half).zip(&s).for_each(|((t, a), b)| *t = a + b);
        matmul(&a, &tmp, d, &mut slope);
        let next: Vec<f64> = rn.iter().zip(&slope).map(|(a, b)| a + dt * b).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepUnstable { rel: f64::INFINITY });
        }
        r.push(next);
    }
    Ok(r)
}

impl ResolventTable {
    /// Integrates at `dt` and `dt / 2` and keeps the extrapolated values; no decay requirement.
    pub fn integrate(sys: &MemorySystem, t_max: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_max > 0.0) {
            return Err(Error::PreconditionFailed(format!("need dt > 0 and t_max > 0, got {dt}, {t_max}")));
        }
        let d = sys.dim;
        let norm_a = norm_inf(&row_major(&sys.a), d);
        let sup_f = if sys.memory.is_some() {
            let n = (t_max / dt).ceil() as usize;
            (0..=n).map(|k| sys.memory_at(k as f64 * dt).map(f64::abs)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max)
        } else {
            0.0
        };
        let stiffness = dt * (norm_a + t_max * sup_f * norm_a);
        if stiffness >= 0.5 {
            return Err(Error::PreconditionFailed(format!(
                "dt (|A| + t_max sup|B|) = {stiffness:.3} must stay below 0.5"
            )));
        }
        let coarse = integrate(sys, t_max, dt)?;
        let fine = integrate(sys, t_max, 0.5 * dt)?;
        let mut halving_err = 0.0f64;
        let mut scale = 0.0f64;
        let values: Vec<Vec<f64>> = coarse
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let f = &fine[2 * k];
                let diff: Vec<f64> = f.iter().zip(c).map(|(a, b)| a - b).collect();
                halving_err = halving_err.max(norm_inf(&diff, d));
                scale = scale.max(norm_inf(c, d));
                f.iter().zip(c).map(|(a, b)| (4.0 * a - b) / 3.0).collect()
            })
            .collect();
        let rel = halving_err / scale.max(f64::MIN_POSITIVE);
        if rel > HALVING_TOL {
            return Err(Error::StepUnstable { rel });
        }
        let times: Vec<f64> = (0..values.len()).map(|k| k as f64 * dt).collect();
        let mut table = ResolventTable {
            dim: d,
            times,
            values,
            step: dt,
            halving_err,
            m_est: f64::NAN,
            delta_est: f64::NAN,
            notes: vec![format!(
                "explicit midpoint with trapezoid memory at dt={dt:e} and dt/2, Richardson combined; halving change {halving_err:.2e}"
            )],
        };
        let (m, delta) = table.fit_envelope();
        table.m_est = m;
        table.delta_est = delta;
        Ok(table)
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn matrix(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.values[k])
    }

    pub fn norms(&self) -> Vec<f64> {
        self.values.iter().map(|v| norm_inf(v, self.dim)).collect()
    }

    /// Decay rate from a log-linear fit of a moving-window maximum over the
    /// tail half, then the smallest constant making the envelope hold.
    fn fit_envelope(&self) -> (f64, f64) {
        let norms = self.norms();
        let n = norms.len();
        let w = ((n - 1) / 4).max(1);
        let env: Vec<f64> = (0..n).map(|k| norms[k..(k + w + 1).min(n)].iter().cloned().fold(0.0, f64::max)).collect();
        let (lo, hi) = (n / 2, n.saturating_sub(w).max(n / 2 + 2).min(n));
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        let cnt = (hi - lo) as f64;
        for k in lo..hi {
            let x = self.times[k];
            let y = env[k].max(f64::MIN_POSITIVE).ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let denom = cnt * sxx - sx * sx;
        let slope = if denom > 0.0 { (cnt * sxy - sx * sy) / denom } else { 0.0 };
        let delta = -slope;
        let m = norms
            .iter()
            .zip(&self.times)
            .map(|(v, t)| v * (delta * t).exp())
            .fold(0.0, f64::max);
        (m, delta)
    }

    /// Linear interpolation of `R(t)` for `0 <= t <= t_max`.
    pub fn at(&self, t: f64) -> Result<Vec<f64>> {
        if t < 0.0 || t > self.t_max() * (1.0 + 1e-12) {
            return Err(Error::HorizonExceedsTable { horizon: t, t_max: self.t_max() });
        }
        let x = t / self.step;
        let k = (x.floor() as usize).min(self.values.len() - 2);
        let w = x - k as f64;
        Ok(self.values[k].iter().zip(&self.values[k + 1]).map(|(a, b)| (1.0 - w) * a + w * b).collect())
    }

    /// CSV `t,r11,r12,...,rdd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        for i in 1..=self.dim {
            for j in 1..=self.dim {
                header.push(format!("r{i}{j}"));
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, v) in self.times.iter().zip(&self.values) {
            let row: Vec<String> = std::iter::once(*t).chain(v.iter().copied()).map(|x| format!("{x:e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii csv")
    }
}

/// Resolvent on `[0, t_max]` whose envelope fit must decay.
pub fn build_resolvent(sys: &MemorySystem, t_max: f64, dt: f64) -> Result<ResolventTable> {
    let table = ResolventTable::integrate(sys, t_max, dt)?;
    if !(table.delta_est > 0.0) {
        return Err(Error::NoDecay { delta_est: table.delta_est });
    }
    Ok(table)
}

pub fn verify_property_r(table: &ResolventTable) -> PropertyR {
    let (m, delta) = (table.m_est, table.delta_est);
    let holds = table
        .norms()
        .iter()
        .zip(&table.times)
        .all(|(v, t)| *v <= m * (-delta * t).exp() * (1.0 + ENVELOPE_SLACK));
    PropertyR {
        m_est: m,
        delta_est: delta,
        passed: holds && delta > 0.0 && m.is_finite(),
    }
}
