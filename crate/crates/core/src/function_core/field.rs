use super::function::FunctionExpr;
use super::sets::GridWindow;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Anything that can be sampled like a `FunctionExpr`: closed forms, integral
/// operators evaluated by quadrature, and solver-backed solutions.
///
/// Batched results are laid out as `[(point, state, component)]`, row-major.
pub trait Field: Sync {
    fn label(&self) -> String;
    fn arity_time(&self) -> usize;
    fn arity_state(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn sup_bound(&self) -> Option<f64>;

    fn eval_into(&self, t: &[f64], x: &[f64], out: &mut [f64]) -> Result<()>;

    /// False near jump points of piecewise definitions.
    fn is_regular_point(&self, _t: &[f64], _x: &[f64]) -> bool {
        true
    }

    fn has_jumps(&self) -> bool {
        false
    }

    fn eval_points(&self, points: &[Vec<f64>], states: &[Vec<f64>]) -> Result<Vec<f64>> {
        let q = self.out_dim();
        let s = states.len();
        let chunks: Vec<Result<Vec<f64>>> = points
            .par_iter()
            .map(|p| {
                let mut buf = vec![0.0; s * q];
                for (j, x) in states.iter().enumerate() {
                    self.eval_into(p, x, &mut buf[j * q..(j + 1) * q])?;
                }
                Ok(buf)
            })
            .collect();
        let mut out = Vec::with_capacity(points.len() * s * q);
        for c in chunks {
            out.extend(c?);
        }
        Ok(out)
    }

    /// Values on `window` translated by `shift`.
    fn eval_window(&self, window: &GridWindow, shift: &[f64], states: &[Vec<f64>]) -> Result<Vec<f64>> {
        if shift.len() != window.dim {
            return Err(Error::dim(window.dim, shift.len(), "window shift"));
        }
        let pts: Vec<Vec<f64>> = (0..window.len())
            .map(|i| {
                let mut p = window.point(i);
                p.iter_mut().zip(shift).for_each(|(a, s)| *a += s);
                p
            })
            .collect();
        self.eval_points(&pts, states)
    }
}

/// Tolerance for treating a probe as sitting on a jump.
pub const JUMP_EPS: f64 = 1e-9;

impl Field for FunctionExpr {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn arity_time(&self) -> usize {
        self.arity_time
    }
    fn arity_state(&self) -> usize {
        self.arity_state
    }
    fn out_dim(&self) -> usize {
        self.body.len()
    }
    fn sup_bound(&self) -> Option<f64> {
        self.sup_bound
    }
    fn eval_into(&self, t: &[f64], x: &[f64], out: &mut [f64]) -> Result<()> {
        FunctionExpr::eval_into(self, t, x, out)
    }
    fn is_regular_point(&self, t: &[f64], x: &[f64]) -> bool {
        self.is_regular_at(t, x, JUMP_EPS)
    }
    fn has_jumps(&self) -> bool {
        FunctionExpr::has_jumps(self)
    }
}

/// Sample a field on a window for a single state.
pub fn sample_window<F: Field + ?Sized>(f: &F, window: &GridWindow, x: &[f64]) -> Result<Vec<f64>> {
    f.eval_window(window, &vec![0.0; window.dim], &[x.to_vec()])
}
