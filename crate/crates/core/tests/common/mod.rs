//! Oracles shared by the integration tests.

use multiauto::function_core::catalogue;
use multiauto::function_core::GridWindow;
use nalgebra::{DMatrix, DVector};

/// Hat-function weights of `e^{-r}` on the half-line lattice `r = j h`.
pub fn hat_weights(h: f64, count: usize) -> Vec<f64> {
    let c = ((h).exp() + (-h).exp() - 2.0) / h;
    (0..count)
        .map(|j| if j == 0 { 1.0 - (1.0 - (-h).exp()) / h } else { (-(j as f64) * h).exp() * c })
        .collect()
}

/// Damped Newton on the clamped collocation system of the worked example.
pub fn newton_oracle(gamma: f64, window: &GridWindow) -> Vec<f64> {
    let m = window.points_per_axis;
    let h = window.spacing(0);
    let depth = (40.0 / h).ceil() as usize;
    let w = hat_weights(h, depth + 1);
    let g = catalogue::vie_g();
    let pts = window.points();
    let n = pts.len();
    let gv: Vec<f64> = pts.iter().map(|p| g.eval_scalar(p, &[]).unwrap()).collect();
    // terms[i] = list of (weight, eta, clamped index)
    let mut terms: Vec<Vec<(f64, [f64; 2], usize)>> = vec![Vec::new(); n];
    for (i, p) in pts.iter().enumerate() {
        let (a, b) = (i / m, i % m);
        for j1 in 0..=depth {
            for j2 in 0..=depth {
                let wt = w[j1] * w[j2];
                let eta = [p[0] - j1 as f64 * h, p[1] - j2 as f64 * h];
                let ia = (a as isize - j1 as isize).max(0) as usize;
                let ib = (b as isize - j2 as isize).max(0) as usize;
                terms[i].push((wt, eta, ia * m + ib));
            }
        }
    }
    let phi = |eta: &[f64; 2], u: f64| gamma * eta[0].cos() * eta[1].sin() * (1.0 + u.abs()).ln();
    let dphi = |eta: &[f64; 2], u: f64| gamma * eta[0].cos() * eta[1].sin() * u.signum() / (1.0 + u.abs());
    let resid = |u: &DVector<f64>| -> DVector<f64> {
        DVector::from_fn(n, |i, _| {
            u[i] - gv[i] - terms[i].iter().map(|(wt, eta, k)| wt * phi(eta, u[*k])).sum::<f64>()
        })
    };
    let mut u = DVector::from_vec(gv.clone());
    let mut r = resid(&u);
    for _ in 0..30 {
        if r.amax() < 1e-14 {
            break;
        }
        let mut jac = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for (wt, eta, k) in &terms[i] {
                jac[(i, *k)] -= wt * dphi(eta, u[*k]);
            }
        }
        let step = jac.lu().solve(&r).unwrap();
        let mut lambda = 1.0;
        loop {
            let trial = &u - &step * lambda;
            let rt = resid(&trial);
            if rt.amax() < r.amax() || lambda < 1e-4 {
                u = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
        }
    }
    u.as_slice().to_vec()
}
