use multiauto::function_core::FunctionExpr;
use multiauto::memory_material::*;
use multiauto::Error;
use nalgebra::DMatrix;

fn scalar(a: f64, memory: Option<&str>) -> MemorySystem {
    let f = memory.map(|t| FunctionExpr::parse("F", 1, 0, t).unwrap());
    MemorySystem::new(DMatrix::from_element(1, 1, a), f, vec![1.0]).unwrap()
}

/// `A = -2`, `B(t) = -e^{-t}`.
fn memory_example() -> MemorySystem {
    scalar(-2.0, Some("(mul 0.5 (exp (neg t0)))"))
}

/// RK4 on `R' = -2R - m`, `m' = R - m` (with `m = int e^{-(t-s)} R(s) ds`), plus forcing.
fn augmented_rk4(u0: f64, t_end: f64, h: f64, forcing: &dyn Fn(f64, f64) -> f64) -> Vec<(f64, f64)> {
    let rhs = |t: f64, y: [f64; 2]| [-2.0 * y[0] - y[1] + forcing(t, y[0]), y[0] - y[1]];
    let n = (t_end / h).round() as usize;
    let mut y = [u0, 0.0];
    let mut out = vec![(0.0, u0)];
    for k in 0..n {
        let t = k as f64 * h;
        let k1 = rhs(t, y);
        let k2 = rhs(t + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(t + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(((k + 1) as f64 * h, y[0]));
    }
    out
}

/// Taylor series with scaling and squaring.
fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.abs().row_sum().max();
    let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let b = a / 2f64.powi(s);
    let mut term = DMatrix::identity(a.nrows(), a.ncols());
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

#[test]
fn pure_decay_matches_exponential() {
    let t = build_resolvent(&scalar(-1.0, None), 5.0, 1e-3).unwrap();
    assert_eq!(t.values[0], vec![1.0]);
    for (k, time) in t.times.iter().enumerate() {
        assert!((t.values[k][0] - (-time).exp()).abs() < 1e-6);
    }
    let p = verify_property_r(&t);
    assert!(p.passed);
    assert!((p.m_est - 1.0).abs() < 1e-6 && (p.delta_est - 1.0).abs() < 1e-4, "{p:?}");
}

#[test]
fn memory_example_matches_augmented_ode() {
    let t = build_resolvent(&memory_example(), 5.0, 1e-3).unwrap();
    let oracle = augmented_rk4(1.0, 1.0, 1e-4, &|_, _| 0.0);
    let r1 = t.values[1000][0];
    assert!((r1 - oracle.last().unwrap().1).abs() < 1e-4);
    // closed form e^{-3t/2}(cos wt - sin wt / (2w)), w = sqrt(3)/2
    let w = 3f64.sqrt() / 2.0;
    let exact = (-1.5f64).exp() * (w.cos() - w.sin() / (2.0 * w));
    assert!((r1 - exact).abs() < 1e-8, "{r1} vs {exact}");
    assert!((oracle.last().unwrap().1 - exact).abs() < 1e-12);
    let p = verify_property_r(&t);
    assert!(p.passed && p.delta_est > 0.0, "{p:?}");
    let long = build_resolvent(&memory_example(), 20.0, 1e-2).unwrap();
    assert!((long.delta_est - 1.5).abs() < 0.2, "{}", long.delta_est);
}

#[test]
fn unstable_generator_has_no_decay() {
    let sys = scalar(1.0, None);
    let t = ResolventTable::integrate(&sys, 3.0, 1e-3).unwrap();
    assert!(!verify_property_r(&t).passed, "{:?}", verify_property_r(&t));
    assert!(matches!(build_resolvent(&sys, 3.0, 1e-3), Err(Error::NoDecay { .. })));
    assert!(!sys.is_stable());
}

#[test]
fn laplacian_block_matches_matrix_exponential() {
    let a = laplacian1d(8, 1.0);
    let sys = MemorySystem::new(a.clone(), None, vec![0.0; 8]).unwrap();
    assert!(sys.gamma > 0.0);
    let t = build_resolvent(&sys, 5.0, 1e-3).unwrap();
    let mut worst = 0.0f64;
    for k in (0..t.times.len()).step_by(250) {
        let e = expm(&(&a * t.times[k]));
        worst = worst.max((t.matrix(k) - e).abs().max());
    }
    assert!(worst < 1e-6, "{worst}");
    assert!(verify_property_r(&t).passed);
}

#[test]
fn table_satisfies_its_equation() {
    let sys = memory_example();
    let dt = 1e-3;
    // too short a table to see the decay, so skip the envelope requirement
    let t = ResolventTable::integrate(&sys, 2.0, dt).unwrap();
    let r: Vec<f64> = t.values.iter().map(|v| v[0]).collect();
    let mut worst = 0.0f64;
    for k in (1..r.len() - 1).step_by(97) {
        let deriv = (r[k + 1] - r[k - 1]) / (2.0 * dt);
        let mem: f64 = (0..=k)
            .map(|j| {
                let w = if j == 0 || j == k { 0.5 * dt } else { dt };
                w * -(-((k - j) as f64 * dt)).exp() * r[j]
            })
            .sum();
        worst = worst.max((deriv + 2.0 * r[k] - mem).abs());
    }
    assert!(worst < 10.0 * dt * dt, "{worst}");
}

#[test]
fn zero_forcing_gives_resolvent_orbit() {
    let sys = memory_example();
    let t = build_resolvent(&sys, 5.0, 1e-2).unwrap();
    let s = solve_mild_nonlocal(&sys, &t, 5.0, 1e-10, None).unwrap();
    assert_eq!(s.trace.k_final, 1);
    for (k, v) in s.trace.solution().iter().enumerate() {
        assert_eq!(*v, t.values[k][0]);
    }
}

fn nonlinear_system() -> MemorySystem {
    let f = FunctionExpr::parse(
        "f",
        1,
        1,
        "(mul 0.05 (add (sin t0) (sin (mul 1.4142135623730951 t0))) (tanh x0))",
    )
    .unwrap()
    .with_lipschitz(0.1);
    memory_example()
        .with_forcing(f)
        .unwrap()
        .with_nonlocal(Nonlocal::MeanClip { coeff: 0.05, clip: 1.0 })
}

#[test]
fn nonlocal_mild_solution_matches_shooting_oracle() {
    let sys = nonlinear_system();
    let table = build_resolvent(&sys, 10.0, 1e-3).unwrap();
    let tol = 1e-9;
    let s = solve_mild_nonlocal(&sys, &table, 10.0, tol, Some(1.0)).unwrap();
    let tr = &s.trace;
    let theta = tr.certificate.theta;
    assert!(theta < 0.3, "{theta}");
    assert!(tr.converged);
    assert!(tr.observed_ratio().unwrap() <= 1.1 * theta);
    assert!(tr.residual <= tol / (1.0 - theta) + 1e-4);
    assert_eq!(s.ball_ok, Some(true));

    // shoot on the constant c = g(u)
    let forcing = |t: f64, u: f64| 0.05 * (t.sin() + (std::f64::consts::SQRT_2 * t).sin()) * u.tanh();
    let mut c = 0.0;
    let mut path = Vec::new();
    for _ in 0..40 {
        path = augmented_rk4(1.0 + c, 10.0, 1e-3, &forcing);
        let n = path.len() - 1;
        let mean = (path[1..n].iter().map(|p| p.1).sum::<f64>() + 0.5 * (path[0].1 + path[n].1)) / n as f64;
        c = 0.05 * mean.clamp(-1.0, 1.0);
    }
    let sol = tr.solution();
    let worst = (0..sol.len()).map(|k| (sol[k] - path[k].1).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn large_nonlocal_constant_is_rejected() {
    let sys = nonlinear_system().with_nonlocal(Nonlocal::MeanClip { coeff: 5.0, clip: 1.0 });
    let table = build_resolvent(&sys, 5.0, 1e-2).unwrap();
    assert!(matches!(
        solve_mild_nonlocal(&sys, &table, 5.0, 1e-6, None),
        Err(Error::CertificateInvalid { .. })
    ));
    assert!(matches!(
        solve_mild_nonlocal(&nonlinear_system(), &table, 6.0, 1e-6, None),
        Err(Error::HorizonExceedsTable { .. })
    ));
}

#[test]
fn coarse_step_is_refused() {
    assert!(matches!(
        ResolventTable::integrate(&scalar(-10.0, None), 1.0, 0.1),
        Err(Error::PreconditionFailed(_))
    ));
}

#[test]
fn csv_and_matrix_parsing() {
    let t = build_resolvent(&MemorySystem::new(laplacian1d(2, 1.0), None, vec![0.0; 2]).unwrap(), 1.0, 0.01).unwrap();
    let csv = t.csv_string();
    assert!(csv.starts_with("t,r11,r12,r21,r22\n"));
    assert_eq!(csv.lines().count(), t.times.len() + 1);
    assert_eq!(parse_matrix("laplacian1d(3, 0.5)").unwrap(), laplacian1d(3, 0.5));
    assert_eq!(parse_matrix("-2, 1; 0 -1").unwrap(), DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 0.0, -1.0]));
    assert!(parse_matrix("1 2; 3").is_err());
    assert!(parse_matrix("laplacian1d(0, 1)").is_err());
}

#[test]
fn memory_profile_bound_ratio() {
    let sys = memory_example();
    let r = sys.memory_bound_ratio(1.0, 2.0, 5.0, 50).unwrap();
    assert!(r.is_finite() && r > 0.0);
    assert_eq!(scalar(-1.0, None).memory_bound_ratio(1.0, 2.0, 5.0, 50).unwrap(), 0.0);
}
