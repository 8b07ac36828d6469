use multiauto::function_core::catalogue::{self, SQRT2, TWO_PI};
use multiauto::function_core::{
    near_common_period, BoundedSetSpec, FunctionExpr, GridWindow, ScalarSource, SequenceFamily,
};
use multiauto::numerics::quadrature::{QuadratureScheme, Rule};
use multiauto::pde_experiments::*;
use multiauto::sequence_limits::LimitProbe;
use multiauto::Error;
use std::f64::consts::{FRAC_PI_2, PI};

fn probe(n: usize, step: f64) -> LimitProbe {
    let fam = SequenceFamily::diagonal(n, ScalarSource::Arithmetic { start: step, step }, 7);
    LimitProbe::with_defaults(fam, BoundedSetSpec::none()).unwrap()
}

fn sqrt2_period() -> f64 {
    near_common_period(&[1.0, SQRT2], 100_000).0
}

fn cfg(g: FunctionExpr, t: f64) -> HeatConfig {
    HeatConfig::new(g.arity_time, t, g, QuadratureScheme::default()).unwrap()
}

fn tone(omega: f64) -> FunctionExpr {
    FunctionExpr::parse("tone", 1, 0, &format!("(sin (mul {omega} t0))")).unwrap().with_sup_bound(1.0)
}

#[test]
fn kernel_value_and_symmetry() {
    assert!((heat_kernel(&[0.0], 1.0 / (4.0 * PI)).unwrap() - 1.0).abs() < 1e-15);
    for xi in [0.3, 1.7, 4.0] {
        assert_eq!(heat_kernel(&[xi], 0.7).unwrap(), heat_kernel(&[-xi], 0.7).unwrap());
        assert_eq!(heat_kernel(&[xi, -1.0], 0.7).unwrap(), heat_kernel(&[-xi, 1.0], 0.7).unwrap());
    }
    assert!(matches!(heat_kernel(&[0.0], 0.0), Err(Error::NonpositiveTime(_))));
    assert!(matches!(heat_kernel(&[0.0], -1.0), Err(Error::NonpositiveTime(_))));
}

#[test]
fn kernel_integrates_to_one_on_radius_twelve() {
    // mass outside [-12, 12] at t = 1 is erfc(6) < e^{-36}
    let nodes = QuadratureScheme::gauss(8, 2, 1e-10).nodes(-12.0, 12.0);
    let m = nodes.integrate(|x| heat_kernel(&[x], 1.0).unwrap());
    assert!((m - 1.0).abs() < 1e-8, "{m}");
}

#[test]
fn discrete_mass_within_bounds() {
    for t in [0.01, 0.1, 1.0, 3.0] {
        for n in [1, 2] {
            if n == 2 && t < 0.1 {
                continue;
            }
            let g = FunctionExpr::constant(1.0, n).with_sup_bound(1.0);
            let f = HeatField::new(&cfg(g, t)).unwrap();
            assert!(f.mass >= 1.0 - 1e-6 && f.mass <= 1.0 + 1e-13, "t={t} n={n} mass={}", f.mass);
            assert!(f.tail_mass < 1e-100);
        }
    }
}

#[test]
fn nonpositive_time_rejected() {
    let g = tone(1.0);
    assert!(matches!(
        HeatConfig::new(1, 0.0, g.clone(), QuadratureScheme::default()),
        Err(Error::NonpositiveTime(_))
    ));
    let unbounded = FunctionExpr::parse("x", 1, 0, "t0").unwrap();
    assert!(matches!(
        HeatConfig::new(1, 1.0, unbounded, QuadratureScheme::default()),
        Err(Error::MissingBound(_))
    ));
}

#[test]
fn constant_data_is_preserved() {
    let g = FunctionExpr::constant(1.0, 1).with_sup_bound(1.0);
    let w = GridWindow::cube(1, 10.0, 21).unwrap();
    let u = heat_solve(&cfg(g, 2.0), &w).unwrap();
    assert!(u.values.iter().all(|v| (v - 1.0).abs() < 1e-8));
    assert!(u.err_bound[0] < 1e-12);
}

#[test]
fn pure_tones_are_damped() {
    let w = GridWindow::cube(1, 6.0, 25).unwrap();
    for omega in [1.0, SQRT2, 3.0] {
        let u = heat_solve(&cfg(tone(omega), 1.0), &w).unwrap();
        for (i, p) in w.points().iter().enumerate() {
            let exact = (-omega * omega).exp() * (omega * p[0]).sin();
            assert!((u.values[i] - exact).abs() < 1e-6, "omega={omega} x={}", p[0]);
        }
    }
    let u = heat_solve(&cfg(tone(1.0), 1.0), &GridWindow::new(vec![FRAC_PI_2], vec![FRAC_PI_2 + 1.0], 2).unwrap()).unwrap();
    assert!((u.values[0] - 0.367879441171).abs() < 1e-6);
}

#[test]
fn two_tone_superposition() {
    let w = GridWindow::cube(1, 8.0, 33).unwrap();
    let u = heat_solve(&cfg(catalogue::sin_sqrt2(), 1.0), &w).unwrap();
    for (i, p) in w.points().iter().enumerate() {
        let x = p[0];
        let exact = (-1.0f64).exp() * x.sin() + (-2.0f64).exp() * (SQRT2 * x).sin();
        assert!((u.values[i] - exact).abs() < 1e-6);
    }
}

#[test]
fn small_time_and_two_dimensions() {
    let u = heat_solve(&cfg(tone(2.0), 0.05), &GridWindow::cube(1, 2.0, 9).unwrap()).unwrap();
    for (i, p) in GridWindow::cube(1, 2.0, 9).unwrap().points().iter().enumerate() {
        assert!((u.values[i] - (-0.2f64).exp() * (2.0 * p[0]).sin()).abs() < 1e-8);
    }
    let g = FunctionExpr::parse("ss", 2, 0, "(mul (sin t0) (sin t1))").unwrap().with_sup_bound(1.0);
    let w = GridWindow::cube(2, 1.5, 3).unwrap();
    let u = heat_solve(&cfg(g, 0.5), &w).unwrap();
    for (i, p) in w.points().iter().enumerate() {
        assert!((u.values[i] - (-1.0f64).exp() * p[0].sin() * p[1].sin()).abs() < 1e-8);
    }
}

#[test]
fn maximum_principle() {
    let g = FunctionExpr::parse("wavy", 1, 0, "(sin (mul 3 (cos t0)))").unwrap().with_sup_bound(1.0);
    let c = cfg(g.clone(), 0.3);
    let w = GridWindow::cube(1, 10.0, 41).unwrap();
    let u = heat_solve(&c, &w).unwrap();
    let eps = u.err_bound[0];
    let samples: Vec<f64> = (0..20001).map(|k| g.eval_scalar(&[-PI + k as f64 * TWO_PI / 20000.0], &[]).unwrap()).collect();
    let gmin = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let gmax = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for v in &u.values {
        assert!(*v >= gmin - eps - 1e-12 && *v <= gmax + eps + 1e-12);
    }
}

#[test]
fn heat_keeps_quasi_periodic_data_aa() {
    let r = heat_preserves_aa_check(&cfg(catalogue::sin_sqrt2(), 1.0), &probe(1, sqrt2_period())).unwrap();
    assert!(r.initial.passed && r.passed, "{r:?}");
    assert!(r.solution.forward_residual <= 1e-2);
    let c = FunctionExpr::constant(2.0, 1).with_sup_bound(2.0);
    let r = heat_preserves_aa_check(&cfg(c, 1.0), &probe(1, 1.0)).unwrap();
    assert!(r.passed && r.solution.forward_residual < 1e-12 && r.solution.backward_residual < 1e-12);
}

#[test]
fn heat_rejects_non_aa_initial_data() {
    let g = FunctionExpr::parse("step", 1, 0, "(tanh t0)").unwrap().with_sup_bound(1.0);
    let r = heat_preserves_aa_check(&cfg(g, 1.0), &probe(1, 1.0));
    assert!(matches!(r, Err(Error::PreconditionFailed(_)) | Err(Error::NoConvergentSubsequence { .. })), "{r:?}");
}

#[test]
fn fd_stencil_calibration() {
    for x in [0.0, 0.7, -3.0, 5.0] {
        assert!((fd_calibration(x, DEFAULT_H_FD).unwrap() - 2.0).abs() < 1e-5);
    }
}

#[test]
fn poisson_quasi_periodic() {
    let u = catalogue::sin_sqrt2();
    let p = probe(1, sqrt2_period());
    let r = poisson_synthetic_check(&u, &p, DEFAULT_H_FD).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.forcing.passed && r.solution.compact && r.solution.uniform_continuity);
    let f = u.laplacian(DEFAULT_H_FD).unwrap();
    for x in [-2.0, 0.3, 4.1] {
        let exact = -f64::sin(x) - 2.0 * (SQRT2 * x).sin();
        assert!((f.eval_scalar(&[x], &[]).unwrap() - exact).abs() < 1e-6);
    }
    // h^2/12 * (u'''' at h) vs at 2h: gap ~ h^2/4 * sup|u''''| = 1.25e-6
    assert!(r.richardson_gap < 2e-6, "{}", r.richardson_gap);
}

#[test]
fn poisson_constant_and_two_dimensional() {
    let c = FunctionExpr::constant(1.5, 1).with_sup_bound(1.5);
    let r = poisson_synthetic_check(&c, &probe(1, 1.0), DEFAULT_H_FD).unwrap();
    assert!(r.passed);
    assert_eq!(r.forcing.forward_residual, 0.0);

    let u = FunctionExpr::parse("ss", 2, 0, "(mul (sin t0) (sin t1))").unwrap().with_sup_bound(1.0);
    let p = LimitProbe::new(
        GridWindow::cube(2, 3.0, 13).unwrap(),
        BoundedSetSpec::none(),
        SequenceFamily::diagonal(2, ScalarSource::Arithmetic { start: TWO_PI, step: TWO_PI }, 7),
        16,
        1e-2,
        3e-2,
    )
    .unwrap();
    let r = poisson_synthetic_check(&u, &p, DEFAULT_H_FD).unwrap();
    assert!(r.passed, "{r:?}");
    let f = u.laplacian(DEFAULT_H_FD).unwrap();
    assert!((f.eval_scalar(&[0.4, 1.1], &[]).unwrap() + 2.0 * 0.4f64.sin() * 1.1f64.sin()).abs() < 1e-6);
}

#[test]
fn poisson_requires_bound() {
    let u = FunctionExpr::parse("x", 1, 0, "t0").unwrap();
    assert!(matches!(
        poisson_synthetic_check(&u, &probe(1, 1.0), DEFAULT_H_FD),
        Err(Error::MissingBound(_))
    ));
}

#[test]
fn trapezoid_rule_also_accepted() {
    let q = QuadratureScheme { rule: Rule::Trapezoid, panels_per_unit: 8, eps_tail: 1e-10 };
    let c = HeatConfig::new(1, 1.0, tone(1.0), q).unwrap();
    let u = heat_solve(&c, &GridWindow::cube(1, 1.0, 3).unwrap()).unwrap();
    assert!((u.values[2] - (-1.0f64).exp() * 1.0f64.sin()).abs() < 1e-8);
}
