use multiauto::cli_runner::{RawConfig, Section};
use multiauto::fixed_point_solvers::{ContractionCertificate, VieProblem};
use multiauto::function_core::{FunctionExpr, GridWindow};
use multiauto::memory_material::build_resolvent;
use multiauto::memory_material::MemorySystem;
use multiauto::numerics::quadrature::QuadratureScheme;
use multiauto::numerics::rng::Stream;
use multiauto::pde_experiments::{heat_solve, HeatConfig, HeatField};
use multiauto::volterra_ops::{gamma_apply, DomainDescriptor, KernelSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn word() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,8}"
}

fn value() -> impl Strategy<Value = String> {
    "[!-~]([ -~]{0,20}[!-~])?"
}

fn raw_config() -> impl Strategy<Value = RawConfig> {
    prop::collection::btree_map(word(), prop::collection::btree_map(word(), value(), 0..6), 0..5).prop_map(|m| {
        RawConfig {
            sections: m
                .into_iter()
                .map(|(name, e)| Section {
                    name,
                    entries: e.into_iter().collect(),
                })
                .collect(),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_print_parse_round_trip(cfg in raw_config()) {
        let text = cfg.to_string();
        let back = RawConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn sweeps_needed_is_tight(theta in 0.01f64..0.95, d1 in 1e-3f64..10.0, tol in 1e-10f64..1e-3) {
        let c = ContractionCertificate::new(0.0, theta, 1.0);
        let k = c.sweeps_needed(d1, tol);
        let target = tol * (1.0 - theta);
        prop_assert!(d1 * theta.powi(k as i32 - 1) <= target * (1.0 + 1e-9));
        if k > 1 {
            prop_assert!(d1 * theta.powi(k as i32 - 2) > target);
        }
    }

    #[test]
    fn certificate_validity_matches_theta(lo in 0.0f64..1.5, li in 0.0f64..1.5, mass in 0.0f64..2.0) {
        let c = ContractionCertificate::new(lo, li, mass);
        prop_assert!((c.theta - (lo + li * mass)).abs() <= 1e-15);
        prop_assert_eq!(c.valid, c.theta < 1.0);
        prop_assert_eq!(c.require_valid().is_ok(), c.theta < 1.0);
    }

    #[test]
    fn stream_draws_are_deterministic_and_in_range(seed in any::<u64>(), id in any::<u64>(), n in 0u64..1000) {
        let a = Stream::new(seed, id).uniform(n);
        prop_assert_eq!(a, Stream::new(seed, id).uniform(n));
        prop_assert!((0.0..1.0).contains(&a));
        let b = Stream::new(seed, id).uniform_in(n, -3.0, 2.0);
        prop_assert!((-3.0..2.0).contains(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gamma_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, alpha in 0.5f64..2.0) {
        let q = QuadratureScheme::gauss(8, 1, 1e-8);
        let k = KernelSpec::exponential(&[alpha, 1.0]).unwrap();
        let d = DomainDescriptor::first_orthant(2);
        let w = GridWindow::cube(2, 1.0, 3).unwrap();
        let f = FunctionExpr::parse("f", 2, 0, "(add 1 (sin t0))").unwrap();
        let g = FunctionExpr::parse("g", 2, 0, "(cos (mul t0 t1))").unwrap();
        let fg = FunctionExpr::linear_combination(a, &f, b, &g).unwrap();
        let gf = gamma_apply(&k, &d, &f, &w, &q).unwrap();
        let gg = gamma_apply(&k, &d, &g, &w, &q).unwrap();
        let gc = gamma_apply(&k, &d, &fg, &w, &q).unwrap();
        for i in 0..w.len() {
            let lin = a * gf.values[i] + b * gg.values[i];
            prop_assert!((gc.values[i] - lin).abs() <= 1e-12 * (1.0 + lin.abs()));
        }
    }

    #[test]
    fn heat_mass_is_conserved(t in 0.01f64..5.0) {
        let g = FunctionExpr::constant(1.0, 1).with_sup_bound(1.0);
        let f = HeatField::new(&HeatConfig::new(1, t, g, QuadratureScheme::default()).unwrap()).unwrap();
        prop_assert!(f.mass >= 1.0 - 1e-6 && f.mass <= 1.0 + 1e-13, "{}", f.mass);
    }

    #[test]
    fn heat_obeys_maximum_principle(a in -2.0f64..2.0, b in -2.0f64..2.0, omega in 0.5f64..3.0, t in 0.05f64..2.0) {
        let g = FunctionExpr::parse("g", 1, 0, &format!("(add (mul {a} (sin (mul {omega} t0))) (mul {b} (cos t0)))"))
            .unwrap()
            .with_sup_bound(a.abs() + b.abs());
        let cfg = HeatConfig::new(1, t, g, QuadratureScheme::default()).unwrap();
        let u = heat_solve(&cfg, &GridWindow::cube(1, 6.0, 25).unwrap()).unwrap();
        for (v, e) in u.values.iter().zip(&u.err_bound) {
            prop_assert!(v.abs() <= a.abs() + b.abs() + e + 1e-12);
        }
        // each tone decays by its own factor
        for (i, v) in u.values.iter().enumerate() {
            let x = u.window.point(i)[0];
            let exact = a * (-omega * omega * t).exp() * (omega * x).sin() + b * (-t).exp() * x.cos();
            prop_assert!((v - exact).abs() <= 1e-6);
        }
    }

    #[test]
    fn picard_stays_in_the_contraction_envelope(gamma in 0.0f64..0.9, c in -2.0f64..2.0) {
        let g = FunctionExpr::parse("g", 1, 0, &format!("(add {c} (sin t0))")).unwrap();
        let h = FunctionExpr::parse("h", 1, 1, &format!("(mul {gamma} (sin x0))")).unwrap().with_lipschitz(gamma);
        let k = KernelSpec::exponential(&[1.0]).unwrap();
        let p = VieProblem::new(g, h, k, DomainDescriptor::causal_cone(1), QuadratureScheme::default()).unwrap();
        let tr = p.solve(&GridWindow::cube(1, 2.0, 17).unwrap(), 1e-9).unwrap();
        prop_assert!(tr.converged);
        prop_assert!((tr.certificate.theta - gamma).abs() < 1e-6);
        prop_assert!(tr.within_envelope(), "{:?}", tr.sup_diffs);
        if let Ok(r) = tr.observed_ratio() {
            prop_assert!(r <= 1.1 * tr.certificate.theta + 1e-12, "{r}");
        }
    }

    #[test]
    fn pure_decay_resolvent_is_exponential(a in 0.5f64..3.0) {
        let sys = MemorySystem::new(DMatrix::from_element(1, 1, -a), None, vec![1.0]).unwrap();
        let t = build_resolvent(&sys, 4.0, 1e-3).unwrap();
        for (k, tk) in t.times.iter().enumerate().step_by(100) {
            prop_assert!((t.values[k][0] - (-a * tk).exp()).abs() <= 1e-6);
        }
        prop_assert!((t.delta_est - a).abs() < 0.05 * a, "{}", t.delta_est);
    }
}
