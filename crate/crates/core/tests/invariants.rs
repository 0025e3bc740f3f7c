//! Property tests over randomly drawn admissible models.

mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use viscowave_core::config::ModelSpec;
use viscowave_core::dispersion::{attenuation, wavenumber};
use viscowave_core::duality::{creep_from_model, duality_residual, volterra_solve_creep, CreepCurve};
use viscowave_core::kernels::{MaterialModel, RelaxationKernel};
use viscowave_core::limits::{geometric_limit, LimitOptions};

use common::uniform;

fn prony_strategy() -> impl Strategy<Value = RelaxationKernel<f64>> {
    prop::collection::vec((0.01f64..10.0, 0.0f64..20.0), 1..4)
        .prop_map(|terms| RelaxationKernel::prony(terms).unwrap())
}

fn kernel_strategy() -> impl Strategy<Value = RelaxationKernel<f64>> {
    prop_oneof![
        prony_strategy(),
        (0.1f64..5.0, 0.05f64..0.95).prop_map(|(a, al)| RelaxationKernel::power_law(a, al).unwrap()),
        (0.2f64..0.9, 0.5f64..2.0).prop_map(|(al, tau)| RelaxationKernel::stretched_exponential(al, tau).unwrap()),
        (prony_strategy(), 0.1f64..0.9).prop_map(|(p, al)| {
            RelaxationKernel::sum(vec![p, RelaxationKernel::power_law(1.0, al).unwrap()]).unwrap()
        }),
    ]
}

fn model_strategy() -> impl Strategy<Value = MaterialModel<f64>> {
    (0.1f64..10.0, prop_oneof![Just(0.0), 0.01f64..5.0], kernel_strategy())
        .prop_map(|(rho, n, k)| MaterialModel::new(rho, n, k).unwrap())
}

/// Point of the closed right half-plane, modulus between 1e-3 and 1e4.
fn rhp_point() -> impl Strategy<Value = Complex64> {
    (-3.0f64..4.0, -std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2)
        .prop_map(|(lr, th)| Complex64::from_polar(10f64.powf(lr), th))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kappa_branch_and_conjugate_symmetry(m in model_strategy(), p in rhp_point()) {
        let k = wavenumber(&m, p).unwrap();
        prop_assert!(k.re >= 0.0, "Re kappa = {} at {p}", k.re);
        let kc = wavenumber(&m, p.conj()).unwrap();
        prop_assert!((kc - k.conj()).norm() <= 1e-12 * k.norm());
        // kappa solves rho p^2 = Q(p) kappa^2
        let q = m.q_function(p).unwrap();
        let lhs = p * p * m.rho();
        prop_assert!((q * k * k - lhs).norm() <= 1e-10 * lhs.norm());
    }

    #[test]
    fn kappa_and_q_are_monotone_on_the_axis(m in model_strategy(), a in -3.0f64..3.0, d in 0.01f64..1.0) {
        let (p1, p2) = (10f64.powf(a), 10f64.powf(a + d));
        let k = |p: f64| wavenumber(&m, Complex64::new(p, 0.0)).unwrap();
        let (k1, k2) = (k(p1), k(p2));
        prop_assert!(k1.im.abs() <= 1e-12 * k1.re);
        prop_assert!(k2.re >= k1.re * (1.0 - 1e-10));
        prop_assert!(k2.re / p2 <= k1.re / p1 * (1.0 + 1e-10));
        let q = |p: f64| m.q_function(Complex64::new(p, 0.0)).unwrap().re;
        prop_assert!(q(p2) >= q(p1) * (1.0 - 1e-10));
        prop_assert!(q(p2) / p2 <= q(p1) / p1 * (1.0 + 1e-10));
    }

    /// `kappa / p` is a Stieltjes function, so `|kappa(-i w)| <= sqrt 2 kappa(w)`,
    /// and `kappa(w)` grows at most linearly. The local log-log slope of the
    /// attenuation itself can exceed 1 where `arg kappa` swings.
    #[test]
    fn attenuation_is_sublinear(m in model_strategy(), a in -2.0f64..6.0) {
        let w = 10f64.powf(a);
        let att = attenuation(&m, w).unwrap();
        let k_axis = wavenumber(&m, Complex64::new(w, 0.0)).unwrap().re;
        prop_assert!(att >= 0.0);
        prop_assert!(att <= std::f64::consts::SQRT_2 * k_axis * (1.0 + 1e-12), "{att} vs {k_axis}");
    }

    #[test]
    fn kernels_decrease(k in kernel_strategy(), a in -4.0f64..1.0, d in 0.01f64..1.0) {
        let (t1, t2) = (10f64.powf(a), 10f64.powf(a + d));
        let (g1, g2) = (k.eval_g(t1).unwrap(), k.eval_g(t2).unwrap());
        prop_assert!(g2 >= 0.0);
        prop_assert!(g2 <= g1 * (1.0 + 1e-12));
    }

    #[test]
    fn kernel_transform_is_conjugate_symmetric(k in kernel_strategy(), p in rhp_point()) {
        let g = k.laplace_g(p).unwrap();
        let gc = k.laplace_g(p.conj()).unwrap();
        prop_assert!((gc - g.conj()).norm() <= 1e-12 * g.norm());
    }

    #[test]
    fn model_files_round_trip(m in model_strategy()) {
        let spec = ModelSpec::from_model(&m);
        let back = ModelSpec::from_json(&spec.to_json()).unwrap().build().unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn limit_of_power_correction(a in 0.1f64..10.0, b in -5.0f64..5.0, s in 0.3f64..1.0) {
        let lim = geometric_limit(|p: f64| Ok(a + b * p.powf(-s)), 1.0, 1e12, &LimitOptions::default()).unwrap();
        let v = lim.as_finite().unwrap();
        prop_assert!((v - a).abs() <= 1e-4 * a, "{v} vs {a}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Transform and product-integration creep curves agree for rational kernels.
    #[test]
    fn creep_routes_agree_for_prony(
        terms in prop::collection::vec((0.01f64..2.0, 0.0f64..5.0), 1..4),
        n in prop_oneof![Just(0.0), 0.5f64..3.0],
    ) {
        // moduli and N keep every rate below ~12, well resolved by h = 1e-3
        let m = MaterialModel::new(1.0, n, RelaxationKernel::prony(terms).unwrap()).unwrap();
        let grid = uniform(1e-3, 1000);
        let tr = creep_from_model(&m, &grid).unwrap();
        let vo = match volterra_solve_creep(&m, &grid) {
            Ok(v) => v,
            // first-kind systems may be refused as ill-conditioned
            Err(_) if n == 0.0 => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        for (a, b) in tr.c.iter().zip(&vo.c) {
            prop_assert!((a - b).abs() <= 1e-4 * a.abs().max(1e-3), "{a} vs {b}");
        }
        prop_assert!(duality_residual(&m, &tr).unwrap() <= 1e-4 * grid[grid.len() - 1]);
    }

    #[test]
    fn creep_csv_round_trip(a in 0.0f64..5.0, b in 0.0f64..5.0, g in 0.01f64..5.0, r in 0.1f64..10.0, len in 3usize..40) {
        // C = a + b t + g (1 - e^-rt) is a Bernstein function
        let t: Vec<f64> = (1..=len).map(|k| k as f64 * 0.1).collect();
        let c: Vec<f64> = t.iter().map(|t| a + b * t + g * (1.0 - (-r * t).exp())).collect();
        let rate: Vec<f64> = t.iter().map(|t| b + g * r * (-r * t).exp()).collect();
        let curve = CreepCurve::from_samples(t, c, rate).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf, &["provenance".into()]).unwrap();
        let back: CreepCurve<f64> = CreepCurve::read_csv(buf.as_slice()).unwrap();
        for (x, y) in curve.c.iter().zip(&back.c) {
            prop_assert!((x - y).abs() <= 1e-11 * x.abs());
        }
        let mut again = Vec::new();
        back.write_csv(&mut again, &["provenance".into()]).unwrap();
        prop_assert_eq!(buf, again);
    }
}
