use num_complex::Complex64;
use proptest::prelude::*;

use nls_reduce::catalog::{default_grid, make_family, EquivalenceTransform, Family, Params};
use nls_reduce::nonlinearity::Nonlinearity;
use nls_reduce::numerics::{fd_laplacian, ScalarField, SpaceTimePoint};
use nls_reduce::reduced_ode::{CaseIProfile, SampledProfile};
use nls_reduce::verifier::{check_conditions, fit_profile, profile_samples, Method};

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reports_are_consistent(f in family(), seed in 0u64..1000) {
        let spec = make_family(f, f.default_dim(), &f.default_params()).unwrap();
        let tr = EquivalenceTransform::seeded(spec.dim(), seed);
        let moved = nls_reduce::catalog::equivalence_transform(&spec, &tr).unwrap();
        let report = check_conditions(&moved, &default_grid(spec.dim(), 1e-3), Method::Analytic).unwrap();
        for c in &report.conditions {
            prop_assert!(c.max_abs >= c.rms);
        }
        prop_assert!(tr.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn transforms_round_trip(n in 2usize..=3, seed in 0u64..1000, t in -2.0..2.0f64, x in prop::collection::vec(-2.0..2.0f64, 3)) {
        let tr = EquivalenceTransform::seeded(n, seed);
        let p = SpaceTimePoint::new(t, x[..n].to_vec());
        let q = tr.backward(&tr.forward(&p));
        prop_assert!((q.t - p.t).abs() < 1e-12);
        for (a, b) in q.x.iter().zip(&p.x) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_profile_fit_recovers_parameters(a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let spec = make_family(Family::II1, 3, &Params::new().with("a", a).with("b", b)).unwrap();
        let (points, _) = default_grid(3, 1e-3).sample(spec.surfaces()).unwrap();
        let fit = fit_profile(&spec, &profile_samples(&spec, &points)).unwrap();
        prop_assert!((fit.coefficients[0] - 2.0 * b).abs() < 1e-8);
        prop_assert!((fit.coefficients[1] + 4.0 * a).abs() < 1e-8);
    }

    #[test]
    fn amplitude_law(b1 in 0.1..3.0f64, gap in 0.1..2.0f64, c in 0.1..3.0f64, t in 0.0..5.0f64) {
        let poles = [b1, b1 + gap];
        let p = CaseIProfile::new(&poles, c, &Nonlinearity::power(1.0, 2.0)).unwrap();
        let inv = p.phi(t).unwrap().norm_sqr() * poles.iter().map(|b| t + b).product::<f64>();
        prop_assert!((inv - c * c).abs() < 1e-10 * c * c);
    }

    #[test]
    fn laplacian_exact_on_quadratics(c in prop::collection::vec(-3.0..3.0f64, 3), x in prop::collection::vec(-2.0..2.0f64, 3)) {
        let cc = c.clone();
        let field = ScalarField::new(3, move |p| cc[0] * p.x[0] * p.x[0] + cc[1] * p.x[1] * p.x[2] + cc[2] * p.x[2] * p.x[2]);
        let lap = fd_laplacian(&field, &SpaceTimePoint::new(0.0, x), 1e-2).unwrap();
        prop_assert!((lap - 2.0 * (c[0] + c[2])).abs() < 1e-9);
    }

    #[test]
    fn hermite_reproduces_cubics(c in prop::collection::vec(-2.0..2.0f64, 4), w in 0.0..1.0f64) {
        let f = |x: f64| Complex64::new(c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x, c[1] * x);
        let df = |x: f64| Complex64::new(c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x, c[1]);
        let omega: Vec<f64> = (0..=8).map(|i| i as f64 * 0.125).collect();
        let s = SampledProfile {
            phi: omega.iter().map(|x| f(*x)).collect(),
            dphi: omega.iter().map(|x| df(*x)).collect(),
            omega,
            step: 0.125,
        };
        prop_assert!((s.eval(w).unwrap() - f(w)).norm() < 1e-12);
    }
}
