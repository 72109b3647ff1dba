use hdclt::bounds::{bound_gauss_unbounded, x_log_factor, BoundInputs, ConstantsPolicy};
use hdclt::distance::{ks_distance, MaxStatSample};
use hdclt::lowerbound::{binomial_pmf, threshold_xn};
use hdclt::matcore::{cholesky_of, min_eigenvalue_of, RectangleSpec};
use hdclt::sampler::{scaled_sum_draws, DistributionSpec, Side};
use hdclt::smoothing::{rho_eval, SmoothingParams};
use hdclt::CovarianceModel;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spd(dim: usize, raw: &[f64]) -> Vec<f64> {
    let a = DMatrix::from_row_slice(dim, dim, &raw[..dim * dim]);
    let s = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5;
    (0..dim * dim).map(|k| s[(k / dim, k % dim)]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cholesky_reconstructs(dim in 1usize..6, raw in prop::collection::vec(-2.0f64..2.0, 36)) {
        let s = spd(dim, &raw);
        let l = cholesky_of(dim, &s).unwrap();
        for i in 0..dim {
            for j in 0..dim {
                let v: f64 = (0..dim).map(|k| l[i * dim + k] * l[j * dim + k]).sum();
                prop_assert!((v - s[i * dim + j]).abs() < 1e-10);
            }
            for j in i + 1..dim {
                prop_assert_eq!(l[i * dim + j], 0.0);
            }
        }
    }

    #[test]
    fn min_eigenvalue_agrees_with_reference(dim in 1usize..6, raw in prop::collection::vec(-2.0f64..2.0, 36)) {
        let s = spd(dim, &raw);
        let reference = DMatrix::from_row_slice(dim, dim, &s).symmetric_eigenvalues().min();
        prop_assert!((min_eigenvalue_of(dim, &s) - reference).abs() < 1e-9 * reference.abs().max(1.0));
    }

    #[test]
    fn enlargement_contains_original(
        lo in prop::collection::vec(-3.0f64..0.0, 3),
        width in prop::collection::vec(0.0f64..3.0, 3),
        t in 0.0f64..2.0,
        w in prop::collection::vec(-4.0f64..4.0, 3),
    ) {
        let up: Vec<f64> = lo.iter().zip(&width).map(|(a, b)| a + b).collect();
        let rect = RectangleSpec::new(lo, up).unwrap();
        let big = rect.enlarge(t).unwrap();
        prop_assert!(!rect.contains(&w) || big.contains(&w));
    }

    #[test]
    fn ks_is_a_symmetric_bounded_gap(
        a in prop::collection::vec(-5.0f64..5.0, 1..60),
        b in prop::collection::vec(-5.0f64..5.0, 1..60),
    ) {
        let sa = MaxStatSample::new(a, Side::OneSided).unwrap();
        let sb = MaxStatSample::new(b, Side::OneSided).unwrap();
        let ab = ks_distance(&sa, &sb);
        prop_assert_eq!(ab, ks_distance(&sb, &sa));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ks_distance(&sa, &sa), 0.0);
    }

    #[test]
    fn rho_in_unit_interval_and_monotone(
        w in prop::collection::vec(-3.0f64..3.0, 2),
        half in 0.1f64..2.0,
        phi in 0.5f64..50.0,
        eps in 0.05f64..2.0,
        t in 0.0f64..1.0,
    ) {
        let rect = RectangleSpec::symmetric_box(2, half).unwrap();
        let p = SmoothingParams::new(rect.clone(), phi, eps, CovarianceModel::identity(2), 4.0).unwrap();
        let q = SmoothingParams::new(rect.enlarge(t).unwrap(), phi, eps, CovarianceModel::identity(2), 4.0).unwrap();
        let (r, s) = (rho_eval(&w, &p, None).unwrap(), rho_eval(&w, &q, None).unwrap());
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(s >= r - 1e-12);
    }

    #[test]
    fn threshold_is_increasing(d in 2.0f64..1e5, step in 0.01f64..100.0) {
        prop_assert!(threshold_xn(d + step).unwrap() > threshold_xn(d).unwrap());
    }

    #[test]
    fn binomial_pmf_is_a_distribution(n in 0u64..500, p in 0.0f64..1.0) {
        let pmf = binomial_pmf(n, p);
        prop_assert_eq!(pmf.len() as u64, n + 1);
        prop_assert!(pmf.iter().all(|v| *v >= 0.0));
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_bound_is_monotone_in_inputs(d0 in 0.0f64..1.0, extra in 0.0f64..1.0, d1 in 0.0f64..1.0) {
        let mut a = BoundInputs::new(1000, 50);
        a.delta0 = d0;
        a.delta1 = d1;
        let mut b = a.clone();
        b.delta0 = d0 + extra;
        let policy = ConstantsPolicy::default();
        let (va, vb) = (bound_gauss_unbounded(&a, &policy).unwrap().value, bound_gauss_unbounded(&b, &policy).unwrap().value);
        prop_assert!(va >= 0.0 && vb >= va);
    }

    #[test]
    fn x_log_factor_dominates(x in 1e-12f64..1e6) {
        prop_assert!(x_log_factor(x) >= x);
    }

    #[test]
    fn replications_are_prefix_stable(reps in 1usize..40, seed in any::<u64>()) {
        let spec = DistributionSpec::two_point(4, 3.0).unwrap();
        let short = scaled_sum_draws(&spec, 25, reps, seed).unwrap();
        let long = scaled_sum_draws(&spec, 25, reps + 7, seed).unwrap();
        prop_assert_eq!(short.values(), &long.values()[..reps * 4]);
    }
}
