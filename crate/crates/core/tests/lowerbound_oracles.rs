use approx::assert_relative_eq;
use hdclt::distance::RectFamily;
use hdclt::lowerbound::*;
use hdclt::sampler::{scaled_sum_draws, DistributionSpec, TwoPointLaw};
use hdclt::special::norm_cdf;
use hdclt::CovarianceModel;

#[test]
fn threshold_at_median_dimension() {
    let x = threshold_xn(1.0 / 2f64.ln()).unwrap();
    assert!(x.abs() < 1e-14, "{x}");
}

#[test]
fn threshold_forward_check() {
    for d in [2.0, 10.0, 50.0, 1000.0] {
        let x = threshold_xn(d).unwrap();
        assert!((norm_cdf(x).powf(d) - (-1f64).exp()).abs() < 1e-12, "d={d}");
    }
}

#[test]
fn threshold_log_growth() {
    let d = 1e6;
    let ratio = threshold_xn(d).unwrap() / (2.0 * d.ln()).sqrt();
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn threshold_increasing_and_validated() {
    let xs: Vec<f64> = [2.0, 3.0, 5.0, 50.0, 500.0].iter().map(|d| threshold_xn(*d).unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
    assert!(threshold_xn(0.0).is_err());
    assert!(threshold_xn(f64::NAN).is_err());
}

#[test]
fn skewness_accessor() {
    let spec = DistributionSpec::two_point(5, 2.0).unwrap();
    let expect = 0.5 / (100.0f64 * 0.1875).sqrt();
    assert_relative_eq!(gamma_n(&spec, 100), expect, max_relative = 1e-12);
    assert_relative_eq!(gamma_n(&spec, 100), 0.11547, epsilon = 1e-5);
    assert_eq!(gamma_n(&DistributionSpec::rademacher(3).unwrap(), 100), 0.0);
}

#[test]
fn enumeration_tail_small_cases() {
    let law = TwoPointLaw::from_envelope(2.0).unwrap();
    // n = 1: W₁ = X₁ exceeds 0 only at the high atom
    assert_relative_eq!(two_point_tail_exact(law, 1, 0.0), 0.25, max_relative = 1e-14);
    // n = 2: both high with probability 1/16
    assert_relative_eq!(two_point_tail_exact(law, 2, 2.0), 1.0 / 16.0, max_relative = 1e-12);
    assert_relative_eq!(two_point_marginal_cdf(law, 2, 2.0, 0.0), 15.0 / 16.0, max_relative = 1e-12);
}

#[test]
fn monte_carlo_tail_matches_enumeration() {
    let spec = DistributionSpec::two_point(5, 2.0).unwrap();
    let law = TwoPointLaw::from_envelope(2.0).unwrap();
    for n in [16usize, 40, 64] {
        let x = 1.0;
        let draws = scaled_sum_draws(&spec, n, 20_000, 11).unwrap();
        let m = draws.values().len() as f64;
        let p_hat = draws.values().iter().filter(|w| **w > x).count() as f64 / m;
        let exact = two_point_tail_exact(law, n as u64, x);
        let se = (exact * (1.0 - exact) / m).sqrt();
        assert!((p_hat - exact).abs() <= 4.0 * se, "n={n}: {p_hat} vs {exact}");
    }
}

#[test]
fn poisson_check_gaussian_is_definitional() {
    let spec = DistributionSpec::gaussian(CovarianceModel::identity(50));
    let r = poisson_approx_check(&spec, 10, 50_000, 5).unwrap();
    assert!((r.f_hat - r.gauss_target).abs() <= 3.0 * r.f_se, "{r:?}");
    assert!(r.lambda_hat >= 0.0 && r.lambda_hat <= 10.0);
    assert!(r.exp_neg_lambda > 0.0 && r.exp_neg_lambda <= 1.0);
}

#[test]
fn poisson_check_two_point_bound_holds() {
    let spec = DistributionSpec::two_point(50, 2.0).unwrap();
    let r = poisson_approx_check(&spec, 1000, 50_000, 9).unwrap();
    assert!(r.holds, "{r:?}");
    assert!(r.lambda_hat <= 10.0);
    // pooled marginal tail agrees with enumeration
    let exact = two_point_tail_exact(TwoPointLaw::from_envelope(2.0).unwrap(), 1000, r.x_n);
    assert!((r.p_hat - exact).abs() <= 4.0 * r.p_se, "{} vs {exact}", r.p_hat);
}

#[test]
fn rate_curve_gaussian_is_flat() {
    let spec = DistributionSpec::gaussian(CovarianceModel::identity(10));
    let curve = rate_curve(&spec, &[50, 100, 200, 400], 5_000, RectFamily::OneSidedMax, RateEstimator::TwoSample, 3)
        .unwrap();
    let crit = 1.63 * (1.0 / 5_000.0 + 1.0 / 50_000.0f64).sqrt();
    assert!(curve.points.iter().all(|p| p.distance <= crit), "{:?}", curve.points);
    let fit = curve.fit.unwrap();
    assert!(fit.slope.abs() <= 2.0 * fit.slope_se, "{fit:?}");
}

#[test]
fn rate_curve_validates_inputs() {
    let spec = DistributionSpec::rademacher(3).unwrap();
    let f = RectFamily::OneSidedMax;
    assert!(rate_curve(&spec, &[], 100, f, RateEstimator::TwoSample, 1).is_err());
    assert!(rate_curve(&spec, &[20, 10], 100, f, RateEstimator::TwoSample, 1).is_err());
    assert!(rate_curve(&spec, &[10, 20], 100, f, RateEstimator::Coupled, 1).is_err());
}

#[test]
fn coupled_estimator_matches_exact_distance() {
    let d = 5;
    let spec =
        DistributionSpec::quasi_gaussian(DistributionSpec::rademacher(d).unwrap(), CovarianceModel::identity(d))
            .unwrap();
    let law = TwoPointLaw { p: 0.5, high: 1.0, low: -1.0 };
    let curve = rate_curve(&spec, &[8, 16], 100_000, RectFamily::OneSidedMax, RateEstimator::Coupled, 4).unwrap();
    for p in &curve.points {
        let exact = (0..4000)
            .map(|i| {
                let x = -2.0 + i as f64 * 0.002;
                let w = two_point_marginal_cdf(law, p.n, x, 1.0).powi(d as i32);
                (w - norm_cdf(x / 2f64.sqrt()).powi(d as i32)).abs()
            })
            .fold(0.0, f64::max);
        // the grid maximum sits at or below the continuous maximum
        assert!(p.distance <= exact + 4.0 * p.se && p.distance >= 0.9 * exact - 4.0 * p.se, "{p:?} vs {exact}");
    }
}

#[test]
fn two_sample_curve_is_thread_count_invariant() {
    let spec = DistributionSpec::two_point(8, 2.0).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            rate_curve(&spec, &[20, 40, 80], 2_000, RectFamily::OneSidedMax, RateEstimator::TwoSample, 17).unwrap()
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn normalized_distance_formula() {
    let v = normalized_distance(0.1, 400, 2.0, 50);
    assert_relative_eq!(v, 0.1 * 20.0 / (2.0 * 50f64.ln().powf(1.5)), max_relative = 1e-14);
}
