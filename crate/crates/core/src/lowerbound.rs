//! Constructive lower-bound analyses: the two-point design with its Poisson
//! (Chen–Stein) approximation of the max statistic, and rate curves of the
//! distance to the Gaussian reference as `n` grows.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{gaussian_draws, gaussian_max_sample, ks_detail, rect_family_distance, MaxStatSample, RectFamily};
use crate::error::{invalid, Result};
use crate::rng::{self, label};
use crate::sampler::{scaled_sum_draws, DistributionSpec, Family, Side, TwoPointLaw};
use crate::special::{norm_cdf, norm_isf, norm_pdf, norm_quantile, norm_sf};
use crate::stats::{fit_loglog, LineFit};

/// `x` with `Φ(x)^d = e^{−1}`, by bisection on `d·ln Φ(x) + 1`.
///
/// Accepts real `d > 0` so that non-integer test points are reachable.
pub fn threshold_xn(d: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(invalid(format!("dimension must be positive and finite, got {d}")));
    }
    let g = |x: f64| d * ln_norm_cdf(x) + 1.0;
    let guess = norm_isf(-(-1.0 / d).exp_m1());
    let (mut lo, mut hi) = (guess - 1.0, guess + 1.0);
    while g(lo) > 0.0 {
        lo -= 1.0;
    }
    while g(hi) < 0.0 {
        hi += 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
}

fn ln_norm_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-norm_sf(x)).ln_1p()
    } else {
        norm_cdf(x).ln()
    }
}

/// Skewness `E W₁³ = E X₁₁³/√n` of the first coordinate of the scaled sum.
pub fn gamma_n(spec: &DistributionSpec, n: u64) -> f64 {
    spec.third_moments()[0] / (n as f64).sqrt()
}

/// `ϱ·√n / (B (log d)^{3/2})`, the normalization under which the two-point
/// lower bound stays away from zero.
pub fn normalized_distance(distance: f64, n: u64, envelope: f64, d: u64) -> f64 {
    distance * (n as f64).sqrt() / (envelope * (d as f64).ln().powf(1.5))
}

/// `P(K = k)` for `K ~ Binomial(n, p)`, `k = 0..=n`, computed in log space
/// and renormalized.
pub fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    if p <= 0.0 || p >= 1.0 {
        let mut pmf = vec![0.0; n as usize + 1];
        pmf[if p <= 0.0 { 0 } else { n as usize }] = 1.0;
        return pmf;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let ln_n_fact = libm::lgamma(n as f64 + 1.0);
    let mut pmf: Vec<f64> = (0..=n)
        .map(|k| {
            let (k, m) = (k as f64, (n - k) as f64);
            (ln_n_fact - libm::lgamma(k + 1.0) - libm::lgamma(m + 1.0) + k * lp + m * lq).exp()
        })
        .collect();
    // removes the ~1e-12 relative drift of lgamma at large n
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|v| *v /= total);
    pmf
}

/// Exact `P(W₁ > x)` for the scaled sum of `n` two-point observations, by
/// enumerating the binomial count of high values.
pub fn two_point_tail_exact(law: TwoPointLaw, n: u64, x: f64) -> f64 {
    binomial_pmf(n, law.p)
        .iter()
        .enumerate()
        .filter(|(k, _)| law.scaled_sum(n, *k as u64) > x)
        .map(|(_, p)| p)
        .sum()
}

/// Exact `P(W₁ + σ g ≤ x)` with independent `g ~ N(0, 1)`; `σ = 0` gives
/// the lattice CDF itself.
pub fn two_point_marginal_cdf(law: TwoPointLaw, n: u64, x: f64, noise_sd: f64) -> f64 {
    binomial_pmf(n, law.p)
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let w = law.scaled_sum(n, k as u64);
            let f = if noise_sd > 0.0 { norm_cdf((x - w) / noise_sd) } else { f64::from(u8::from(w <= x)) };
            p * f
        })
        .sum()
}

/// Outcome of the Poisson-approximation check at the threshold `x_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonApproxRecord {
    pub n: u64,
    pub d: u64,
    pub reps: u64,
    pub x_n: f64,
    /// `P̂(W₁ > x_n)` pooled over all `R·d` marginal draws.
    pub p_hat: f64,
    pub p_se: f64,
    pub lambda_hat: f64,
    pub lambda_se: f64,
    /// `P̂(max_j W_j ≤ x_n)` from `R` independent draws.
    pub f_hat: f64,
    pub f_se: f64,
    pub exp_neg_lambda: f64,
    pub gauss_target: f64,
    /// `|F̂ − e^{−λ̂}|`
    pub residual: f64,
    /// `d · P̂²`
    pub chen_stein_bound: f64,
    /// Delta-method se of `F̂ − e^{−λ̂}` plus that of the bound.
    pub combined_se: f64,
    /// `residual ≤ bound + 4 · combined_se`
    pub holds: bool,
}

/// Estimates `F̂(x_n)` and `λ̂_n` from two independent batches of `R`
/// draws of `W` and compares the residual with its Chen–Stein bound.
///
/// The marginal batch pools all `d` coordinates, which assumes identically
/// distributed coordinates (true of every sampler family with unit or
/// constant diagonal).
pub fn poisson_approx_check(spec: &DistributionSpec, n: usize, reps: usize, seed: u64) -> Result<PoissonApproxRecord> {
    if reps == 0 {
        return Err(invalid("need at least one replication"));
    }
    let d = spec.dim();
    let x_n = threshold_xn(d as f64)?;

    let full = scaled_sum_draws(spec, n, reps, seed)?;
    let below = full.max_stat(Side::OneSided).iter().filter(|m| **m <= x_n).count();
    let f_hat = below as f64 / reps as f64;
    let f_se = (f_hat * (1.0 - f_hat) / reps as f64).sqrt();

    let marginal = scaled_sum_draws(spec, n, reps, rng::mix(seed, label::COUPLING))?;
    let above = marginal.values().iter().filter(|w| **w > x_n).count();
    let m = (reps * d) as f64;
    let p_hat = above as f64 / m;
    let p_se = (p_hat * (1.0 - p_hat) / m).sqrt();
    let lambda_hat = d as f64 * p_hat;
    let lambda_se = d as f64 * p_se;

    let exp_neg_lambda = (-lambda_hat).exp();
    let residual = (f_hat - exp_neg_lambda).abs();
    let chen_stein_bound = d as f64 * p_hat * p_hat;
    let combined_se = (f_se.powi(2)
        + (exp_neg_lambda * lambda_se).powi(2)
        + (2.0 * d as f64 * p_hat * p_se).powi(2))
    .sqrt();
    Ok(PoissonApproxRecord {
        n: n as u64,
        d: d as u64,
        reps: reps as u64,
        x_n,
        p_hat,
        p_se,
        lambda_hat,
        lambda_se,
        f_hat,
        f_se,
        exp_neg_lambda,
        gauss_target: (-1.0f64).exp(),
        residual,
        chen_stein_bound,
        combined_se,
        holds: residual <= chen_stein_bound + 4.0 * combined_se,
    })
}

/// How the distance at each `n` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateEstimator {
    /// Two-sample comparison of `R` draws of `W` with `10R` Gaussian draws.
    #[default]
    TwoSample,
    /// Variance-reduced estimator for a two-point (or Rademacher) base with
    /// identity quasi-Gaussian noise and the one-sided max family: the
    /// Gaussian noise is integrated out in closed form and each lattice
    /// coordinate is quantile-coupled to a standard normal, so
    /// `D(x) = E[∏Φ(x − W_j) − ∏Φ(x − Z_j)]` is averaged over `R` coupled
    /// replications on a fixed grid of `x`.
    Coupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: u64,
    pub distance: f64,
    /// Standard error of the estimated gap at the maximizing threshold.
    pub se: f64,
    /// Threshold `x` at which the gap is largest (`NaN` for random
    /// rectangles).
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub d: u64,
    pub reps: u64,
    pub family: RectFamily,
    pub estimator: RateEstimator,
    pub points: Vec<RatePoint>,
    /// OLS fit of `log distance` on `log n`; absent when fewer than two
    /// distances are positive.
    pub fit: Option<LineFit>,
}

/// Distance between the law of `W` (fresh data per draw) and its Gaussian
/// reference `N(0, Σ_W)` at each `n`, with a log-log slope fit.
pub fn rate_curve(
    spec: &DistributionSpec,
    n_list: &[usize],
    reps: usize,
    family: RectFamily,
    estimator: RateEstimator,
    seed: u64,
) -> Result<RateCurve> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(invalid("n_list must be non-empty, positive and strictly ascending"));
    }
    if reps < 2 {
        return Err(invalid("need at least two replications"));
    }
    let points = match estimator {
        RateEstimator::TwoSample => two_sample_points(spec, n_list, reps, family, seed)?,
        RateEstimator::Coupled => {
            let law = coupled_law(spec, family)?;
            n_list
                .iter()
                .map(|&n| coupled_point(law, spec.dim(), n as u64, reps, rng::mix(seed, n as u64)))
                .collect()
        }
    };
    let (x, y): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|p| p.distance > 0.0).map(|p| (p.n as f64, p.distance)).unzip();
    Ok(RateCurve {
        d: spec.dim() as u64,
        reps: reps as u64,
        family,
        estimator,
        fit: fit_loglog(&x, &y, None),
        points,
    })
}

fn two_sample_points(
    spec: &DistributionSpec,
    n_list: &[usize],
    reps: usize,
    family: RectFamily,
    seed: u64,
) -> Result<Vec<RatePoint>> {
    let sigma = spec.population_covariance()?;
    let ref_reps = 10 * reps;
    let draws_at = |n: usize| scaled_sum_draws(spec, n, reps, rng::mix(seed, n as u64));
    match family {
        RectFamily::OneSidedMax | RectFamily::TwoSidedMax => {
            let side = if family == RectFamily::OneSidedMax { Side::OneSided } else { Side::TwoSided };
            let reference = gaussian_max_sample(&sigma, ref_reps, side, seed)?;
            n_list
                .iter()
                .map(|&n| {
                    let sample = MaxStatSample::from_draws(&draws_at(n)?, side)?;
                    let detail = ks_detail(&sample, &reference);
                    Ok(RatePoint { n: n as u64, distance: detail.distance, se: detail.se(reps, ref_reps), at: detail.at })
                })
                .collect()
        }
        RectFamily::RandomRects { .. } => {
            let reference = gaussian_draws(&sigma, ref_reps, seed)?;
            // worst-case binomial se, since the maximizing rectangle is not tracked
            let se = (0.25 / reps as f64 + 0.25 / ref_reps as f64).sqrt();
            n_list
                .iter()
                .map(|&n| {
                    let distance = rect_family_distance(&draws_at(n)?, &reference, family)?;
                    Ok(RatePoint { n: n as u64, distance, se, at: f64::NAN })
                })
                .collect()
        }
    }
}

fn coupled_law(spec: &DistributionSpec, family: RectFamily) -> Result<TwoPointLaw> {
    if family != RectFamily::OneSidedMax {
        return Err(invalid("coupled estimator supports the one-sided max family only"));
    }
    let Family::QuasiGaussian { base, sigma0 } = spec.family() else {
        return Err(invalid("coupled estimator needs a quasi-Gaussian spec"));
    };
    if !sigma0.is_diagonal() {
        return Err(invalid("coupled estimator needs identity quasi-Gaussian noise"));
    }
    match base.as_ref() {
        Family::Rademacher => Ok(TwoPointLaw { p: 0.5, high: 1.0, low: -1.0 }),
        Family::TwoPoint { envelope } => TwoPointLaw::from_envelope(*envelope),
        _ => Err(invalid("coupled estimator needs a two-point or Rademacher base")),
    }
}

const COUPLED_GRID: usize = 128;
const COUPLED_BLOCK: usize = 1024;

fn coupled_point(law: TwoPointLaw, d: usize, n: u64, reps: usize, seed: u64) -> RatePoint {
    // reference max of N(0, 2I) spans these thresholds between its 0.1% and 99.9% quantiles
    let ref_quantile = |p: f64| std::f64::consts::SQRT_2 * norm_quantile(p.powf(1.0 / d as f64));
    let (x_lo, x_hi) = (ref_quantile(1e-3), ref_quantile(1.0 - 1e-3));
    let grid: Vec<f64> =
        (0..COUPLED_GRID).map(|g| x_lo + (x_hi - x_lo) * g as f64 / (COUPLED_GRID - 1) as f64).collect();

    let pmf = binomial_pmf(n, law.p);
    let mut cdf: Vec<f64> = pmf
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    *cdf.last_mut().expect("n + 1 entries") = 1.0;
    let k_count = cdf.len();
    // lattice[g * (n + 1) + k] = Φ(x_g − w_k)
    let lattice: Vec<f64> = grid
        .iter()
        .flat_map(|x| (0..k_count).map(move |k| norm_cdf(x - law.scaled_sum(n, k as u64))))
        .collect();
    let phi = PhiTable::new();

    let blocks = reps.div_ceil(COUPLED_BLOCK);
    let stream_seed = rng::mix(seed, label::COUPLING);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut sum = vec![0.0; COUPLED_GRID];
            let mut sumsq = vec![0.0; COUPLED_GRID];
            let mut pw = vec![0.0; COUPLED_GRID];
            let mut pz = vec![0.0; COUPLED_GRID];
            for r in b * COUPLED_BLOCK..((b + 1) * COUPLED_BLOCK).min(reps) {
                let mut rng = rng::substream(stream_seed, r as u64);
                pw.fill(1.0);
                pz.fill(1.0);
                for _ in 0..d {
                    let u = ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
                    let k = cdf.partition_point(|c| *c < u).min(k_count - 1);
                    let z = norm_quantile(u);
                    for g in 0..COUPLED_GRID {
                        pw[g] *= lattice[g * k_count + k];
                        pz[g] *= phi.eval(grid[g] - z);
                    }
                }
                for g in 0..COUPLED_GRID {
                    let diff = pw[g] - pz[g];
                    sum[g] += diff;
                    sumsq[g] += diff * diff;
                }
            }
            (sum, sumsq)
        })
        .collect();

    let mut sum = vec![0.0; COUPLED_GRID];
    let mut sumsq = vec![0.0; COUPLED_GRID];
    for (s, q) in &partial {
        for g in 0..COUPLED_GRID {
            sum[g] += s[g];
            sumsq[g] += q[g];
        }
    }
    let r = reps as f64;
    let (mut best, mut at, mut se) = (0.0f64, f64::NAN, 0.0);
    for g in 0..COUPLED_GRID {
        let mean = sum[g] / r;
        if mean.abs() > best || at.is_nan() {
            best = mean.abs();
            at = grid[g];
            se = ((sumsq[g] / r - mean * mean).max(0.0) / (r - 1.0)).sqrt();
        }
    }
    RatePoint { n, distance: best, se, at }
}

/// `Φ` by cubic Hermite interpolation on a uniform grid (abs. error ~1e-12).
struct PhiTable {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

const PHI_RANGE: f64 = 10.0;
const PHI_STEP: f64 = 1.0 / 256.0;

impl PhiTable {
    fn new() -> Self {
        let count = (2.0 * PHI_RANGE / PHI_STEP) as usize + 1;
        let nodes = (0..count).map(|i| -PHI_RANGE + i as f64 * PHI_STEP);
        PhiTable { values: nodes.clone().map(norm_cdf).collect(), slopes: nodes.map(norm_pdf).collect() }
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        if t <= -PHI_RANGE {
            return 0.0;
        }
        if t >= PHI_RANGE {
            return 1.0;
        }
        let s = (t + PHI_RANGE) / PHI_STEP;
        let i = (s as usize).min(self.values.len() - 2);
        let u = s - i as f64;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.values[i]
            + h10 * PHI_STEP * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * PHI_STEP * self.slopes[i + 1]
    }
}
