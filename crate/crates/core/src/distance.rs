//! Monte Carlo Kolmogorov-type distances over tractable rectangle families,
//! Gaussian max-CDF evaluation, and the anti-concentration probe.
//!
//! The sup over all rectangles is not estimable; every estimator here works
//! on an explicit sub-family and therefore yields a lower bound on it.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::{CovarianceModel, RectangleSpec};
use crate::rng::{self, label};
use crate::sampler::{Draws, Side};
use crate::special::norm_cdf;

/// Sorted draws of a max statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxStatSample {
    values: Vec<f64>,
    side: Side,
}

impl MaxStatSample {
    pub fn new(mut values: Vec<f64>, side: Side) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("max-statistic sample must be non-empty"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(invalid("max-statistic sample contains NaN"));
        }
        values.par_sort_unstable_by(f64::total_cmp);
        Ok(MaxStatSample { values, side })
    }

    pub fn from_draws(draws: &Draws, side: Side) -> Result<Self> {
        Self::new(draws.max_stat(side), side)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Right-continuous empirical CDF `#{v ≤ x}/R`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.partition_point(|v| *v <= x) as f64 / self.values.len() as f64
    }

    /// Empirical quantile: the `⌈p R⌉`-th order statistic.
    pub fn quantile(&self, p: f64) -> f64 {
        let r = self.values.len();
        let k = ((p * r as f64).ceil() as usize).clamp(1, r);
        self.values[k - 1]
    }
}

/// `sup_x |F̂_a(x) − F̂_b(x)|`, evaluated at every pooled jump point.
pub fn ks_distance(a: &MaxStatSample, b: &MaxStatSample) -> f64 {
    ks_detail(a, b).distance
}

/// KS distance together with where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsDetail {
    pub distance: f64,
    pub at: f64,
    pub cdf_a: f64,
    pub cdf_b: f64,
}

impl KsDetail {
    /// Pointwise standard error of `F̂_a − F̂_b` at the maximizer.
    pub fn se(&self, ra: usize, rb: usize) -> f64 {
        (self.cdf_a * (1.0 - self.cdf_a) / ra as f64 + self.cdf_b * (1.0 - self.cdf_b) / rb as f64).sqrt()
    }
}

pub fn ks_detail(a: &MaxStatSample, b: &MaxStatSample) -> KsDetail {
    let (va, vb) = (&a.values, &b.values);
    let (ra, rb) = (va.len() as f64, vb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = KsDetail { distance: 0.0, at: f64::NEG_INFINITY, cdf_a: 0.0, cdf_b: 0.0 };
    while i < va.len() || j < vb.len() {
        let x = match (va.get(i), vb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < va.len() && va[i] <= x {
            i += 1;
        }
        while j < vb.len() && vb[j] <= x {
            j += 1;
        }
        let (fa, fb) = (i as f64 / ra, j as f64 / rb);
        if (fa - fb).abs() > best.distance {
            best = KsDetail { distance: (fa - fb).abs(), at: x, cdf_a: fa, cdf_b: fb };
        }
    }
    best
}

/// One-sample form: `sup_x |F̂(x) − F(x)|` against a continuous CDF.
pub fn ks_distance_to_cdf(a: &MaxStatSample, cdf: impl Fn(f64) -> f64) -> f64 {
    let r = a.values.len() as f64;
    let mut best = 0.0f64;
    let mut i = 0;
    while i < a.values.len() {
        let x = a.values[i];
        let f = cdf(x);
        // left limit before the jump, then the value after all ties
        best = best.max((f - i as f64 / r).abs());
        while i < a.values.len() && a.values[i] == x {
            i += 1;
        }
        best = best.max((i as f64 / r - f).abs());
    }
    best
}

/// A Gaussian max-CDF value; `se = 0` on the exact path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub value: f64,
    pub se: f64,
    pub exact: bool,
}

/// `P(max_j Z_j ≤ x)` for `Z ~ N(0, Σ)`: `∏ Φ(x/σ_j)` for diagonal `Σ`,
/// otherwise a Monte Carlo estimate with its standard error.
pub fn gaussian_max_cdf(sigma: &CovarianceModel, x: f64, reps: usize, seed: u64) -> Result<ProbabilityEstimate> {
    if sigma.is_diagonal() {
        let value = sigma.diag().iter().map(|v| if *v > 0.0 { norm_cdf(x / v.sqrt()) } else if x >= 0.0 { 1.0 } else { 0.0 }).product();
        return Ok(ProbabilityEstimate { value, se: 0.0, exact: true });
    }
    sigma.cholesky()?;
    if reps == 0 {
        return Err(invalid("need at least one replication"));
    }
    let sample = gaussian_max_sample(sigma, reps, Side::OneSided, seed)?;
    let value = sample.ecdf(x);
    let se = (value * (1.0 - value) / reps as f64).sqrt();
    Ok(ProbabilityEstimate { value, se, exact: false })
}

/// `R` draws of `Z ~ N(0, Σ)` (singular `Σ` admitted via its square root).
pub fn gaussian_draws(sigma: &CovarianceModel, reps: usize, seed: u64) -> Result<Draws> {
    let d = sigma.dim();
    let stream_seed = rng::mix(seed, label::REFERENCE);
    let diag = sigma.is_diagonal().then(|| sigma.diag().iter().map(|v| v.sqrt()).collect::<Vec<_>>());
    let mut values = vec![0.0; reps * d];
    values.par_chunks_mut(d).enumerate().with_min_len(256).for_each(|(r, out)| {
        let mut rng = rng::substream(stream_seed, r as u64);
        fill_gaussian(&mut rng, sigma, diag.as_deref(), out);
    });
    Draws::new(reps, d, values)
}

/// Max statistics of `R` Gaussian draws without storing the vectors.
pub fn gaussian_max_sample(sigma: &CovarianceModel, reps: usize, side: Side, seed: u64) -> Result<MaxStatSample> {
    let d = sigma.dim();
    let stream_seed = rng::mix(seed, label::REFERENCE);
    let diag = sigma.is_diagonal().then(|| sigma.diag().iter().map(|v| v.sqrt()).collect::<Vec<_>>());
    let maxima: Vec<f64> = (0..reps)
        .into_par_iter()
        .with_min_len(256)
        .map_init(
            || vec![0.0; d],
            |buf, r| {
                let mut rng = rng::substream(stream_seed, r as u64);
                fill_gaussian(&mut rng, sigma, diag.as_deref(), buf);
                max_of(buf, side)
            },
        )
        .collect();
    MaxStatSample::new(maxima, side)
}

fn fill_gaussian<R: Rng>(rng: &mut R, sigma: &CovarianceModel, diag: Option<&[f64]>, out: &mut [f64]) {
    match diag {
        Some(sd) => {
            for (o, s) in out.iter_mut().zip(sd) {
                *o = s * rng.sample::<f64, _>(StandardNormal);
            }
        }
        None => {
            let z: Vec<f64> = (0..out.len()).map(|_| rng.sample(StandardNormal)).collect();
            sigma.transform(&z, out);
        }
    }
}

#[inline]
pub(crate) fn max_of(w: &[f64], side: Side) -> f64 {
    match side {
        Side::OneSided => w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Side::TwoSided => w.iter().map(|v| v.abs()).fold(0.0, f64::max),
    }
}

/// Rectangle sub-family over which a distance is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RectFamily {
    /// `{w : max_j w_j ≤ x}`, all `x`.
    OneSidedMax,
    /// `{w : max_j |w_j| ≤ x}`, all `x`.
    TwoSidedMax,
    /// `count` seeded rectangles: dilations of one random anisotropic
    /// shape (each coordinate one- or two-sided) at pooled gauge quantiles.
    RandomRects { count: usize, seed: u64 },
}

impl RectFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            RectFamily::OneSidedMax => "one_sided_max",
            RectFamily::TwoSidedMax => "two_sided_max",
            RectFamily::RandomRects { .. } => "random_rects",
        }
    }
}

/// `max_{A ∈ family} |P̂_a(A) − P̂_b(A)|`.
pub fn rect_family_distance(a: &Draws, b: &Draws, family: RectFamily) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    match family {
        RectFamily::OneSidedMax => Ok(ks_distance(
            &MaxStatSample::from_draws(a, Side::OneSided)?,
            &MaxStatSample::from_draws(b, Side::OneSided)?,
        )),
        RectFamily::TwoSidedMax => Ok(ks_distance(
            &MaxStatSample::from_draws(a, Side::TwoSided)?,
            &MaxStatSample::from_draws(b, Side::TwoSided)?,
        )),
        RectFamily::RandomRects { count, seed } => {
            let rects = random_rectangles(a, b, count, seed)?;
            let (ra, rb) = (a.reps() as f64, b.reps() as f64);
            let gaps: Vec<f64> = rects
                .par_iter()
                .map(|rect| {
                    let ca = a.rows().filter(|w| rect.contains(w)).count() as f64;
                    let cb = b.rows().filter(|w| rect.contains(w)).count() as f64;
                    (ca / ra - cb / rb).abs()
                })
                .collect();
            Ok(gaps.into_iter().fold(0.0, f64::max))
        }
    }
}

/// The rectangles of a [`RectFamily::RandomRects`] family.
///
/// A seeded random shape fixes, per coordinate, a centre (pooled median),
/// whether the side is one- or two-sided, and independent upper/lower
/// scales around the pooled marginal spread. Rectangle `k` is the shape
/// dilated to a level `t_k` at a random pooled quantile of the shape's gauge
/// `g(w) = max_j` of the scaled excursions. The family is nested, so on
/// identical laws its distance is dominated by a two-sample KS statistic.
/// Rectangle `k` depends only on `(seed, k)` and the pooled draws, so a
/// larger `count` yields a superset.
pub fn random_rectangles(a: &Draws, b: &Draws, count: usize, seed: u64) -> Result<Vec<RectangleSpec>> {
    let d = a.dim();
    let total = a.reps() + b.reps();
    if total == 0 {
        return Err(invalid("no draws to place rectangles"));
    }
    let mut marginals: Vec<Vec<f64>> = (0..d).map(|_| Vec::with_capacity(total)).collect();
    for w in a.rows().chain(b.rows()) {
        for (m, v) in marginals.iter_mut().zip(w) {
            m.push(*v);
        }
    }
    marginals.par_iter_mut().for_each(|m| m.sort_unstable_by(f64::total_cmp));
    let pick = |sorted: &[f64], u: f64| sorted[((u * sorted.len() as f64) as usize).min(sorted.len() - 1)];

    let stream_seed = rng::mix(seed, label::RECTANGLES);
    let mut shape_rng = rng::substream(stream_seed, u64::MAX);
    let shape: Vec<AxisShape> = marginals
        .iter()
        .map(|m| {
            let centre = pick(m, 0.5);
            let spread = (pick(m, 0.75) - pick(m, 0.25)).max(f64::MIN_POSITIVE);
            let up = spread * (0.5 + 1.5 * shape_rng.random::<f64>());
            let down = if shape_rng.random::<bool>() { Some(spread * (0.5 + 1.5 * shape_rng.random::<f64>())) } else { None };
            AxisShape { centre, up, down }
        })
        .collect();
    let mut gauge: Vec<f64> = a
        .rows()
        .chain(b.rows())
        .map(|w| {
            shape.iter().zip(w).fold(f64::NEG_INFINITY, |g, (s, &v)| {
                let e = (v - s.centre) / s.up;
                g.max(s.down.map_or(e, |dn| e.max((s.centre - v) / dn)))
            })
        })
        .collect();
    gauge.sort_unstable_by(f64::total_cmp);

    (0..count)
        .map(|k| {
            let mut rng = rng::substream(stream_seed, k as u64);
            let t = pick(&gauge, rng.random::<f64>());
            let lower = shape.iter().map(|s| s.down.map_or(f64::NEG_INFINITY, |dn| s.centre - dn * t)).collect();
            let upper = shape.iter().map(|s| s.centre + s.up * t).collect();
            RectangleSpec::new(lower, upper)
        })
        .collect()
}

/// Per-coordinate shape of the random rectangle chain.
struct AxisShape {
    centre: f64,
    up: f64,
    down: Option<f64>,
}

/// `max_z [P̂(max Z ≤ z + ε) − P̂(max Z ≤ z)]` over 512 grid points spanning
/// the empirical [0.05%, 99.95%] range of `max_j Z_j`.
pub fn anticoncentration_probe(sigma: &CovarianceModel, eps: f64, reps: usize, seed: u64) -> Result<f64> {
    for (j, v) in sigma.diag().into_iter().enumerate() {
        if v < 1.0 - 1e-12 {
            return Err(Error::BadDiagonal { index: j, value: v });
        }
    }
    if !(eps >= 0.0) {
        return Err(invalid("epsilon must be >= 0"));
    }
    if reps == 0 {
        return Err(invalid("need at least one replication"));
    }
    let sample = gaussian_max_sample(sigma, reps, Side::OneSided, seed)?;
    Ok(anticoncentration_on_sample(&sample, eps, 512))
}

/// Probe on a precomputed sample (lets callers reuse draws across `ε`).
pub fn anticoncentration_on_sample(sample: &MaxStatSample, eps: f64, grid: usize) -> f64 {
    let lo = sample.quantile(0.0005);
    let hi = sample.quantile(0.9995);
    let grid = grid.max(2);
    (0..grid)
        .map(|k| {
            let z = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
            sample.ecdf(z + eps) - sample.ecdf(z)
        })
        .fold(0.0, f64::max)
}
