//! Multiplier and empirical bootstrap engines and their data-driven bound
//! inputs.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::CovarianceModel;
use crate::rng::{self, label};
use crate::sampler::{DataMatrix, Draws, Side};

/// Multiplier law for `W^ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierKind {
    Gaussian,
    Rademacher,
    /// Golden-ratio two-point law with `E ξ = 0`, `E ξ² = 1`, `E ξ³ = 1`.
    Mammen,
}

const SQRT5: f64 = 2.236_067_977_499_79;

impl MultiplierKind {
    /// `(low, high, P(low))` of the Mammen law.
    pub fn mammen_atoms() -> (f64, f64, f64) {
        ((1.0 - SQRT5) / 2.0, (1.0 + SQRT5) / 2.0, (SQRT5 + 1.0) / (2.0 * SQRT5))
    }

    #[inline]
    pub fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            MultiplierKind::Gaussian => rng.sample(StandardNormal),
            MultiplierKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            MultiplierKind::Mammen => {
                let (lo, hi, p_lo) = Self::mammen_atoms();
                if rng.random::<f64>() < p_lo {
                    lo
                } else {
                    hi
                }
            }
        }
    }
}

/// Rows centered at the column means, `X_i − X̄`.
pub fn centered(x: &DataMatrix) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (x.n(), x.d());
    let mut mean = vec![0.0; d];
    for row in x.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut c = x.values().to_vec();
    for row in c.chunks_exact_mut(d) {
        for (v, m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    (c, mean)
}

/// `R` draws of `W^ξ = n^{-1/2} Σ_i ξ_i (X_i − X̄)` with fresh multipliers per
/// draw and `X` held fixed.
pub fn multiplier_draws(x: &DataMatrix, reps: usize, kind: MultiplierKind, seed: u64) -> Result<Draws> {
    let (n, d) = (x.n(), x.d());
    let (c, _) = centered(x);
    let scale = 1.0 / (n as f64).sqrt();
    let stream_seed = rng::mix(seed, label::MULTIPLIER);
    let mut values = vec![0.0; reps * d];
    values.par_chunks_mut(d).enumerate().with_min_len(16).for_each(|(r, out)| {
        let mut rng = rng::substream(stream_seed, r as u64);
        for row in c.chunks_exact(d) {
            let xi = kind.draw(&mut rng);
            for (o, v) in out.iter_mut().zip(row) {
                *o += xi * v;
            }
        }
        out.iter_mut().for_each(|o| *o *= scale);
    });
    Draws::new(reps, d, values)
}

/// `R` draws of `W* = n^{-1/2} Σ_i (X_i* − X̄)`, rows resampled with
/// replacement.
pub fn empirical_draws(x: &DataMatrix, reps: usize, seed: u64) -> Result<Draws> {
    let (n, d) = (x.n(), x.d());
    let (c, _) = centered(x);
    let scale = 1.0 / (n as f64).sqrt();
    let stream_seed = rng::mix(seed, label::RESAMPLE);
    let mut values = vec![0.0; reps * d];
    values.par_chunks_mut(d).enumerate().with_min_len(16).for_each(|(r, out)| {
        let mut rng = rng::substream(stream_seed, r as u64);
        for _ in 0..n {
            let i = rng.random_range(0..n);
            for (o, v) in out.iter_mut().zip(&c[i * d..(i + 1) * d]) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o *= scale);
    });
    Draws::new(reps, d, values)
}

/// `Σ̂ⁿ = n⁻¹ Σ_i (X_i − X̄)(X_i − X̄)ᵀ` (divisor `n`).
pub fn empirical_cov_centered(x: &DataMatrix) -> Result<CovarianceModel> {
    let (n, d) = (x.n(), x.d());
    let (c, _) = centered(x);
    let mut s = vec![0.0; d * d];
    for row in c.chunks_exact(d) {
        for j in 0..d {
            let rj = row[j];
            for k in j..d {
                s[j * d + k] += rj * row[k];
            }
        }
    }
    for j in 0..d {
        for k in j..d {
            let v = s[j * d + k] / n as f64;
            s[j * d + k] = v;
            s[k * d + j] = v;
        }
    }
    CovarianceModel::new(d, s)
}

/// `Δ₀′ = (log d/σ*²) ‖Σ − Σ̂ⁿ‖_∞`.
pub fn delta0_prime(sigma: &CovarianceModel, sigma_hat: &CovarianceModel, sigma_star: f64, d: u64) -> Result<f64> {
    crate::bounds::delta0(sigma, sigma_hat, sigma_star, d)
}

/// Data-driven inputs of the empirical-bootstrap bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInputs {
    /// `(log d)²/(n²σ*⁴) max_j Σ_i (X_ij − X̄_j)⁴`
    pub delta1_prime: f64,
    /// `max_{i,j} |X_ij − X̄_j|`
    pub m_max_star: f64,
    /// `n⁻¹ Σ_i ‖X_i − X̄‖_∞⁴ 1{‖X_i − X̄‖_∞ > ψ}`
    pub m_psi_star: f64,
}

pub fn bootstrap_bound_inputs(x: &DataMatrix, psi: f64, sigma_star: f64) -> Result<BootstrapInputs> {
    if !(psi > 0.0) {
        return Err(invalid("truncation level psi must be positive"));
    }
    if !(sigma_star > 0.0) {
        return Err(Error::DegenerateSigma(sigma_star));
    }
    let (n, d) = (x.n(), x.d());
    let (c, _) = centered(x);
    let mut fourth = vec![0.0; d];
    let mut m_max = 0.0f64;
    let mut m_psi = 0.0;
    for row in c.chunks_exact(d) {
        let mut norm = 0.0f64;
        for (f, v) in fourth.iter_mut().zip(row) {
            *f += v.powi(4);
            norm = norm.max(v.abs());
        }
        m_max = m_max.max(norm);
        if norm > psi {
            m_psi += norm.powi(4);
        }
    }
    Ok(BootstrapInputs {
        delta1_prime: crate::bounds::delta1(&fourth, n as u64, d as u64, sigma_star)?,
        m_max_star: m_max,
        m_psi_star: m_psi / n as f64,
    })
}

/// Empirical `level`-quantile of the per-draw maximum: the `⌈level·R⌉`-th
/// order statistic of `max_j |draw_j|` (two-sided) or `max_j draw_j`.
pub fn simultaneous_quantile(draws: &Draws, level: f64, side: Side) -> Result<f64> {
    if draws.reps() < 100 {
        return Err(invalid(format!("need at least 100 draws, got {}", draws.reps())));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(invalid(format!("level must lie in (0, 1], got {level}")));
    }
    let mut m = draws.max_stat(side);
    let k = ((level * m.len() as f64).ceil() as usize).clamp(1, m.len());
    let (_, kth, _) = m.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}
