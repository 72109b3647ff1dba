//! Bound shapes: every upper bound evaluated with its unspecified universal
//! constants set by a [`ConstantsPolicy`], together with the moment and
//! covariance functionals that feed them.
//!
//! Values are only meaningful up to the constant; acceptance checks compare
//! ratios and slopes, never absolute levels.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::CovarianceModel;
use crate::sampler::{DataMatrix, DistributionSpec, Family, TwoPointLaw};
use crate::special::GaussLegendre;

/// Assignment for the universal constants `C` appearing in the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsPolicy {
    pub name: String,
    pub scale: f64,
}

impl Default for ConstantsPolicy {
    fn default() -> Self {
        ConstantsPolicy { name: "unit".into(), scale: 1.0 }
    }
}

/// Whether moment inputs are population values or sample plug-ins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    #[default]
    Population,
    PlugIn,
}

/// Everything a bound formula may read. Unused fields stay at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: u64,
    pub d: u64,
    pub sigma_star: f64,
    pub sigma_star_w: f64,
    #[serde(with = "nullable")]
    pub envelope: f64,
    pub delta: f64,
    pub q: f64,
    pub psi: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub delta0_prime: f64,
    pub delta1_prime: f64,
    pub m_max: f64,
    pub m_max_star: f64,
    pub m_psi: f64,
    pub m_psi_star: f64,
    pub lambda1: f64,
    pub delta0_tilde: f64,
    pub delta1_tilde: f64,
    pub delta2_tilde: f64,
    pub alpha: f64,
    pub kappa: u32,
    pub moments: MomentSource,
}

impl BoundInputs {
    /// Zeroed inputs for `(n, d)` with `Λ₁` filled in and `σ* = σ*_W = 1`.
    pub fn new(n: u64, d: u64) -> Self {
        BoundInputs {
            n,
            d,
            sigma_star: 1.0,
            sigma_star_w: 1.0,
            envelope: 0.0,
            delta: 0.0,
            q: 4.0,
            psi: 0.0,
            delta0: 0.0,
            delta1: 0.0,
            delta0_prime: 0.0,
            delta1_prime: 0.0,
            m_max: 0.0,
            m_max_star: 0.0,
            m_psi: 0.0,
            m_psi_star: 0.0,
            lambda1: lambda1(n, d),
            delta0_tilde: 0.0,
            delta1_tilde: 0.0,
            delta2_tilde: 0.0,
            alpha: 0.05,
            kappa: 1,
            moments: MomentSource::Population,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.d < 2 {
            return Err(invalid(format!("bounds need n >= 2 and d >= 2 (n={}, d={})", self.n, self.d)));
        }
        let nonneg = [
            ("delta", self.delta),
            ("psi", self.psi),
            ("delta0", self.delta0),
            ("delta1", self.delta1),
            ("delta0_prime", self.delta0_prime),
            ("delta1_prime", self.delta1_prime),
            ("m_max", self.m_max),
            ("m_max_star", self.m_max_star),
            ("m_psi", self.m_psi),
            ("m_psi_star", self.m_psi_star),
            ("delta0_tilde", self.delta0_tilde),
            ("delta1_tilde", self.delta1_tilde),
            ("delta2_tilde", self.delta2_tilde),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) {
                return Err(invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which published bound a report evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundTag {
    GaussBounded,
    GaussUnbounded,
    SimpleE1,
    SimpleE2,
    SimpleE3,
    GaussianComparison,
    BootstrapMultiplier,
    BootstrapEmpirical,
    Smooth,
    SmoothZeroSkew,
    LocalMeansCombined,
    LocalMeansPrior,
    LocalMeansHungarian,
}

/// One evaluated bound. Serializes to a flat JSON object; a degenerate
/// (`σ* = 0`) value is written as `null` with `degenerate: true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub tag: BoundTag,
    #[serde(with = "nullable")]
    pub value: f64,
    pub degenerate: bool,
    #[serde(flatten)]
    pub inputs: BoundInputs,
    pub constants_policy: ConstantsPolicy,
}

impl BoundReport {
    fn new(tag: BoundTag, raw: f64, inputs: &BoundInputs, policy: &ConstantsPolicy) -> Self {
        BoundReport {
            tag,
            value: policy.scale * raw,
            degenerate: false,
            inputs: inputs.clone(),
            constants_policy: policy.clone(),
        }
    }

    fn degenerate(tag: BoundTag, inputs: &BoundInputs, policy: &ConstantsPolicy) -> Self {
        BoundReport {
            tag,
            value: f64::INFINITY,
            degenerate: true,
            inputs: inputs.clone(),
            constants_policy: policy.clone(),
        }
    }
}

/// `±∞` round-trips through JSON as `null`.
mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// `x (1 ∨ |log x|)`, continuous extension `0` at `x = 0`.
pub fn x_log_factor(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln().abs().max(1.0)
    }
}

/// `(1 ∨ |log x|)`.
fn log_factor(x: f64) -> f64 {
    x.ln().abs().max(1.0)
}

/// `0 · ∞ := 0` product used where a vanishing additive group meets a
/// divergent log prefactor.
fn guarded_mul(factor: f64, group: f64) -> f64 {
    if group == 0.0 {
        0.0
    } else {
        factor * group
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::DegenerateSigma(sigma))
    }
}

/// Classifies `σ` for report mode: `Ok(true)` when degenerate (`σ = 0`).
fn report_sigma(sigma: f64) -> Result<bool> {
    if sigma == 0.0 {
        Ok(true)
    } else {
        check_sigma(sigma).map(|_| false)
    }
}

/// `Λ₁ = (log d)² (log n) log(dn)`.
pub fn lambda1(n: u64, d: u64) -> f64 {
    let (n, d) = (n as f64, d as f64);
    d.ln().powi(2) * n.ln() * (d * n).ln()
}

/// `Δ₀ = (log d/σ*²) ‖Σ − Σ_W‖_∞`.
pub fn delta0(sigma: &CovarianceModel, sigma_w: &CovarianceModel, sigma_star: f64, d: u64) -> Result<f64> {
    check_sigma(sigma_star)?;
    Ok((d as f64).ln() / (sigma_star * sigma_star) * sigma.sup_norm_diff(sigma_w)?)
}

/// `Δ₁ = (log d)²/(n² σ*⁴) · max_j Σ_i E X_ij⁴`; `fourth_sums[j] = Σ_i E X_ij⁴`.
pub fn delta1(fourth_sums: &[f64], n: u64, d: u64, sigma_star: f64) -> Result<f64> {
    check_sigma(sigma_star)?;
    moment_functional(fourth_sums, n, d, sigma_star, 4)
}

/// `Δ̃₀`: as [`delta0`] with the noise eigenvalue `σ_{*,0}`.
pub fn delta0_tilde(sigma: &CovarianceModel, sigma_w: &CovarianceModel, sigma_star0: f64, d: u64) -> Result<f64> {
    delta0(sigma, sigma_w, sigma_star0, d)
}

/// `Δ̃₁ = (log d)^{3/2}/(n^{3/2} σ_{*,0}³) · max_j |Σ_i E X_ij³|`.
pub fn delta1_tilde(third_sums: &[f64], n: u64, d: u64, sigma_star0: f64) -> Result<f64> {
    check_sigma(sigma_star0)?;
    let abs: Vec<f64> = third_sums.iter().map(|v| v.abs()).collect();
    moment_functional(&abs, n, d, sigma_star0, 3)
}

/// `Δ̃₂ = (log d)²/(n² σ_{*,0}⁴) · max_j Σ_i E X_ij⁴`.
pub fn delta2_tilde(fourth_sums: &[f64], n: u64, d: u64, sigma_star0: f64) -> Result<f64> {
    delta1(fourth_sums, n, d, sigma_star0)
}

fn moment_functional(sums: &[f64], n: u64, d: u64, sigma: f64, order: i32) -> Result<f64> {
    if sums.iter().any(|v| !(*v >= 0.0)) {
        return Err(invalid("moment sums must be nonnegative"));
    }
    let max = sums.iter().copied().fold(0.0, f64::max);
    let k = order as f64;
    Ok((d as f64).ln().powf(k / 2.0) / ((n as f64).powf(k / 2.0) * sigma.powi(order)) * max)
}

/// Bounded case: `C{(1∨|log(Δ₁/log d + δ² log d/σ*²)|)(Δ₀ + √(Δ₁ log d) +
/// (δ log d)²/σ*²) + δ(log d)^{3/2}/σ*}`.
pub fn bound_gauss_bounded(inputs: &BoundInputs, policy: &ConstantsPolicy) -> Result<BoundReport> {
    inputs.validate()?;
    let tag = BoundTag::GaussBounded;
    if report_sigma(inputs.sigma_star)? {
        return Ok(BoundReport::degenerate(tag, inputs, policy));
    }
    let ld = (inputs.d as f64).ln();
    let s2 = inputs.sigma_star.powi(2);
    let delta = inputs.delta;
    let arg = inputs.delta1 / ld + delta * delta * ld / s2;
    let group = inputs.delta0 + (inputs.delta1 * ld).sqrt() + (delta * ld).powi(2) / s2;
    let raw = guarded_mul(log_factor(arg), group) + delta * ld.powf(1.5) / inputs.sigma_star;
    Ok(BoundReport::new(tag, raw, inputs, policy))
}

fn unbounded_shape(
    n: u64,
    d: u64,
    sigma: f64,
    d0: f64,
    d1: f64,
    m_max: f64,
    lambda: f64,
    m_psi: f64,
    psi: f64,
) -> f64 {
    let (nf, ld) = (n as f64, (d as f64).ln());
    let s2 = sigma * sigma;
    nf.ln() * (d0 + (d1 * ld).sqrt() + (m_max * ld).powi(2) / (nf * s2))
        + (lambda * m_psi / (nf * s2 * s2)).sqrt()
        + psi * ld.powf(1.5) / (sigma * nf.sqrt())
}

/// Unbounded case: `C{(log n)(Δ₀ + √(Δ₁ log d) + (𝓜 log d)²/(nσ*²)) +
/// √(Λ₁ M(ψ)/(nσ*⁴)) + ψ(log d)^{3/2}/(σ*√n)}`.
pub fn bound_gauss_unbounded(inputs: &BoundInputs, policy: &ConstantsPolicy) -> Result<BoundReport> {
    inputs.validate()?;
    let tag = BoundTag::GaussUnbounded;
    if report_sigma(inputs.sigma_star)? {
        return Ok(BoundReport::degenerate(tag, inputs, policy));
    }
    let i = inputs;
    let raw = unbounded_shape(i.n, i.d, i.sigma_star, i.delta0, i.delta1, i.m_max, i.lambda1, i.m_psi, i.psi);
    Ok(BoundReport::new(tag, raw, inputs, policy))
}

/// Which moment/tail condition a simple-conditions bound assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimpleCase {
    /// Bounded standardized entries.
    E1,
    /// Sub-Gaussian entries plus the fourth-moment cap.
    E2,
    /// `L_q`-bounded coordinate maxima plus the fourth-moment cap.
    E3,
}

/// Simple-conditions bounds in `(B, n, d, σ*_W, q)`.
pub fn bound_corollary_simple(case: SimpleCase, inputs: &BoundInputs, policy: &ConstantsPolicy) -> Result<BoundReport> {
    inputs.validate()?;
    let tag = match case {
        SimpleCase::E1 => BoundTag::SimpleE1,
        SimpleCase::E2 => BoundTag::SimpleE2,
        SimpleCase::E3 => BoundTag::SimpleE3,
    };
    if case == SimpleCase::E3 && !(inputs.q >= 4.0) {
        return Err(Error::BadMomentOrder(inputs.q));
    }
    if report_sigma(inputs.sigma_star_w)? {
        return Ok(BoundReport::degenerate(tag, inputs, policy));
    }
    let b = inputs.envelope;
    let s = inputs.sigma_star_w;
    let (nf, df) = (inputs.n as f64, inputs.d as f64);
    let (ld, ln) = (df.ln(), nf.ln());
    let first = b * ld.powf(1.5) * ln / (nf.sqrt() * s * s);
    let raw = match case {
        SimpleCase::E1 => first,
        SimpleCase::E2 => first + b * ld * ld / (nf.sqrt() * s),
        SimpleCase::E3 => {
            let q = inputs.q;
            let second = b * b * ld * ld * ln / (nf.powf(1.0 - 2.0 / q) * s * s);
            // evaluated in log space: the bracket overflows for large q
            let log_inner = q * b.ln() + (1.5 * q - 4.0) * ld.ln() + ln.ln() + (df * nf).ln().ln()
                - (q / 2.0 - 1.0) * ln
                - q * s.ln();
            first + second + (log_inner / (q - 2.0)).exp()
        }
    };
    Ok(BoundReport::new(tag, raw, inputs, policy))
}

/// Gaussian comparison: `C (D/σ*²) log d (1 ∨ |log(D/σ*²)|)`; `d` may be
/// any real `> 1`.
pub fn bound_gaussian_comparison(
    gap: f64,
    sigma_star_sq: f64,
    d: f64,
    policy: &ConstantsPolicy,
) -> Result<BoundReport> {
    if !(gap >= 0.0) {
        return Err(invalid("covariance gap must be >= 0"));
    }
    check_sigma(sigma_star_sq)?;
    let mut inputs = BoundInputs::new(2, 2);
    inputs.d = d.round() as u64;
    inputs.sigma_star = sigma_star_sq.sqrt();
    inputs.delta0 = gap;
    let raw = x_log_factor(gap / sigma_star_sq) * d.ln();
    Ok(BoundReport::new(BoundTag::GaussianComparison, raw, &inputs, policy))
}

/// Multiplier bootstrap: `C Δ₀′ (1 ∨ |log(Δ₀′/log d)|)`.
pub fn bound_bootstrap_multiplier(delta0_prime: f64, d: u64, policy: &ConstantsPolicy) -> Result<BoundReport> {
    let mut inputs = BoundInputs::new(2, d);
    inputs.delta0_prime = delta0_prime;
    inputs.validate()?;
    let raw = guarded_mul(log_factor(delta0_prime / (d as f64).ln()), delta0_prime);
    Ok(BoundReport::new(BoundTag::BootstrapMultiplier, raw, &inputs, policy))
}

/// Empirical bootstrap: the unbounded shape with primed/starred inputs.
pub fn bound_bootstrap_empirical(inputs: &BoundInputs, policy: &ConstantsPolicy) -> Result<BoundReport> {
    inputs.validate()?;
    let tag = BoundTag::BootstrapEmpirical;
    if report_sigma(inputs.sigma_star)? {
        return Ok(BoundReport::degenerate(tag, inputs, policy));
    }
    let i = inputs;
    let raw = unbounded_shape(
        i.n,
        i.d,
        i.sigma_star,
        i.delta0_prime,
        i.delta1_prime,
        i.m_max_star,
        i.lambda1,
        i.m_psi_star,
        i.psi,
    );
    Ok(BoundReport::new(tag, raw, inputs, policy))
}

/// Smooth case: `C(Δ̃₀ + Δ̃₁)`.
pub fn bound_smooth(inputs: &BoundInputs, policy: &ConstantsPolicy) -> Result<BoundReport> {
    inputs.validate()?;
    Ok(BoundReport::new(BoundTag::Smooth, inputs.delta0_tilde + inputs.delta1_tilde, inputs, policy))
}

/// Smooth zero-skewness case: `C(Δ̃₀ + Δ̃₂)`.
pub fn bound_smooth_zeroskew(inputs: &BoundInputs, policy: &ConstantsPolicy) -> Result<BoundReport> {
    inputs.validate()?;
    Ok(BoundReport::new(BoundTag::SmoothZeroSkew, inputs.delta0_tilde + inputs.delta2_tilde, inputs, policy))
}

/// The three competing bounds for the many-local-means design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMeansBounds {
    pub combined: BoundReport,
    pub prior: BoundReport,
    pub hungarian: BoundReport,
}

/// Combined new bound, prior-work-style bound and the coupling bound for
/// `n` observations in `d = 1/p` cells of a `κ`-dimensional covariate.
pub fn bounds_local_means(n: u64, d: u64, kappa: u32, policy: &ConstantsPolicy) -> Result<LocalMeansBounds> {
    if d < 2 || n < 3 {
        return Err(invalid("local-means bounds need d >= 2 and n >= 3"));
    }
    if kappa == 0 {
        return Err(invalid("kappa must be >= 1"));
    }
    let (nf, df) = (n as f64, d as f64);
    let (ld, ln) = (df.ln(), nf.ln());
    let mut inputs = BoundInputs::new(n, d);
    inputs.kappa = kappa;
    let p = 1.0 / df;
    inputs.sigma_star = (1.0 / (1.0 - p)).sqrt();
    inputs.delta = (df / nf).sqrt();
    inputs.delta0 = ld * (p / (1.0 - p)) / (1.0 / (1.0 - p));

    let ours = ld * ld / df + (df * ld.powi(3) / nf).sqrt() * ln;
    let earlier = (df * ln.powi(5) / nf).powf(0.25);
    let prior = ld * ld / df
        + ((df.powi(3) * ld.powi(4) * ln / nf).sqrt() + (ld.powi(7) * (df * nf).ln() / nf).sqrt()) * ln;
    let np = nf * p;
    let hungarian = ld.sqrt() * ((ln / np.powf(1.0 / kappa as f64)).sqrt() + (ln * ln / np).sqrt());
    Ok(LocalMeansBounds {
        combined: BoundReport::new(BoundTag::LocalMeansCombined, ours.min(earlier), &inputs, policy),
        prior: BoundReport::new(BoundTag::LocalMeansPrior, prior, &inputs, policy),
        hungarian: BoundReport::new(BoundTag::LocalMeansHungarian, hungarian, &inputs, policy),
    })
}

/// Attained statistic for one condition and whether it is within the cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub holds: bool,
    #[serde(with = "nullable")]
    pub attained: f64,
    /// `true` when the statistic is an empirical or simulated surrogate.
    pub proxy: bool,
}

impl ConditionCheck {
    fn new(attained: f64, cap: f64, proxy: bool) -> Self {
        ConditionCheck { holds: attained <= cap, attained, proxy }
    }
}

/// Conditions on standardized entries `X_ij/σ_j`, `σ_j² = E W_j²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub envelope: f64,
    pub q: f64,
    /// `|X_ij/σ_j| ≤ B` a.s.; attained is the max standardized envelope.
    pub e1: ConditionCheck,
    /// `n⁻¹ Σ E|X_ij/σ_j|⁴ ≤ B²`; attained is the max over `j`.
    pub m: ConditionCheck,
    /// `‖X_ij/σ_j‖_{ψ₂} ≤ B`.
    pub e2: ConditionCheck,
    /// `‖max_j |X_ij/σ_j|‖_{L_q} ≤ B`.
    pub e3: ConditionCheck,
}

/// Population conditions for an i.i.d. design.
///
/// Quasi-Gaussian designs are checked on their base family, since the noise
/// enters only through the scaled sum.
pub fn check_conditions_spec(spec: &DistributionSpec, envelope: f64, q: f64) -> Result<ConditionReport> {
    if !(q >= 1.0) {
        return Err(Error::BadMomentOrder(q));
    }
    let d = spec.dim();
    let family = match spec.family() {
        Family::QuasiGaussian { base, .. } => base.as_ref(),
        other => other,
    };
    let base_cov = match spec.family() {
        Family::QuasiGaussian { .. } => family_covariance_of(family, d)?,
        _ => spec.population_covariance()?,
    };
    let sd: Vec<f64> = base_cov.diag().iter().map(|v| v.sqrt()).collect();
    if let Some(j) = sd.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::ZeroVariance(j));
    }
    let fourth = spec.fourth_moments();
    let m_att = fourth.iter().zip(&sd).map(|(m, s)| m / s.powi(4)).fold(0.0, f64::max);

    let (e1_att, e2_att, e3_att, proxy) = match family {
        Family::Gaussian(cov) => {
            (f64::INFINITY, (8.0f64 / 3.0).sqrt(), gaussian_max_lq(cov, q), !cov.is_diagonal())
        }
        Family::TwoPoint { envelope: b } => {
            let law = TwoPointLaw::from_envelope(*b)?;
            two_point_conditions(&law, d, q)
        }
        Family::Rademacher => two_point_conditions(&TwoPointLaw { p: 0.5, high: 1.0, low: -1.0 }, d, q),
        Family::LocalMeans { .. } => {
            let law = TwoPointLaw::from_probability(1.0 / d as f64);
            // exactly one coordinate takes the high value
            let psi2 = psi2_discrete(&[(law.p, law.high), (1.0 - law.p, law.low)]);
            (law.high, psi2, law.high.max(-law.low), false)
        }
        Family::UniformBounded { .. } => {
            // standardized: uniform on [−√3, √3]
            let s3 = 3f64.sqrt();
            let psi2 = psi2_uniform(s3);
            (s3, psi2, s3 * (d as f64 / (d as f64 + q)).powf(1.0 / q), false)
        }
        Family::QuasiGaussian { .. } => unreachable!("unwrapped above"),
    };
    Ok(ConditionReport {
        envelope,
        q,
        e1: ConditionCheck::new(e1_att, envelope, false),
        m: ConditionCheck::new(m_att, envelope * envelope, false),
        e2: ConditionCheck::new(e2_att, envelope, false),
        e3: ConditionCheck::new(e3_att, envelope, proxy),
    })
}

fn family_covariance_of(family: &Family, d: usize) -> Result<CovarianceModel> {
    match family {
        Family::Gaussian(c) => Ok(c.clone()),
        Family::TwoPoint { .. } | Family::Rademacher => Ok(CovarianceModel::identity(d)),
        Family::UniformBounded { envelope } => CovarianceModel::diagonal(&vec![envelope * envelope / 3.0; d]),
        Family::LocalMeans { .. } => CovarianceModel::local_means(d),
        Family::QuasiGaussian { base, .. } => family_covariance_of(base, d),
    }
}

fn two_point_conditions(law: &TwoPointLaw, d: usize, q: f64) -> (f64, f64, f64, bool) {
    let hi = law.high.abs();
    let lo = law.low.abs();
    let env = hi.max(lo);
    let psi2 = psi2_discrete(&[(law.p, law.high), (1.0 - law.p, law.low)]);
    // max_j |X_j| is the larger magnitude as soon as one coordinate takes it
    let (big, small, p_big) = if hi >= lo { (hi, lo, law.p) } else { (lo, hi, 1.0 - law.p) };
    let none = (1.0 - p_big).powi(d as i32);
    let lq = ((1.0 - none) * big.powf(q) + none * small.powf(q)).powf(1.0 / q);
    (env, psi2, lq, false)
}

/// `‖max_j |Z_j/σ_j|‖_{L_q}` for `Z ~ N(0, Σ)`: quadrature on the max CDF
/// for diagonal `Σ`, a fixed-seed simulation otherwise.
fn gaussian_max_lq(cov: &CovarianceModel, q: f64) -> f64 {
    use crate::special::{norm_interval, norm_pdf};
    let d = cov.dim() as i32;
    if cov.is_diagonal() {
        // density of M = max|Z_j|: d · 2φ(t) · (2Φ(t) − 1)^{d−1}
        let gl = GaussLegendre::cached(128);
        let m = gl.integrate(0.0, 12.0, |t| {
            t.powf(q) * d as f64 * 2.0 * norm_pdf(t) * norm_interval(-t, t).powi(d - 1)
        });
        return m.powf(1.0 / q);
    }
    use rand::Rng;
    use rand_distr::StandardNormal;
    let dim = cov.dim();
    let sd: Vec<f64> = cov.diag().iter().map(|v| v.sqrt()).collect();
    let mut rng = crate::rng::substream(0x5eed, 0);
    let reps = 20_000;
    let mut z = vec![0.0; dim];
    let mut out = vec![0.0; dim];
    let mut acc = 0.0;
    for _ in 0..reps {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        cov.transform(&z, &mut out);
        let m = out.iter().zip(&sd).map(|(v, s)| (v / s).abs()).fold(0.0, f64::max);
        acc += m.powf(q);
    }
    (acc / reps as f64).powf(1.0 / q)
}

/// Smallest `t` with `E exp(X²/t²) ≤ 2`, found by bisection on `log t`;
/// `mgf(a)` must return `E exp(a X²)`.
fn psi2_solve(scale: f64, log_mgf: impl Fn(f64) -> f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    // at t = scale/√ln2 every term is ≤ 2
    let mut hi = (scale / std::f64::consts::LN_2.sqrt()).ln();
    let mut lo = hi - 20.0;
    let target = std::f64::consts::LN_2;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let t = mid.exp();
        if log_mgf(1.0 / (t * t)) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.exp()
}

fn psi2_discrete(atoms: &[(f64, f64)]) -> f64 {
    let scale = atoms.iter().filter(|(w, _)| *w > 0.0).map(|(_, v)| v.abs()).fold(0.0, f64::max);
    psi2_solve(scale, |a| log_sum_exp(atoms.iter().filter(|(w, _)| *w > 0.0).map(|(w, v)| w.ln() + a * v * v)))
}

/// ψ₂ norm of the uniform law on `[−s, s]`.
fn psi2_uniform(s: f64) -> f64 {
    let gl = GaussLegendre::cached(96);
    psi2_solve(s, |a| {
        // E exp(a s² U²), U ~ U[0,1]; factor out the peak for stability
        let peak = a * s * s;
        if peak > 50.0 {
            // the mass concentrates at u = 1 beyond quadrature resolution;
            // the mgf is already far above 2
            return peak - (2.0 * peak).ln();
        }
        let rest = gl.integrate(0.0, 1.0, |u| (peak * (u * u - 1.0)).exp());
        peak + rest.ln()
    })
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Plug-in conditions from a sample. `σ_j² = n⁻¹ Σ_i X_ij²`; the ψ₂ and
/// `L_q` statistics are empirical surrogates and flagged as proxies.
pub fn check_conditions_data(x: &DataMatrix, envelope: f64, q: f64) -> Result<ConditionReport> {
    if !(q >= 1.0) {
        return Err(Error::BadMomentOrder(q));
    }
    let (n, d) = (x.n(), x.d());
    let mut second = vec![0.0; d];
    for row in x.rows() {
        for (s, v) in second.iter_mut().zip(row) {
            *s += v * v;
        }
    }
    let sd: Vec<f64> = second.iter().map(|s| (s / n as f64).sqrt()).collect();
    if let Some(j) = sd.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::ZeroVariance(j));
    }
    let mut e1 = 0.0f64;
    let mut fourth = vec![0.0; d];
    let mut lq = 0.0;
    for row in x.rows() {
        let mut row_max = 0.0f64;
        for (j, v) in row.iter().enumerate() {
            let z = (v / sd[j]).abs();
            e1 = e1.max(z);
            fourth[j] += z.powi(4);
            row_max = row_max.max(z);
        }
        lq += row_max.powf(q);
    }
    let m_att = fourth.iter().map(|s| s / n as f64).fold(0.0, f64::max);
    let w = (1.0 / n as f64).ln();
    let mut psi2 = 0.0f64;
    for j in 0..d {
        let col: Vec<f64> = (0..n).map(|i| x.row(i)[j] / sd[j]).collect();
        let scale = col.iter().map(|v| v.abs()).fold(0.0, f64::max);
        psi2 = psi2.max(psi2_solve(scale, |a| log_sum_exp(col.iter().map(|v| w + a * v * v))));
    }
    Ok(ConditionReport {
        envelope,
        q,
        e1: ConditionCheck::new(e1, envelope, false),
        m: ConditionCheck::new(m_att, envelope * envelope, false),
        e2: ConditionCheck::new(psi2, envelope, true),
        e3: ConditionCheck::new((lq / n as f64).powf(1.0 / q), envelope, true),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn x_log_factor_convention() {
        assert_eq!(x_log_factor(0.0), 0.0);
        assert_relative_eq!(x_log_factor(1.0), 1.0);
        assert_relative_eq!(x_log_factor((-3f64).exp()), 3.0 * (-3f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn psi2_of_rademacher() {
        // E exp(1/t²) = 2 ⇔ t = 1/√ln2
        assert_relative_eq!(psi2_discrete(&[(0.5, 1.0), (0.5, -1.0)]), 1.0 / 2f64.ln().sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn psi2_uniform_solves_its_equation() {
        let t = psi2_uniform(1.0);
        let gl = GaussLegendre::new(96);
        let m = gl.integrate(0.0, 1.0, |u| (u * u / (t * t)).exp());
        assert_relative_eq!(m, 2.0, epsilon = 1e-9);
    }
}
