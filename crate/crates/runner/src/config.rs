//! Flat TOML experiment configuration and its validation into a typed plan.
//!
//! Every key is optional except `experiment`; unset keys take the
//! experiment's desk-scale default. Keys an experiment does not read are
//! rejected, as are unknown keys.

use std::path::{Path, PathBuf};

use hdclt::bootstrap::MultiplierKind;
use hdclt::distance::RectFamily;
use hdclt::lowerbound::RateEstimator;
use hdclt::smoothing::LemmaSweep;
use serde::{Deserialize, Serialize};

use crate::error::{RunnerError, RunnerResult};

/// Experiment tags accepted by `experiment = "..."`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentTag {
    RateVsN,
    ZeroSkewRate,
    BootstrapCoverage,
    BootstrapAgreement,
    LocalMeans,
    SmoothingVerify,
    GaussianComparison,
    PoissonCheck,
    Anticoncentration,
}

impl ExperimentTag {
    pub const ALL: [ExperimentTag; 9] = [
        ExperimentTag::RateVsN,
        ExperimentTag::ZeroSkewRate,
        ExperimentTag::BootstrapCoverage,
        ExperimentTag::BootstrapAgreement,
        ExperimentTag::LocalMeans,
        ExperimentTag::SmoothingVerify,
        ExperimentTag::GaussianComparison,
        ExperimentTag::PoissonCheck,
        ExperimentTag::Anticoncentration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentTag::RateVsN => "rate_vs_n",
            ExperimentTag::ZeroSkewRate => "zero_skew_rate",
            ExperimentTag::BootstrapCoverage => "bootstrap_coverage",
            ExperimentTag::BootstrapAgreement => "bootstrap_agreement",
            ExperimentTag::LocalMeans => "local_means",
            ExperimentTag::SmoothingVerify => "smoothing_verify",
            ExperimentTag::GaussianComparison => "gaussian_comparison",
            ExperimentTag::PoissonCheck => "poisson_check",
            ExperimentTag::Anticoncentration => "anticoncentration",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentTag::RateVsN => "distance to the Gaussian reference vs n (two-point design, n^-1/2 rate)",
            ExperimentTag::ZeroSkewRate => "zero-skewness quasi-Gaussian design, n^-1 rate",
            ExperimentTag::BootstrapCoverage => "simultaneous multiplier-bootstrap band coverage",
            ExperimentTag::BootstrapAgreement => "multiplier draws vs N(0, sample covariance) at fixed data",
            ExperimentTag::LocalMeans => "many-local-means design: distance, surrogate path and bounds",
            ExperimentTag::SmoothingVerify => "attained constants of the smoothing derivative bounds",
            ExperimentTag::GaussianComparison => "distance between two Gaussians vs the comparison bound",
            ExperimentTag::PoissonCheck => "Poisson approximation of the max statistic at x_n",
            ExperimentTag::Anticoncentration => "Gaussian max anti-concentration probe vs eps*sqrt(log d)",
        }
    }

    /// Keys (besides the common ones) the experiment reads.
    fn keys(self) -> &'static [&'static str] {
        match self {
            ExperimentTag::RateVsN => &["reps", "n_list", "d", "envelope", "base", "family", "rect_count", "rect_seed", "estimator", "q"],
            ExperimentTag::ZeroSkewRate => &["reps", "n_list", "d", "base", "envelope", "family", "rect_count", "rect_seed", "estimator"],
            ExperimentTag::BootstrapCoverage => &["reps", "outer_reps", "n", "d", "envelope", "base", "level", "multiplier"],
            ExperimentTag::BootstrapAgreement => &["reps", "n", "d", "envelope", "base", "multiplier"],
            ExperimentTag::LocalMeans => &["reps", "d_list", "n_per_dim", "kappa"],
            ExperimentTag::SmoothingVerify => &["d_list", "v_list", "phi_list", "eps_list", "smoothing_k", "smoothing_kappa", "half_widths"],
            ExperimentTag::GaussianComparison => &["reps", "d", "rho", "gap_list"],
            ExperimentTag::PoissonCheck => &["reps", "n", "d", "envelope", "base"],
            ExperimentTag::Anticoncentration => &["reps", "d", "rho", "eps_list"],
        }
    }
}

/// Data-generating family selectable from a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFamily {
    Gaussian,
    TwoPoint,
    Rademacher,
    UniformBounded,
}

/// Rectangle family names accepted by `family = "..."`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    OneSidedMax,
    TwoSidedMax,
    RandomRects,
}

/// The file as written. Unset keys are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentTag>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub constants_name: Option<String>,
    pub constants_scale: Option<f64>,
    pub reps: Option<usize>,
    pub outer_reps: Option<usize>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub n_per_dim: Option<usize>,
    pub d: Option<usize>,
    pub d_list: Option<Vec<usize>>,
    pub envelope: Option<f64>,
    pub base: Option<BaseFamily>,
    pub kappa: Option<u32>,
    pub q: Option<f64>,
    pub level: Option<f64>,
    pub multiplier: Option<MultiplierKind>,
    pub family: Option<FamilyName>,
    pub rect_count: Option<usize>,
    pub rect_seed: Option<u64>,
    pub estimator: Option<RateEstimator>,
    pub rho: Option<f64>,
    pub gap_list: Option<Vec<f64>>,
    pub eps_list: Option<Vec<f64>>,
    pub phi_list: Option<Vec<f64>>,
    pub v_list: Option<Vec<usize>>,
    pub smoothing_k: Option<f64>,
    pub smoothing_kappa: Option<f64>,
    pub half_widths: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> RunnerResult<Self> {
        toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> RunnerResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn set_keys(&self) -> Vec<String> {
        let v = serde_json::to_value(self).expect("config serializes");
        v.as_object().expect("struct").iter().filter(|(_, val)| !val.is_null()).map(|(k, _)| k.clone()).collect()
    }

    /// Validates every field and resolves defaults.
    pub fn validate(&self) -> RunnerResult<Plan> {
        let tag = self.experiment.ok_or_else(|| cfg("missing required key `experiment`"))?;
        for key in self.set_keys() {
            if !COMMON_KEYS.contains(&key.as_str()) && !tag.keys().contains(&key.as_str()) {
                return Err(cfg(format!("key `{key}` is not used by experiment `{}`", tag.name())));
            }
        }
        let constants_scale = self.constants_scale.unwrap_or(if tag == ExperimentTag::LocalMeans { 10.0 } else { 1.0 });
        positive("constants_scale", constants_scale)?;
        let common = Common {
            seed: self.seed.unwrap_or(20_240_601),
            out_dir: self.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs")),
            constants_name: self.constants_name.clone().unwrap_or_else(|| {
                if constants_scale == 1.0 { "unit".into() } else { format!("unit_x{constants_scale}") }
            }),
            constants_scale,
        };
        let params = match tag {
            ExperimentTag::RateVsN => Params::Rate(self.rate(BaseFamily::TwoPoint, 50, vec![250, 500, 1000, 2000], 200_000, RateEstimator::TwoSample)?),
            ExperimentTag::ZeroSkewRate => Params::Rate(self.rate(BaseFamily::Rademacher, 20, vec![100, 200, 400], 1_000_000, RateEstimator::Coupled)?),
            ExperimentTag::BootstrapCoverage => Params::Coverage(CoverageParams {
                data: self.data(BaseFamily::UniformBounded, 500, 20)?,
                reps: at_least("reps", self.reps.unwrap_or(2000), 100)?,
                outer_reps: at_least("outer_reps", self.outer_reps.unwrap_or(2000), 1)?,
                level: open_unit("level", self.level.unwrap_or(0.9))?,
                multiplier: self.multiplier.unwrap_or(MultiplierKind::Gaussian),
            }),
            ExperimentTag::BootstrapAgreement => Params::Agreement(AgreementParams {
                data: self.data(BaseFamily::UniformBounded, 200, 10)?,
                reps: at_least("reps", self.reps.unwrap_or(100_000), 2)?,
                multiplier: self.multiplier.unwrap_or(MultiplierKind::Gaussian),
            }),
            ExperimentTag::LocalMeans => {
                let d_list = self.d_list.clone().unwrap_or_else(|| vec![10, 40]);
                non_empty("d_list", &d_list)?;
                for d in &d_list {
                    at_least("d_list entry", *d, 3)?;
                }
                Params::LocalMeans(LocalMeansParams {
                    d_list,
                    n_per_dim: at_least("n_per_dim", self.n_per_dim.unwrap_or(50), 1)?,
                    reps: at_least("reps", self.reps.unwrap_or(100_000), 2)?,
                    kappa: at_least("kappa", self.kappa.unwrap_or(1) as usize, 1)? as u32,
                })
            }
            ExperimentTag::SmoothingVerify => Params::Smoothing(self.sweep()?),
            ExperimentTag::GaussianComparison => {
                let d = at_least("d", self.d.unwrap_or(20), 2)?;
                let rho = self.rho.unwrap_or(0.3);
                let gap_list = self.gap_list.clone().unwrap_or_else(|| vec![0.01, 0.02, 0.05, 0.1, 0.2]);
                non_empty("gap_list", &gap_list)?;
                for g in &gap_list {
                    positive("gap_list entry", *g)?;
                    equicorrelation_ok(d, rho + g)?;
                }
                equicorrelation_ok(d, rho)?;
                Params::Comparison(ComparisonParams { d, rho, gap_list, reps: at_least("reps", self.reps.unwrap_or(100_000), 2)? })
            }
            ExperimentTag::PoissonCheck => Params::Poisson(PoissonParams {
                data: self.data(BaseFamily::TwoPoint, 1000, 50)?,
                reps: at_least("reps", self.reps.unwrap_or(200_000), 1)?,
            }),
            ExperimentTag::Anticoncentration => {
                let d = at_least("d", self.d.unwrap_or(50), 2)?;
                let rho = self.rho.unwrap_or(0.3);
                equicorrelation_ok(d, rho)?;
                let eps_list = self.eps_list.clone().unwrap_or_else(|| vec![0.01, 0.02, 0.05, 0.1, 0.2]);
                non_empty("eps_list", &eps_list)?;
                for e in &eps_list {
                    nonnegative("eps_list entry", *e)?;
                }
                Params::Anticoncentration(AntiParams { d, rho, eps_list, reps: at_least("reps", self.reps.unwrap_or(100_000), 2)? })
            }
        };
        Ok(Plan { experiment: tag, common, params })
    }

    fn data(&self, default_base: BaseFamily, n: usize, d: usize) -> RunnerResult<DataParams> {
        let base = self.base.unwrap_or(default_base);
        let envelope = self.envelope.unwrap_or(match base {
            BaseFamily::Rademacher | BaseFamily::Gaussian => 1.0,
            _ => 2.0,
        });
        check_envelope(base, envelope)?;
        Ok(DataParams { base, envelope, n: at_least("n", self.n.unwrap_or(n), 1)?, d: at_least("d", self.d.unwrap_or(d), 1)? })
    }

    fn rate(
        &self,
        default_base: BaseFamily,
        d: usize,
        n_list: Vec<usize>,
        reps: usize,
        estimator: RateEstimator,
    ) -> RunnerResult<RateParams> {
        let base = self.base.unwrap_or(default_base);
        let envelope = self.envelope.unwrap_or(if base == BaseFamily::Rademacher { 1.0 } else { 2.0 });
        check_envelope(base, envelope)?;
        let n_list = self.n_list.clone().unwrap_or(n_list);
        non_empty("n_list", &n_list)?;
        if n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(cfg("n_list must be positive and strictly ascending"));
        }
        let family = match self.family.unwrap_or(FamilyName::OneSidedMax) {
            FamilyName::OneSidedMax => RectFamily::OneSidedMax,
            FamilyName::TwoSidedMax => RectFamily::TwoSidedMax,
            FamilyName::RandomRects => RectFamily::RandomRects {
                count: at_least("rect_count", self.rect_count.unwrap_or(256), 1)?,
                seed: self.rect_seed.unwrap_or(1),
            },
        };
        if self.family != Some(FamilyName::RandomRects) && (self.rect_count.is_some() || self.rect_seed.is_some()) {
            return Err(cfg("rect_count/rect_seed require family = \"random_rects\""));
        }
        let estimator = self.estimator.unwrap_or(estimator);
        if estimator == RateEstimator::Coupled
            && (family != RectFamily::OneSidedMax || !matches!(base, BaseFamily::Rademacher | BaseFamily::TwoPoint))
        {
            return Err(cfg("estimator = \"coupled\" needs a rademacher or two_point base and family = \"one_sided_max\""));
        }
        let q = self.q.unwrap_or(4.0);
        if !(q >= 1.0) {
            return Err(cfg(format!("q must be >= 1, got {q}")));
        }
        Ok(RateParams {
            base,
            envelope,
            d: at_least("d", self.d.unwrap_or(d), 2)?,
            n_list,
            reps: at_least("reps", self.reps.unwrap_or(reps), 2)?,
            family,
            estimator,
            q,
        })
    }

    fn sweep(&self) -> RunnerResult<LemmaSweep> {
        let def = LemmaSweep::default();
        let sweep = LemmaSweep {
            d_list: self.d_list.clone().unwrap_or(def.d_list),
            v_list: self.v_list.clone().unwrap_or(def.v_list),
            phi_list: self.phi_list.clone().unwrap_or(def.phi_list),
            eps_list: self.eps_list.clone().unwrap_or(def.eps_list),
            k: self.smoothing_k.unwrap_or(def.k),
            kappa: self.smoothing_kappa.unwrap_or(def.kappa),
            half_widths: self.half_widths.clone().unwrap_or(def.half_widths),
        };
        for (name, empty) in [
            ("d_list", sweep.d_list.is_empty()),
            ("v_list", sweep.v_list.is_empty()),
            ("phi_list", sweep.phi_list.is_empty()),
            ("eps_list", sweep.eps_list.is_empty()),
            ("half_widths", sweep.half_widths.is_empty()),
        ] {
            if empty {
                return Err(cfg(format!("{name} must be non-empty")));
            }
        }
        for d in &sweep.d_list {
            if !(2..=8).contains(d) {
                return Err(cfg(format!("smoothing d must lie in [2, 8], got {d}")));
            }
        }
        for v in &sweep.v_list {
            if !(1..=4).contains(v) {
                return Err(cfg(format!("derivative order must lie in [1, 4], got {v}")));
            }
        }
        for p in &sweep.phi_list {
            positive("phi_list entry", *p)?;
        }
        for e in &sweep.eps_list {
            positive("eps_list entry", *e)?;
            if e.is_infinite() {
                return Err(cfg("eps_list entries must be finite"));
            }
        }
        for h in &sweep.half_widths {
            positive("half_widths entry", *h)?;
        }
        positive("smoothing_k", sweep.k)?;
        positive("smoothing_kappa", sweep.kappa)?;
        Ok(sweep)
    }
}

const COMMON_KEYS: [&str; 5] = ["experiment", "seed", "out_dir", "constants_name", "constants_scale"];

fn cfg(msg: impl Into<String>) -> RunnerError {
    RunnerError::Config(msg.into())
}

fn at_least(name: &str, v: usize, min: usize) -> RunnerResult<usize> {
    if v < min {
        Err(cfg(format!("{name} must be >= {min}, got {v}")))
    } else {
        Ok(v)
    }
}

fn positive(name: &str, v: f64) -> RunnerResult<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(cfg(format!("{name} must be > 0, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> RunnerResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn open_unit(name: &str, v: f64) -> RunnerResult<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(cfg(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn non_empty<T>(name: &str, v: &[T]) -> RunnerResult<()> {
    if v.is_empty() {
        Err(cfg(format!("{name} must be non-empty")))
    } else {
        Ok(())
    }
}

fn check_envelope(base: BaseFamily, envelope: f64) -> RunnerResult<()> {
    match base {
        BaseFamily::TwoPoint if !(envelope >= 2.0 && envelope.is_finite()) => {
            Err(cfg(format!("two_point needs a finite envelope >= 2, got {envelope}")))
        }
        BaseFamily::UniformBounded if !(envelope > 0.0 && envelope.is_finite()) => {
            Err(cfg(format!("uniform_bounded needs a finite envelope > 0, got {envelope}")))
        }
        _ => Ok(()),
    }
}

fn equicorrelation_ok(d: usize, rho: f64) -> RunnerResult<()> {
    let lower = -1.0 / (d as f64 - 1.0);
    if rho > lower && rho < 1.0 {
        Ok(())
    } else {
        Err(cfg(format!("correlation {rho} is not positive definite at d = {d}")))
    }
}

/// Validated configuration with defaults filled in. Its JSON form is what
/// the config hash is computed over.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub experiment: ExperimentTag,
    #[serde(flatten)]
    pub common: Common,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Common {
    pub seed: u64,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub constants_name: String,
    pub constants_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Rate(RateParams),
    Coverage(CoverageParams),
    Agreement(AgreementParams),
    LocalMeans(LocalMeansParams),
    Smoothing(LemmaSweep),
    Comparison(ComparisonParams),
    Poisson(PoissonParams),
    Anticoncentration(AntiParams),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataParams {
    pub base: BaseFamily,
    pub envelope: f64,
    pub n: usize,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateParams {
    pub base: BaseFamily,
    pub envelope: f64,
    pub d: usize,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub family: RectFamily,
    pub estimator: RateEstimator,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageParams {
    pub data: DataParams,
    pub reps: usize,
    pub outer_reps: usize,
    pub level: f64,
    pub multiplier: MultiplierKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementParams {
    pub data: DataParams,
    pub reps: usize,
    pub multiplier: MultiplierKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalMeansParams {
    pub d_list: Vec<usize>,
    pub n_per_dim: usize,
    pub reps: usize,
    pub kappa: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonParams {
    pub d: usize,
    pub rho: f64,
    pub gap_list: Vec<f64>,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonParams {
    pub data: DataParams,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntiParams {
    pub d: usize,
    pub rho: f64,
    pub eps_list: Vec<f64>,
    pub reps: usize,
}
