//! One function per experiment tag. Each returns its tables, criteria,
//! plot series and metadata without touching the filesystem.

use hdclt::bootstrap::{empirical_cov_centered, multiplier_draws, simultaneous_quantile};
use hdclt::bounds::{
    bound_corollary_simple, bound_gaussian_comparison, bound_smooth_zeroskew, bounds_local_means,
    check_conditions_spec, delta0, delta2_tilde, BoundInputs, ConstantsPolicy, SimpleCase,
};
use hdclt::distance::{
    anticoncentration_on_sample, gaussian_max_sample, ks_detail, MaxStatSample, RectFamily,
};
use hdclt::lowerbound::{normalized_distance, poisson_approx_check, rate_curve};
use hdclt::rng::mix;
use hdclt::sampler::{sample, scaled_sum, scaled_sum_draws, DistributionSpec, Side};
use hdclt::smoothing::{verify_lemmas, LemmaRow, LemmaSweep};
use hdclt::CovarianceModel;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{
    AgreementParams, AntiParams, BaseFamily, ComparisonParams, CoverageParams, ExperimentTag, LocalMeansParams,
    Params, Plan, PoissonParams, RateParams,
};
use crate::error::RunnerResult;
use crate::plot::{PlotKind, PlotPoint};

/// A CSV table with a fixed header; cells are already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// One pass/fail check with the statistic it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: String,
    pub description: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Criterion {
    fn at_most(id: impl Into<String>, description: impl Into<String>, value: f64, threshold: f64) -> Self {
        Criterion { id: id.into(), description: description.into(), pass: value <= threshold, value, threshold }
    }

    fn at_least(id: impl Into<String>, description: impl Into<String>, value: f64, threshold: f64) -> Self {
        Criterion { id: id.into(), description: description.into(), pass: value >= threshold, value, threshold }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub file: &'static str,
    pub kind: PlotKind,
    pub title: String,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub points: Vec<PlotPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    pub criteria: Vec<Criterion>,
    pub plots: Vec<PlotSeries>,
    pub metadata: serde_json::Value,
}

impl ExperimentOutput {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }
}

/// Shortest round-trip decimal form; identical bits give identical text.
pub fn num(v: f64) -> String {
    format!("{v}")
}

fn policy(plan: &Plan) -> ConstantsPolicy {
    ConstantsPolicy { name: plan.common.constants_name.clone(), scale: plan.common.constants_scale }
}

fn base_spec(base: BaseFamily, d: usize, envelope: f64) -> RunnerResult<DistributionSpec> {
    Ok(match base {
        BaseFamily::Gaussian => DistributionSpec::gaussian(CovarianceModel::identity(d)),
        BaseFamily::TwoPoint => DistributionSpec::two_point(d, envelope)?,
        BaseFamily::Rademacher => DistributionSpec::rademacher(d)?,
        BaseFamily::UniformBounded => DistributionSpec::uniform_bounded(d, envelope)?,
    })
}

fn ratio(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Runs the experiment described by `plan` on the current rayon pool.
pub fn execute(plan: &Plan) -> RunnerResult<ExperimentOutput> {
    let seed = plan.common.seed;
    match (&plan.params, plan.experiment) {
        (Params::Rate(p), tag) => rate(plan, p, tag),
        (Params::Coverage(p), _) => coverage(p, seed),
        (Params::Agreement(p), _) => agreement(p, seed),
        (Params::LocalMeans(p), _) => local_means(plan, p),
        (Params::Smoothing(s), _) => smoothing(s),
        (Params::Comparison(p), _) => comparison(plan, p),
        (Params::Poisson(p), _) => poisson(p, seed),
        (Params::Anticoncentration(p), _) => anticoncentration(p, seed),
    }
}

fn rate(plan: &Plan, p: &RateParams, tag: ExperimentTag) -> RunnerResult<ExperimentOutput> {
    let zero_skew = tag == ExperimentTag::ZeroSkewRate;
    let base = base_spec(p.base, p.d, p.envelope)?;
    let spec = if zero_skew {
        DistributionSpec::quasi_gaussian(base.clone(), CovarianceModel::identity(p.d))?
    } else {
        base.clone()
    };
    let seed = plan.common.seed;
    let curve = rate_curve(&spec, &p.n_list, p.reps, p.family, p.estimator, seed)?;
    let pol = policy(plan);
    let d = p.d as u64;
    let mut rows = Vec::new();
    let mut normalized = Vec::new();
    for pt in &curve.points {
        let norm = if zero_skew {
            pt.distance * pt.n as f64
        } else {
            normalized_distance(pt.distance, pt.n, p.envelope, d)
        };
        let bound = if zero_skew {
            // Σ₀ = I: the smooth Δ̃₀ vanishes and σ*₀ = 1
            let mut inputs = BoundInputs::new(pt.n, d);
            let fourth: Vec<f64> = base.fourth_moments().iter().map(|m| m * pt.n as f64).collect();
            inputs.delta2_tilde = delta2_tilde(&fourth, pt.n, d, 1.0)?;
            bound_smooth_zeroskew(&inputs, &pol)?
        } else {
            let mut inputs = BoundInputs::new(pt.n, d);
            inputs.envelope = p.envelope;
            bound_corollary_simple(SimpleCase::E1, &inputs, &pol)?
        };
        normalized.push(norm);
        rows.push(vec![
            tag.name().to_string(),
            pt.n.to_string(),
            p.d.to_string(),
            num(p.envelope),
            p.family.tag().to_string(),
            num(pt.distance),
            num(pt.se),
            num(norm),
            num(bound.value),
            seed.to_string(),
        ]);
    }
    let header = vec!["experiment", "n", "d", "B", "family", "distance", "se", "normalized", "bound_shape", "seed"];
    let slope = curve.fit.map_or(f64::NAN, |f| f.slope);
    let (lo, hi) = if zero_skew { (-1.35, -0.65) } else { (-0.65, -0.35) };
    let mut criteria = vec![Criterion {
        id: "slope".into(),
        description: format!("OLS slope of log distance on log n lies in [{lo}, {hi}]"),
        pass: slope >= lo && slope <= hi,
        value: slope,
        threshold: if zero_skew { -1.0 } else { -0.5 },
    }];
    if !zero_skew {
        criteria.push(Criterion::at_most(
            "normalized_band",
            "max/min of distance*sqrt(n)/(B (log d)^1.5) across n",
            ratio(&normalized),
            3.0,
        ));
    }
    let conditions = check_conditions_spec(&base, p.envelope, p.q)?;
    let ld = (p.d as f64).ln();
    let metadata = json!({
        "estimator": curve.estimator,
        "reference_reps": curve.reps * 10,
        "fit": curve.fit,
        "normalized_definition": if zero_skew { "distance * n" } else { "distance * sqrt(n) / (B * ln(d)^1.5)" },
        "bound_shape": if zero_skew { "smooth zero-skewness bound" } else { "bounded-envelope simple bound" },
        "conditions": conditions,
        "b4_over_sqrt_log_d": p.envelope.powi(4) / ld.sqrt(),
    });
    let points = curve.points.iter().map(|pt| PlotPoint { x: pt.n as f64, y: pt.distance, se: pt.se }).collect();
    Ok(ExperimentOutput {
        tables: vec![Table { name: "rate", header, rows }],
        criteria,
        plots: vec![PlotSeries {
            file: "rate.svg",
            kind: PlotKind::LogLog,
            title: format!("{}: distance vs n (d = {})", tag.name(), p.d),
            x_label: "n",
            y_label: "distance",
            points,
        }],
        metadata,
    })
}

/// One outer replication: fresh data, bootstrap quantile, coverage event.
fn coverage_rep(spec: &DistributionSpec, p: &CoverageParams, seed: u64, rep: usize) -> RunnerResult<(f64, f64)> {
    let rep_seed = mix(seed, rep as u64);
    let x = sample(spec, p.data.n, rep_seed)?;
    let draws = multiplier_draws(&x, p.reps, p.multiplier, rep_seed)?;
    let q = simultaneous_quantile(&draws, p.level, Side::TwoSided)?;
    let w = scaled_sum(&x).iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok((q, w))
}

fn coverage(p: &CoverageParams, seed: u64) -> RunnerResult<ExperimentOutput> {
    let spec = base_spec(p.data.base, p.data.d, p.data.envelope)?;
    let results: Vec<(f64, f64)> =
        (0..p.outer_reps).into_par_iter().map(|rep| coverage_rep(&spec, p, seed, rep)).collect::<RunnerResult<_>>()?;
    let mut rows = Vec::with_capacity(results.len());
    let mut hits = 0usize;
    let mut points = Vec::new();
    for (rep, (q, w)) in results.iter().enumerate() {
        let covered = w <= q;
        hits += usize::from(covered);
        rows.push(vec![rep.to_string(), num(*q), num(*w), u8::from(covered).to_string()]);
        let done = rep + 1;
        if done % 100 == 0 || done == results.len() {
            points.push(PlotPoint { x: done as f64, y: hits as f64 / done as f64, se: 0.0 });
        }
    }
    let m = p.outer_reps as f64;
    let cov = hits as f64 / m;
    let se = (cov * (1.0 - cov) / m).sqrt();
    let summary = vec![vec![
        "bootstrap_coverage".into(),
        p.data.n.to_string(),
        p.data.d.to_string(),
        num(p.data.envelope),
        num(p.level),
        p.reps.to_string(),
        p.outer_reps.to_string(),
        num(cov),
        num(se),
        seed.to_string(),
    ]];
    Ok(ExperimentOutput {
        tables: vec![
            Table {
                name: "coverage",
                header: vec!["experiment", "n", "d", "B", "level", "reps", "outer_reps", "coverage", "se", "seed"],
                rows: summary,
            },
            Table { name: "coverage_reps", header: vec!["rep", "quantile", "max_abs_w", "covered"], rows },
        ],
        criteria: vec![Criterion::at_most(
            "coverage",
            format!("|empirical simultaneous coverage - {}| <= 0.02", p.level),
            (cov - p.level).abs(),
            0.02,
        )],
        plots: vec![PlotSeries {
            file: "coverage.svg",
            kind: PlotKind::Linear,
            title: format!("running simultaneous coverage (nominal {})", p.level),
            x_label: "outer replications",
            y_label: "coverage",
            points,
        }],
        metadata: json!({
            "side": "two_sided",
            "multiplier": p.multiplier,
            "quantile_rule": "ceil(level * reps)-th order statistic of max_j |W_j^xi|",
            "coverage_se": se,
        }),
    })
}

fn agreement(p: &AgreementParams, seed: u64) -> RunnerResult<ExperimentOutput> {
    let spec = base_spec(p.data.base, p.data.d, p.data.envelope)?;
    let x = sample(&spec, p.data.n, seed)?;
    let draws = multiplier_draws(&x, p.reps, p.multiplier, seed)?;
    let sigma_hat = empirical_cov_centered(&x)?;
    let boot = MaxStatSample::from_draws(&draws, Side::OneSided)?;
    let gauss = gaussian_max_sample(&sigma_hat, p.reps, Side::OneSided, seed)?;
    let ks = ks_detail(&boot, &gauss);
    let r = p.reps as f64;
    let crit = 1.63 * (2.0 / r).sqrt();
    let points = (1..100)
        .map(|k| {
            let t = gauss.quantile(k as f64 / 100.0);
            PlotPoint { x: t, y: boot.ecdf(t) - gauss.ecdf(t), se: 0.0 }
        })
        .collect();
    Ok(ExperimentOutput {
        tables: vec![Table {
            name: "agreement",
            header: vec!["experiment", "n", "d", "B", "reps", "ks", "critical", "at", "seed"],
            rows: vec![vec![
                "bootstrap_agreement".into(),
                p.data.n.to_string(),
                p.data.d.to_string(),
                num(p.data.envelope),
                p.reps.to_string(),
                num(ks.distance),
                num(crit),
                num(ks.at),
                seed.to_string(),
            ]],
        }],
        criteria: vec![Criterion::at_most(
            "ks_agreement",
            "KS between multiplier and N(0, sample covariance) max draws <= 1.63 sqrt(2/R)",
            ks.distance,
            crit,
        )],
        plots: vec![PlotSeries {
            file: "agreement.svg",
            kind: PlotKind::Linear,
            title: "multiplier ECDF minus Gaussian ECDF of the max".into(),
            x_label: "x",
            y_label: "ECDF gap",
            points,
        }],
        metadata: json!({ "multiplier": p.multiplier, "sigma_hat_min_eigenvalue": sigma_hat.min_eigenvalue() }),
    })
}

fn local_means(plan: &Plan, p: &LocalMeansParams) -> RunnerResult<ExperimentOutput> {
    let seed = plan.common.seed;
    let pol = policy(plan);
    let mut rows = Vec::new();
    let mut criteria = Vec::new();
    let mut reports = Vec::new();
    let mut points = Vec::new();
    for &d in &p.d_list {
        let n = p.n_per_dim * d;
        let df = d as f64;
        let spec = DistributionSpec::local_means(d, p.kappa)?;
        let sigma_w = spec.population_covariance()?;
        let q = 1.0 / (1.0 - 1.0 / df);
        let surrogate = CovarianceModel::identity(d).scaled(q)?;
        let d_seed = mix(seed, d as u64);
        let draws = scaled_sum_draws(&spec, n, p.reps, d_seed)?;
        let w = MaxStatSample::from_draws(&draws, Side::OneSided)?;
        let reference = gaussian_max_sample(&sigma_w, 10 * p.reps, Side::OneSided, d_seed)?;
        let sur = gaussian_max_sample(&surrogate, 10 * p.reps, Side::OneSided, mix(d_seed, 1))?;
        let (ks, ks_s) = (ks_detail(&w, &reference), ks_detail(&w, &sur));
        let (se, se_s) = (ks.se(p.reps, 10 * p.reps), ks_s.se(p.reps, 10 * p.reps));
        let d0 = delta0(&surrogate, &sigma_w, q.sqrt(), d as u64)?;
        let cap = df.ln() / (df - 1.0) / (1.0 - 1.0 / df);
        let b = bounds_local_means(n as u64, d as u64, p.kappa, &pol)?;
        rows.push(vec![
            "local_means".into(),
            n.to_string(),
            d.to_string(),
            p.kappa.to_string(),
            num(ks.distance),
            num(se),
            num(ks_s.distance),
            num(se_s),
            num(d0),
            num(cap),
            num(b.combined.value),
            num(b.prior.value),
            num(b.hungarian.value),
            seed.to_string(),
        ]);
        criteria.push(Criterion::at_most(
            format!("delta0_d{d}"),
            format!("surrogate-path delta0 <= (log d)/(d-1) (1-1/d)^-1 at d = {d}"),
            d0,
            cap,
        ));
        let finite = [b.combined.value, b.prior.value, b.hungarian.value, d0].iter().all(|v| v.is_finite());
        criteria.push(Criterion {
            id: format!("finite_reports_d{d}"),
            description: format!("all bound reports finite at d = {d}"),
            pass: finite,
            value: f64::from(u8::from(finite)),
            threshold: 1.0,
        });
        criteria.push(Criterion::at_most(
            format!("below_combined_d{d}"),
            format!("measured distance <= combined bound shape (constants x{}) at d = {d}", pol.scale),
            ks.distance,
            b.combined.value,
        ));
        points.push(PlotPoint { x: df, y: ks.distance, se });
        reports.push(json!({ "d": d, "n": n, "bounds": b }));
    }
    Ok(ExperimentOutput {
        tables: vec![Table {
            name: "local_means",
            header: vec![
                "experiment",
                "n",
                "d",
                "kappa",
                "distance",
                "se",
                "distance_surrogate",
                "se_surrogate",
                "delta0",
                "delta0_cap",
                "combined",
                "prior",
                "hungarian",
                "seed",
            ],
            rows,
        }],
        criteria,
        plots: vec![PlotSeries {
            file: "local_means.svg",
            kind: PlotKind::LogLog,
            title: format!("local means: distance vs d (n = {} d)", p.n_per_dim),
            x_label: "d",
            y_label: "distance",
            points,
        }],
        metadata: json!({ "reference": "N(0, Sigma_W), 10x draws", "surrogate": "N(0, I/(1-1/d))", "reports": reports }),
    })
}

fn lemma_cells(rows: &[LemmaRow], d: usize, v: usize, keep: impl Fn(&LemmaRow) -> bool) -> Vec<LemmaRow> {
    rows.iter().filter(|r| r.d == d && r.v == v && keep(r)).copied().collect()
}

fn smoothing(sweep: &LemmaSweep) -> RunnerResult<ExperimentOutput> {
    let rows = verify_lemmas(sweep)?;
    let eps0 = sweep.eps_list[0];
    let mut criteria = Vec::new();
    for &d in &sweep.d_list {
        for &v in &sweep.v_list {
            let c61: Vec<f64> =
                lemma_cells(&rows, d, v, |r| r.eps == eps0 && r.phi.is_finite()).iter().map(|r| r.attained_c61).collect();
            if c61.len() >= 2 {
                criteria.push(Criterion::at_most(
                    format!("c61_phi_d{d}_v{v}"),
                    format!("attained first constant varies by <= 2x across finite phi (eps = {eps0})"),
                    ratio(&c61),
                    2.0,
                ));
            }
            let c62: Vec<f64> =
                lemma_cells(&rows, d, v, |r| r.phi.is_infinite()).iter().map(|r| r.attained_c62).collect();
            if c62.len() >= 2 {
                criteria.push(Criterion::at_most(
                    format!("c62_eps_d{d}_v{v}"),
                    "attained second constant varies by <= 2x across eps at phi = inf",
                    ratio(&c62),
                    2.0,
                ));
            }
        }
        if sweep.v_list.contains(&1) {
            // worst margin of boundary/far over the required factor
            let margin = lemma_cells(&rows, d, 1, |_| true)
                .iter()
                .map(|r| {
                    let need = ((r.kappa - r.eta).powi(2) / 8.0).exp();
                    if r.s_far > 0.0 {
                        r.s_boundary / r.s_far / need
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(f64::INFINITY, f64::min);
            criteria.push(Criterion::at_least(
                format!("decay_d{d}"),
                "boundary S_1 / far S_1 >= exp((kappa-eta)^2/8) in every cell (value = worst ratio/required)",
                margin,
                1.0,
            ));
        }
    }
    let table_rows = rows
        .iter()
        .map(|r| {
            vec![
                r.d.to_string(),
                r.v.to_string(),
                num(r.phi),
                num(r.eps),
                num(r.k),
                num(r.attained_c61),
                num(r.attained_c62),
                num(r.decay_ratio),
                num(r.s_boundary),
                num(r.s_far),
                num(r.kappa),
                num(r.eta),
            ]
        })
        .collect();
    let v0 = sweep.v_list[0];
    let points = lemma_cells(&rows, sweep.d_list[0], v0, |r| r.eps == eps0 && r.phi.is_finite())
        .iter()
        .map(|r| PlotPoint { x: r.phi, y: r.attained_c61, se: 0.0 })
        .collect();
    Ok(ExperimentOutput {
        tables: vec![Table {
            name: "smoothing",
            header: vec![
                "d",
                "v",
                "phi",
                "eps",
                "K",
                "attained_C61",
                "attained_C62",
                "decay_ratio",
                "s_boundary",
                "s_far",
                "kappa",
                "eta",
            ],
            rows: table_rows,
        }],
        criteria,
        plots: vec![PlotSeries {
            file: "smoothing_c61.svg",
            kind: PlotKind::LogLog,
            title: format!("attained first constant vs phi (d = {}, v = {v0}, eps = {eps0})", sweep.d_list[0]),
            x_label: "phi",
            y_label: "attained constant",
            points,
        }],
        metadata: json!({ "sweep": sweep }),
    })
}

fn comparison(plan: &Plan, p: &ComparisonParams) -> RunnerResult<ExperimentOutput> {
    let seed = plan.common.seed;
    let pol = policy(plan);
    let base = CovarianceModel::equicorrelated(p.d, p.rho)?;
    let mut rows = Vec::new();
    let mut criteria = Vec::new();
    let mut points = Vec::new();
    for (k, &gap) in p.gap_list.iter().enumerate() {
        let other = CovarianceModel::equicorrelated(p.d, p.rho + gap)?;
        let a = gaussian_max_sample(&base, p.reps, Side::OneSided, mix(seed, 2 * k as u64))?;
        let b = gaussian_max_sample(&other, p.reps, Side::OneSided, mix(seed, 2 * k as u64 + 1))?;
        let ks = ks_detail(&a, &b);
        let se = ks.se(p.reps, p.reps);
        let sup = base.sup_norm_diff(&other)?;
        let s2 = base.min_eigenvalue().min(other.min_eigenvalue());
        let bound = bound_gaussian_comparison(sup, s2, p.d as f64, &pol)?;
        rows.push(vec![
            "gaussian_comparison".into(),
            p.d.to_string(),
            num(p.rho),
            num(gap),
            num(ks.distance),
            num(se),
            num(bound.value),
            seed.to_string(),
        ]);
        criteria.push(Criterion::at_most(
            format!("comparison_gap{gap}"),
            format!("distance - 4 se <= comparison bound shape at gap {gap}"),
            ks.distance - 4.0 * se,
            bound.value,
        ));
        points.push(PlotPoint { x: gap, y: ks.distance, se });
    }
    Ok(ExperimentOutput {
        tables: vec![Table {
            name: "comparison",
            header: vec!["experiment", "d", "rho", "gap", "distance", "se", "bound_shape", "seed"],
            rows,
        }],
        criteria,
        plots: vec![PlotSeries {
            file: "comparison.svg",
            kind: PlotKind::LogLog,
            title: format!("distance between equicorrelated Gaussians (d = {}, rho = {})", p.d, p.rho),
            x_label: "covariance gap",
            y_label: "distance",
            points,
        }],
        metadata: json!({ "family": RectFamily::OneSidedMax, "sigma_star_sq": "min eigenvalue of the two covariances" }),
    })
}

fn poisson(p: &PoissonParams, seed: u64) -> RunnerResult<ExperimentOutput> {
    let spec = base_spec(p.data.base, p.data.d, p.data.envelope)?;
    let r = poisson_approx_check(&spec, p.data.n, p.reps, seed)?;
    let row = vec![
        "poisson_check".into(),
        r.n.to_string(),
        r.d.to_string(),
        num(p.data.envelope),
        r.reps.to_string(),
        num(r.x_n),
        num(r.p_hat),
        num(r.p_se),
        num(r.lambda_hat),
        num(r.lambda_se),
        num(r.f_hat),
        num(r.f_se),
        num(r.exp_neg_lambda),
        num(r.gauss_target),
        num(r.residual),
        num(r.chen_stein_bound),
        num(r.combined_se),
        u8::from(r.holds).to_string(),
        seed.to_string(),
    ];
    Ok(ExperimentOutput {
        tables: vec![Table {
            name: "poisson",
            header: vec![
                "experiment",
                "n",
                "d",
                "B",
                "reps",
                "x_n",
                "p_hat",
                "p_se",
                "lambda_hat",
                "lambda_se",
                "f_hat",
                "f_se",
                "exp_neg_lambda",
                "gauss_target",
                "residual",
                "chen_stein_bound",
                "combined_se",
                "holds",
                "seed",
            ],
            rows: vec![row],
        }],
        criteria: vec![
            Criterion::at_most(
                "chen_stein",
                "|F(x_n) - exp(-lambda)| <= d P(W_1 > x_n)^2 + 4 propagated se",
                r.residual,
                r.chen_stein_bound + 4.0 * r.combined_se,
            ),
            Criterion::at_most("lambda_sanity", "lambda_hat <= 10", r.lambda_hat, 10.0),
        ],
        plots: Vec::new(),
        metadata: json!({ "record": r }),
    })
}

fn anticoncentration(p: &AntiParams, seed: u64) -> RunnerResult<ExperimentOutput> {
    let sigma = CovarianceModel::equicorrelated(p.d, p.rho)?;
    let sample = gaussian_max_sample(&sigma, p.reps, Side::OneSided, seed)?;
    let scale = (2.0 * (p.d as f64).ln()).sqrt() + 2.0;
    let mut rows = Vec::new();
    let mut criteria = Vec::new();
    let mut points = Vec::new();
    for &eps in &p.eps_list {
        let v = anticoncentration_on_sample(&sample, eps, 512);
        let envelope = eps * scale;
        rows.push(vec![
            "anticoncentration".into(),
            p.d.to_string(),
            num(p.rho),
            num(eps),
            num(v),
            num(envelope),
            num(v / (eps * (p.d as f64).ln().sqrt())),
            seed.to_string(),
        ]);
        criteria.push(Criterion::at_most(
            format!("nazarov_eps{eps}"),
            format!("max window probability <= eps (sqrt(2 log d) + 2) at eps = {eps}"),
            v,
            envelope,
        ));
        points.push(PlotPoint { x: eps, y: v, se: 0.0 });
    }
    Ok(ExperimentOutput {
        tables: vec![Table {
            name: "anticoncentration",
            header: vec!["experiment", "d", "rho", "eps", "probe", "envelope", "attained_C", "seed"],
            rows,
        }],
        criteria,
        plots: vec![PlotSeries {
            file: "anticoncentration.svg",
            kind: PlotKind::LogLog,
            title: format!("max window probability vs eps (d = {}, rho = {})", p.d, p.rho),
            x_label: "eps",
            y_label: "probe",
            points,
        }],
        metadata: json!({ "grid": 512, "attained_C": "probe / (eps sqrt(log d))" }),
    })
}
