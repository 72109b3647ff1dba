//! Mixed smoothing functions: the ramp `g^φ`, the smoothed rectangle
//! indicator `m^{A,φ}`, its Gaussian convolution `ρ^{A,φ,ε,Σ}`, exact mixed
//! partial derivatives of `ρ` for diagonal `Σ`, and numerical sweeps of the
//! derivative-sum bounds.
//!
//! For diagonal `Σ` the Gaussian expectation factorizes:
//!
//! `ρ(w) = φ ∫₀^{1/φ} ∏_j [Φ(u_j(s)) − Φ(l_j(s))] ds`,
//! `u_j = (b_j + s − w_j)/(εσ_j)`, `l_j = (a_j − s − w_j)/(εσ_j)`,
//!
//! and differentiating a factor `ν` times in `w_j` gives
//! `−(εσ_j)^{−ν} [h_ν(u_j) − h_ν(l_j)]` with `h_ν = H_{ν−1} φ₁`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::{CovarianceModel, RectangleSpec};
use crate::rng;
use crate::special::{norm_interval, norm_pdf, GaussLegendre};

/// Highest derivative order supported per coordinate.
pub const MAX_ORDER: usize = 6;
/// Highest total order accepted by [`derivative_sum`].
pub const MAX_SUM_ORDER: usize = 4;
/// Cap on the number of index tuples `d^v` in [`derivative_sum`].
pub const TUPLE_BUDGET: usize = 4096;

const BASE_ORDER: usize = 32;
const MAX_QUAD_ORDER: usize = 1024;
const QUAD_RTOL: f64 = 1e-10;

/// Probabilists' Hermite polynomials `H_0 … H_{MAX_ORDER+1}` as integer
/// coefficient vectors (constant term first).
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    coeffs: Vec<Vec<f64>>,
    max_roots: Vec<f64>,
}

impl Default for HermiteTable {
    fn default() -> Self {
        Self::new(MAX_ORDER + 1)
    }
}

impl HermiteTable {
    /// `H_{k+1}(t) = t H_k(t) − k H_{k−1}(t)`.
    pub fn new(max_order: usize) -> Self {
        let mut coeffs: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
        for k in 1..max_order {
            let mut next = vec![0.0; k + 2];
            for (i, c) in coeffs[k].iter().enumerate() {
                next[i + 1] += c;
            }
            for (i, c) in coeffs[k - 1].iter().enumerate() {
                next[i] -= k as f64 * c;
            }
            coeffs.push(next);
        }
        coeffs.truncate(max_order + 1);
        let max_roots = (0..coeffs.len()).map(|nu| largest_root(&coeffs[nu])).collect();
        HermiteTable { coeffs, max_roots }
    }

    pub fn max_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self, nu: usize) -> &[f64] {
        &self.coeffs[nu]
    }

    /// Largest root `t_ν` (NaN for `ν = 0`).
    pub fn max_root(&self, nu: usize) -> f64 {
        self.max_roots[nu]
    }

    pub fn eval(&self, nu: usize, t: f64) -> f64 {
        poly_eval(&self.coeffs[nu], t)
    }

    /// `h_ν(t) = H_{ν−1}(t) φ₁(t)` for `ν ≥ 1`; zero at `±∞`.
    pub fn h(&self, nu: usize, t: f64) -> f64 {
        debug_assert!(nu >= 1);
        if t.is_infinite() {
            return 0.0;
        }
        self.eval(nu - 1, t) * norm_pdf(t)
    }

    /// Coefficients of `p` with `h_ν′ = p φ₁`, i.e. `H_{ν−1}′ − t H_{ν−1}`.
    pub fn h_derivative_coefficients(&self, nu: usize) -> Vec<f64> {
        let c = &self.coeffs[nu - 1];
        let mut out = vec![0.0; c.len() + 1];
        for (i, v) in c.iter().enumerate().skip(1) {
            out[i - 1] += i as f64 * v;
        }
        for (i, v) in c.iter().enumerate() {
            out[i + 1] -= v;
        }
        out
    }
}

fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * t + v)
}

fn largest_root(c: &[f64]) -> f64 {
    let deg = c.len() - 1;
    if deg == 0 {
        return f64::NAN;
    }
    // all roots lie below 2√deg + 1; step down to the first sign change
    let mut hi = 2.0 * (deg as f64).sqrt() + 1.0;
    let step = 1e-3;
    let mut lo = hi - step;
    while poly_eval(c, lo) > 0.0 {
        hi = lo;
        lo -= step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poly_eval(c, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `1` for `t ≤ 0`, `1 − φt` on `(0, 1/φ)`, `0` beyond; `φ = ∞` gives the
/// indicator of `t ≤ 0`.
pub fn g_phi(t: f64, phi: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if phi.is_infinite() || t >= 1.0 / phi {
        0.0
    } else {
        1.0 - phi * t
    }
}

/// Parameters of `ρ^{A,φ,ε,Σ}` plus the perturbation grid used for the
/// sup over `y ∈ R(0, εσ*η)`.
#[derive(Debug, Clone)]
pub struct SmoothingParams {
    rect: RectangleSpec,
    phi: f64,
    eps: f64,
    sigma: CovarianceModel,
    sd: Vec<f64>,
    eta: f64,
    y_grid: Vec<Vec<f64>>,
}

impl SmoothingParams {
    /// `η = K/√(log d)` (zero for `d = 1`). The default perturbation grid is
    /// the `2^d` corners of the radius-`εσ*η` cube plus its center for
    /// `d ≤ 6`, otherwise the `2d` axis extremes plus the center.
    pub fn new(rect: RectangleSpec, phi: f64, eps: f64, sigma: CovarianceModel, k: f64) -> Result<Self> {
        let d = rect.dim();
        if sigma.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: sigma.dim() });
        }
        if !(phi > 0.0) {
            return Err(invalid(format!("phi must be > 0, got {phi}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid(format!("epsilon must be > 0, got {eps}")));
        }
        if !(k >= 0.0) {
            return Err(invalid("K must be >= 0"));
        }
        let eta = if d >= 2 { k / (d as f64).ln().sqrt() } else { 0.0 };
        let sd: Vec<f64> = sigma.diag().iter().map(|v| v.sqrt()).collect();
        let mut params = SmoothingParams { rect, phi, eps, sigma, sd, eta, y_grid: Vec::new() };
        params.y_grid = default_y_grid(d, params.y_radius());
        Ok(params)
    }

    /// Replaces the perturbation grid; every point must lie in the cube.
    pub fn with_y_grid(mut self, grid: Vec<Vec<f64>>) -> Result<Self> {
        let r = self.y_radius();
        for y in &grid {
            if y.len() != self.rect.dim() {
                return Err(Error::DimensionMismatch { expected: self.rect.dim(), got: y.len() });
            }
            if y.iter().any(|v| v.abs() > r * (1.0 + 1e-12)) {
                return Err(invalid("perturbation outside R(0, eps sigma* eta)"));
            }
        }
        if grid.is_empty() {
            return Err(invalid("perturbation grid must be non-empty"));
        }
        self.y_grid = grid;
        Ok(self)
    }

    pub fn rect(&self) -> &RectangleSpec {
        &self.rect
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn sigma(&self) -> &CovarianceModel {
        &self.sigma
    }

    pub fn y_grid(&self) -> &[Vec<f64>] {
        &self.y_grid
    }

    /// `εσ*η`.
    pub fn y_radius(&self) -> f64 {
        self.eps * self.sigma.sigma_star() * self.eta
    }

    fn require_diagonal(&self) -> Result<()> {
        if self.sigma.is_diagonal() {
            Ok(())
        } else {
            Err(Error::NonDiagonalSigma)
        }
    }
}

fn default_y_grid(d: usize, r: f64) -> Vec<Vec<f64>> {
    let mut grid = vec![vec![0.0; d]];
    if r == 0.0 {
        return grid;
    }
    if d <= 6 {
        for mask in 0..(1usize << d) {
            grid.push((0..d).map(|j| if mask >> j & 1 == 1 { r } else { -r }).collect());
        }
    } else {
        for j in 0..d {
            for s in [-r, r] {
                let mut y = vec![0.0; d];
                y[j] = s;
                grid.push(y);
            }
        }
    }
    grid
}

/// `g^φ(max_j [(w_j − b_j) ∨ (a_j − w_j)])`.
pub fn m_indicator(w: &[f64], params: &SmoothingParams) -> f64 {
    g_phi(params.rect.max_violation(w), params.phi)
}

/// Multiplicity vector `(ν_1, …, ν_d)` of an index tuple.
pub fn multiplicities(indices: &[usize], d: usize) -> Result<Vec<usize>> {
    let mut nu = vec![0; d];
    for &j in indices {
        if j >= d {
            return Err(Error::DimensionMismatch { expected: d, got: j + 1 });
        }
        nu[j] += 1;
    }
    if nu.iter().any(|v| *v > MAX_ORDER) || indices.len() > MAX_ORDER {
        return Err(Error::OrderTooHigh(indices.len()));
    }
    Ok(nu)
}

/// Coordinate factor at ramp offset `s`: the Φ-difference for `ν = 0`,
/// its `ν`-th derivative in `w_j` otherwise.
#[inline]
fn factor(table: &HermiteTable, params: &SmoothingParams, j: usize, nu: usize, w_j: f64, s: f64) -> f64 {
    let scale = params.eps * params.sd[j];
    let (a, b) = (params.rect.lower()[j], params.rect.upper()[j]);
    let u = (b + s - w_j) / scale;
    let l = (a - s - w_j) / scale;
    if nu == 0 {
        return norm_interval(l, u);
    }
    -(table.h(nu, u) - table.h(nu, l)) / scale.powi(nu as i32)
}

fn integrand(table: &HermiteTable, params: &SmoothingParams, w: &[f64], nus: &[Vec<usize>], s: f64, out: &mut [f64]) {
    let d = w.len();
    // factor cache per coordinate and order
    let mut cache = [[f64::NAN; MAX_ORDER + 1]; 64];
    let use_cache = d <= 64;
    for (o, nu) in out.iter_mut().zip(nus) {
        let mut prod = 1.0;
        for j in 0..d {
            let f = if use_cache {
                let slot = &mut cache[j][nu[j]];
                if slot.is_nan() {
                    *slot = factor(table, params, j, nu[j], w[j], s);
                }
                *slot
            } else {
                factor(table, params, j, nu[j], w[j], s)
            };
            prod *= f;
            if prod == 0.0 {
                break;
            }
        }
        *o = prod;
    }
}

/// `φ ∫₀^{1/φ} f(s) ds` (or `f(0)` at `φ = ∞`) for a vector integrand with
/// a fixed Gauss–Legendre order.
fn ramp_average_fixed(
    table: &HermiteTable,
    params: &SmoothingParams,
    w: &[f64],
    nus: &[Vec<usize>],
    order: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; nus.len()];
    if params.phi.is_infinite() {
        integrand(table, params, w, nus, 0.0, &mut out);
        return out;
    }
    let gl = GaussLegendre::cached(order);
    let half = 0.5 / params.phi;
    let mut buf = vec![0.0; nus.len()];
    for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
        integrand(table, params, w, nus, half * (x + 1.0), &mut buf);
        for (o, v) in out.iter_mut().zip(&buf) {
            *o += wt * v;
        }
    }
    // φ · (1/(2φ)) Σ wt f = ½ Σ wt f
    out.iter_mut().for_each(|v| *v *= 0.5);
    out
}

/// Doubles the order from 32 until every component changes by less than
/// `1e−10` relative (absolute below `1e−300`).
fn ramp_average_adaptive(table: &HermiteTable, params: &SmoothingParams, w: &[f64], nus: &[Vec<usize>]) -> Vec<f64> {
    let mut order = BASE_ORDER;
    let mut prev = ramp_average_fixed(table, params, w, nus, order);
    if params.phi.is_infinite() {
        return prev;
    }
    while order < MAX_QUAD_ORDER {
        order *= 2;
        let next = ramp_average_fixed(table, params, w, nus, order);
        let done = next.iter().zip(&prev).all(|(a, b)| (a - b).abs() <= QUAD_RTOL * a.abs().max(b.abs()) + 1e-300);
        prev = next;
        if done {
            break;
        }
    }
    prev
}

fn table() -> &'static HermiteTable {
    use std::sync::OnceLock;
    static TABLE: OnceLock<HermiteTable> = OnceLock::new();
    TABLE.get_or_init(HermiteTable::default)
}

fn check_w(w: &[f64], params: &SmoothingParams) -> Result<()> {
    if w.len() != params.rect.dim() {
        return Err(Error::DimensionMismatch { expected: params.rect.dim(), got: w.len() });
    }
    params.require_diagonal()
}

/// `ρ(w)` with a fixed quadrature order (`≥ 8`); `None` selects the
/// adaptive rule.
pub fn rho_eval(w: &[f64], params: &SmoothingParams, quad_order: Option<usize>) -> Result<f64> {
    rho_partial(w, &[], params, quad_order)
}

/// Exact mixed partial `∂_{j_1…j_v} ρ(w)`; `indices` lists coordinates with
/// repetition. Total order at most 6.
pub fn rho_partial(w: &[f64], indices: &[usize], params: &SmoothingParams, quad_order: Option<usize>) -> Result<f64> {
    check_w(w, params)?;
    let nu = multiplicities(indices, w.len())?;
    let nus = [nu];
    let v = match quad_order {
        Some(order) if order < 8 => return Err(invalid("quadrature order must be >= 8")),
        Some(order) => ramp_average_fixed(table(), params, w, &nus, order),
        None => ramp_average_adaptive(table(), params, w, &nus),
    };
    Ok(v[0])
}

/// Monte Carlo `E m(w + εZ)` for any covariance; returns `(mean, se)`.
pub fn rho_eval_mc(w: &[f64], params: &SmoothingParams, reps: usize, seed: u64) -> Result<(f64, f64)> {
    if w.len() != params.rect.dim() {
        return Err(Error::DimensionMismatch { expected: params.rect.dim(), got: w.len() });
    }
    if reps < 2 {
        return Err(invalid("need at least two replications"));
    }
    let d = w.len();
    let stream = rng::mix(seed, rng::label::REFERENCE);
    let vals: Vec<f64> = (0..reps)
        .into_par_iter()
        .with_min_len(1024)
        .map_init(
            || (vec![0.0; d], vec![0.0; d]),
            |(z, x), r| {
                let mut g = rng::substream(stream, r as u64);
                z.iter_mut().for_each(|v| *v = g.sample(StandardNormal));
                params.sigma.transform(z, x);
                for (xi, wi) in x.iter_mut().zip(w) {
                    *xi = wi + params.eps * *xi;
                }
                m_indicator(x, params)
            },
        )
        .collect();
    let (mean, se) = crate::stats::mean_and_se(&vals);
    Ok((mean, se))
}

/// Distinct multiplicity vectors of total order `v` in dimension `d` with
/// the number of ordered index tuples mapping to each.
pub fn multisets(d: usize, v: usize) -> Vec<(Vec<usize>, u64)> {
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    fn rec(d: usize, left: usize, start: usize, cur: &mut Vec<usize>, out: &mut BTreeMap<Vec<usize>, u64>) {
        if left == 0 {
            out.insert(cur.clone(), 0);
            return;
        }
        for j in start..d {
            cur[j] += 1;
            rec(d, left - 1, j, cur, out);
            cur[j] -= 1;
        }
    }
    rec(d, v, 0, &mut vec![0; d], &mut counts);
    let fact = |k: usize| (1..=k as u64).product::<u64>();
    for (nu, c) in counts.iter_mut() {
        *c = fact(v) / nu.iter().map(|&k| fact(k)).product::<u64>();
    }
    counts.into_iter().collect()
}

/// `S_v(w) = Σ_{j_1..j_v} max_{y ∈ grid} |∂_{j_1…j_v} ρ(w + y)|`.
///
/// Tuples with equal multiplicities share a derivative, so the sum runs
/// over multisets weighted by their tuple counts.
pub fn derivative_sum(v: usize, w: &[f64], params: &SmoothingParams) -> Result<f64> {
    check_w(w, params)?;
    if v == 0 || v > MAX_SUM_ORDER {
        return Err(Error::OrderTooHigh(v));
    }
    let d = w.len();
    let tuples = (d as f64).powi(v as i32);
    if tuples > TUPLE_BUDGET as f64 {
        return Err(Error::BudgetExceeded { needed: tuples as usize, budget: TUPLE_BUDGET });
    }
    let sets = multisets(d, v);
    let nus: Vec<Vec<usize>> = sets.iter().map(|(nu, _)| nu.clone()).collect();
    let mut best = vec![0.0f64; nus.len()];
    let mut shifted = vec![0.0; d];
    for y in &params.y_grid {
        for j in 0..d {
            shifted[j] = w[j] + y[j];
        }
        let vals = ramp_average_adaptive(table(), params, &shifted, &nus);
        for (b, v) in best.iter_mut().zip(vals) {
            *b = b.max(v.abs());
        }
    }
    Ok(best.iter().zip(&sets).map(|(b, (_, c))| b * *c as f64).sum())
}

/// Grid of evaluation points concentrated on the rectangle boundary: each
/// coordinate ranges over offsets from its upper endpoint (in units of
/// `ε σ_j`, plus the ramp midpoint and end) and the coordinate midpoint.
pub fn boundary_w_grid(params: &SmoothingParams) -> Vec<Vec<f64>> {
    let d = params.rect.dim();
    let offsets = [-2.0, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0];
    let per_coord: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let (a, b) = (params.rect.lower()[j], params.rect.upper()[j]);
            let s = params.eps * params.sd[j];
            let mut pts: Vec<f64> = offsets.iter().map(|o| b + o * s).collect();
            if params.phi.is_finite() {
                pts.push(b + 0.5 / params.phi);
                pts.push(b + 1.0 / params.phi);
            }
            pts.push(if a.is_finite() { 0.5 * (a + b) } else { b - 6.0 * s });
            pts
        })
        .collect();
    cartesian(&per_coord)
}

fn cartesian(sets: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for set in sets {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                set.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    out
}

/// `max_w S_v(w)` over `grid`, evaluated in parallel with an ordered
/// reduction.
pub fn max_derivative_sum(v: usize, grid: &[Vec<f64>], params: &SmoothingParams) -> Result<f64> {
    let vals: Result<Vec<f64>> = grid.par_iter().map(|w| derivative_sum(v, w, params)).collect();
    Ok(vals?.into_iter().fold(0.0, f64::max))
}

/// Points at sup-distance just beyond `r` from the rectangle: outside each
/// finite face along its axis, and beyond the upper corner.
pub fn far_points(params: &SmoothingParams, r: f64) -> Vec<Vec<f64>> {
    let rect = &params.rect;
    let d = rect.dim();
    let gap = r * (1.0 + 1e-9) + 1e-12;
    let center: Vec<f64> = (0..d)
        .map(|j| {
            let (a, b) = (rect.lower()[j], rect.upper()[j]);
            if a.is_finite() {
                0.5 * (a + b)
            } else {
                b - 1.0
            }
        })
        .collect();
    let mut pts = Vec::new();
    for j in 0..d {
        let mut up = center.clone();
        up[j] = rect.upper()[j] + gap;
        pts.push(up);
        if rect.lower()[j].is_finite() {
            let mut down = center.clone();
            down[j] = rect.lower()[j] - gap;
            pts.push(down);
        }
    }
    pts.push(rect.upper().iter().map(|b| b + gap).collect());
    pts
}

/// One cell of the lemma sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub d: usize,
    pub v: usize,
    pub phi: f64,
    pub eps: f64,
    pub k: f64,
    /// `S_v (εσ*)^{v−1}/(φ (log d)^{(v−1)/2})`; NaN at `φ = ∞`.
    pub attained_c61: f64,
    /// `S_v (εσ*)^v/(log d)^{v/2}`.
    pub attained_c62: f64,
    /// `S_v(w_far) (εσ*)^v e^{(κ−η)²/4}/d^v`.
    pub decay_ratio: f64,
    /// `max S_v` over the boundary grid.
    pub s_boundary: f64,
    /// `max S_v` over points beyond the `(2εκ + 1/φ)`-enlargement.
    pub s_far: f64,
    pub kappa: f64,
    pub eta: f64,
}

/// Sweep configuration for [`verify_lemmas`].
///
/// The sup over rectangles is approximated by a family of boxes
/// `(−hε, hε]^d`, one per entry `h` of `half_widths`; `h = ∞` stands for the
/// orthant `(−∞, 0]^d`. Widths are in units of `ε` so the family is
/// invariant under the rescaling `w ↦ w/ε`, as the full class is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSweep {
    pub d_list: Vec<usize>,
    pub v_list: Vec<usize>,
    pub phi_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub k: f64,
    pub kappa: f64,
    pub half_widths: Vec<f64>,
}

impl Default for LemmaSweep {
    fn default() -> Self {
        LemmaSweep {
            d_list: vec![3],
            v_list: vec![1, 2],
            phi_list: vec![4.0, 8.0, 16.0, 32.0, f64::INFINITY],
            eps_list: vec![1.0, 0.5, 0.25],
            k: 4.0,
            kappa: 4.0,
            half_widths: vec![0.5, 1.0, 2.0, f64::INFINITY],
        }
    }
}

fn sweep_rect(d: usize, h: f64, eps: f64) -> Result<RectangleSpec> {
    if h.is_infinite() {
        Ok(RectangleSpec::one_sided(d, 0.0))
    } else {
        RectangleSpec::symmetric_box(d, h * eps)
    }
}

/// Attained constants of the derivative-sum bounds for every
/// `(d, v, φ, ε)` cell, identity covariance, maximized over the rectangle
/// family and the boundary grid.
pub fn verify_lemmas(sweep: &LemmaSweep) -> Result<Vec<LemmaRow>> {
    if sweep.half_widths.is_empty() {
        return Err(invalid("lemma sweep needs at least one rectangle"));
    }
    let mut rows = Vec::new();
    for &d in &sweep.d_list {
        if d < 2 {
            return Err(invalid("lemma sweep needs d >= 2"));
        }
        let sigma = CovarianceModel::identity(d);
        let ld = (d as f64).ln();
        for &phi in &sweep.phi_list {
            for &eps in &sweep.eps_list {
                let r = 2.0 * eps * sweep.kappa + if phi.is_finite() { 1.0 / phi } else { 0.0 };
                let s_star = eps * sigma.sigma_star();
                for &v in &sweep.v_list {
                    let mut s_boundary = 0.0f64;
                    let mut s_far = 0.0f64;
                    let mut eta = 0.0;
                    for &h in &sweep.half_widths {
                        let params = SmoothingParams::new(sweep_rect(d, h, eps)?, phi, eps, sigma.clone(), sweep.k)?;
                        eta = params.eta();
                        s_boundary = s_boundary.max(max_derivative_sum(v, &boundary_w_grid(&params), &params)?);
                        s_far = s_far.max(max_derivative_sum(v, &far_points(&params, r), &params)?);
                    }
                    let vf = v as f64;
                    let c61 = if phi.is_finite() {
                        s_boundary * s_star.powf(vf - 1.0) / (phi * ld.powf((vf - 1.0) / 2.0))
                    } else {
                        f64::NAN
                    };
                    let c62 = s_boundary * s_star.powf(vf) / ld.powf(vf / 2.0);
                    let gap = sweep.kappa - eta;
                    let decay = s_far * s_star.powf(vf) * (gap * gap / 4.0).exp() / (d as f64).powf(vf);
                    rows.push(LemmaRow {
                        d,
                        v,
                        phi,
                        eps,
                        k: sweep.k,
                        attained_c61: c61,
                        attained_c62: c62,
                        decay_ratio: decay,
                        s_boundary,
                        s_far,
                        kappa: sweep.kappa,
                        eta,
                    });
                }
            }
        }
    }
    Ok(rows)
}
