//! Dense symmetric linear algebra and rectangle geometry.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-12;

/// Symmetric positive semidefinite `d × d` matrix with cached factorizations.
///
/// Entries are stored row-major. The smallest eigenvalue is computed on
/// construction (it decides whether the matrix is admissible); the Cholesky
/// factor and the general square root are computed on first use.
#[derive(Debug)]
pub struct CovarianceModel {
    dim: usize,
    entries: Vec<f64>,
    unit_diag: bool,
    min_eig: f64,
    chol: OnceLock<Result<Vec<f64>>>,
    root: OnceLock<Vec<f64>>,
}

impl Clone for CovarianceModel {
    fn clone(&self) -> Self {
        CovarianceModel {
            dim: self.dim,
            entries: self.entries.clone(),
            unit_diag: self.unit_diag,
            min_eig: self.min_eig,
            chol: self.chol.clone(),
            root: self.root.clone(),
        }
    }
}

impl PartialEq for CovarianceModel {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.entries == other.entries
    }
}

impl CovarianceModel {
    /// Validates symmetry (1e−12) and positive semidefiniteness (1e−10).
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        check_symmetric(dim, &entries)?;
        let min_eig = min_eigenvalue_of(dim, &entries);
        if min_eig < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite { min_eig });
        }
        let unit_diag = (0..dim).all(|j| (entries[j * dim + j] - 1.0).abs() <= SYMMETRY_TOL);
        Ok(CovarianceModel {
            dim,
            entries,
            unit_diag,
            min_eig,
            chol: OnceLock::new(),
            root: OnceLock::new(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim]).expect("identity is a valid covariance")
    }

    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        let d = variances.len();
        let mut e = vec![0.0; d * d];
        for (j, &v) in variances.iter().enumerate() {
            e[j * d + j] = v;
        }
        Self::new(d, e)
    }

    /// Unit-diagonal matrix with every off-diagonal entry equal to `rho`.
    pub fn equicorrelated(dim: usize, rho: f64) -> Result<Self> {
        let mut e = vec![rho; dim * dim];
        for j in 0..dim {
            e[j * dim + j] = 1.0;
        }
        Self::new(dim, e)
    }

    /// `Σ_W` of the many-local-means design with `p = 1/d`:
    /// `(1/(1−p)) I − (p/(1−p)) 1 1ᵀ`. Singular by construction.
    pub fn local_means(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("local means needs d >= 2".into()));
        }
        let p = 1.0 / dim as f64;
        let off = -p / (1.0 - p);
        let mut e = vec![off; dim * dim];
        for j in 0..dim {
            e[j * dim + j] = 1.0 / (1.0 - p) + off;
        }
        Self::new(dim, e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|j| self.get(j, j)).collect()
    }

    pub fn unit_diag(&self) -> bool {
        self.unit_diag
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| r == c || self.get(r, c) == 0.0))
    }

    /// Smallest eigenvalue `σ*²`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig
    }

    /// `σ* = √max(σ*², 0)`.
    pub fn sigma_star(&self) -> f64 {
        self.min_eig.max(0.0).sqrt()
    }

    /// Lower-triangular Cholesky factor, row-major.
    pub fn cholesky(&self) -> Result<&[f64]> {
        self.chol
            .get_or_init(|| cholesky_of(self.dim, &self.entries))
            .as_ref()
            .map(|v| v.as_slice())
            .map_err(Clone::clone)
    }

    /// A matrix `L` with `L Lᵀ = S`: the Cholesky factor when the matrix is
    /// safely positive definite, otherwise the symmetric square root from the
    /// eigendecomposition with negative round-off eigenvalues clipped to 0.
    pub fn factor(&self) -> &[f64] {
        self.root.get_or_init(|| {
            if self.min_eig > PSD_TOL {
                if let Ok(l) = self.cholesky() {
                    return l.to_vec();
                }
            }
            let (vals, vecs) = symmetric_eigen(self.dim, &self.entries);
            let d = self.dim;
            let mut root = vec![0.0; d * d];
            for k in 0..d {
                let s = vals[k].max(0.0).sqrt();
                for r in 0..d {
                    root[r * d + k] = vecs[r * d + k] * s;
                }
            }
            root
        })
    }

    /// `max_{j,k} |S_jk − Q_jk|`.
    pub fn sup_norm_diff(&self, other: &CovarianceModel) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(sup_norm_diff_of(&self.entries, &other.entries))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dim, self.entries.iter().map(|x| x * factor).collect())
    }

    pub fn add(&self, other: &CovarianceModel) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Self::new(self.dim, self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect())
    }

    /// `L z` for the factor returned by [`CovarianceModel::factor`].
    pub fn transform(&self, z: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let l = self.factor();
        for r in 0..d {
            let row = &l[r * d..(r + 1) * d];
            out[r] = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }
}

fn check_symmetric(dim: usize, s: &[f64]) -> Result<()> {
    for r in 0..dim {
        for c in (r + 1)..dim {
            let gap = (s[r * dim + c] - s[c * dim + r]).abs();
            if !(gap <= SYMMETRY_TOL) {
                return Err(Error::NotSymmetric { row: r, col: c, gap });
            }
        }
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// `max |a_i − b_i|` over equally sized slices.
pub fn sup_norm_diff_of(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Cholesky factorization of a symmetric matrix given row-major.
pub fn cholesky_of(dim: usize, s: &[f64]) -> Result<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for j in 0..dim {
        let mut diag = s[j * dim + j];
        for k in 0..j {
            diag -= l[j * dim + k] * l[j * dim + k];
        }
        if !(diag > PIVOT_TOL) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: diag });
        }
        let ljj = diag.sqrt();
        l[j * dim + j] = ljj;
        for i in (j + 1)..dim {
            let mut v = s[i * dim + j];
            for k in 0..j {
                v -= l[i * dim + k] * l[j * dim + k];
            }
            l[i * dim + j] = v / ljj;
        }
    }
    Ok(l)
}

/// Smallest eigenvalue of a symmetric matrix (may be indefinite).
pub fn min_eigenvalue_of(dim: usize, s: &[f64]) -> f64 {
    let (vals, _) = symmetric_eigen(dim, s);
    vals[0]
}

/// Eigenvalues (ascending) and eigenvectors (columns, row-major storage) of
/// a symmetric matrix via Householder tridiagonalization and implicit QL.
pub fn symmetric_eigen(dim: usize, s: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = dim;
    let mut v: Vec<Vec<f64>> = (0..n).map(|r| s[r * n..(r + 1) * n].to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    implicit_ql(&mut v, &mut d, &mut e);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals = order.iter().map(|&k| d[k]).collect();
    let mut vecs = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + col] = v[r][k];
        }
    }
    (vals, vecs)
}

// Householder reduction to tridiagonal form (EISPACK tred2 lineage).
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    if n == 0 {
        return;
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..(n - 1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

// Implicit QL iteration on the tridiagonal matrix (EISPACK tql2 lineage).
fn implicit_ql(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    if n == 0 {
        return;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

/// Product of half-open intervals `∏ (lower_j, upper_j]`; infinite
/// endpoints are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl RectangleSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        for (j, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if a.is_nan() || b.is_nan() || a == f64::INFINITY || b == f64::NEG_INFINITY || a > b {
                return Err(Error::DegenerateRectangle { coord: j, lower: a, upper: b });
            }
        }
        Ok(RectangleSpec { lower, upper })
    }

    /// `(−∞, x]^d`: the event `{max_j w_j ≤ x}`.
    pub fn one_sided(dim: usize, x: f64) -> Self {
        RectangleSpec { lower: vec![f64::NEG_INFINITY; dim], upper: vec![x; dim] }
    }

    /// `(−x, x]^d`: the event `{max_j |w_j| ≤ x}` up to boundary.
    pub fn symmetric_box(dim: usize, x: f64) -> Result<Self> {
        Self::new(vec![-x; dim], vec![x; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// `A^t = ∏ (a_j − t, b_j + t]`.
    pub fn enlarge(&self, t: f64) -> Result<Self> {
        let lower: Vec<f64> = self.lower.iter().map(|a| a - t).collect();
        let upper: Vec<f64> = self.upper.iter().map(|b| b + t).collect();
        Self::new(lower, upper)
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        w.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&x, (&a, &b))| a < x && x <= b)
    }

    /// `max_j [(w_j − b_j) ∨ (a_j − w_j)]`: non-positive exactly on the
    /// closure of the rectangle.
    pub fn max_violation(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&a, &b))| (x - b).max(a - x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mat_mul_lt(l: &[f64], d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                out[r * d + c] = (0..d).map(|k| l[r * d + k] * l[c * d + k]).sum();
            }
        }
        out
    }

    #[test]
    fn cholesky_identity() {
        let s = CovarianceModel::identity(3);
        assert_eq!(s.cholesky().unwrap(), CovarianceModel::identity(3).entries());
    }

    #[test]
    fn cholesky_two_by_two() {
        let s = CovarianceModel::new(2, vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        let l = s.cholesky().unwrap();
        assert_relative_eq!(l[0], 1.0);
        assert_eq!(l[1], 0.0);
        assert_relative_eq!(l[2], 0.5);
        assert_relative_eq!(l[3], 0.75f64.sqrt(), epsilon = 1e-15);
        let back = mat_mul_lt(l, 2);
        assert!(sup_norm_diff_of(&back, s.entries()) <= 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let raw = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(cholesky_of(2, &raw), Err(Error::NotPositiveDefinite { .. })));
        assert_relative_eq!(min_eigenvalue_of(2, &raw), -1.0, epsilon = 1e-14);
        assert!(matches!(
            CovarianceModel::new(2, raw.to_vec()),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn rejects_asymmetric() {
        let e = CovarianceModel::new(2, vec![1.0, 0.1, 0.2, 1.0]);
        assert!(matches!(e, Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert_relative_eq!(CovarianceModel::identity(5).min_eigenvalue(), 1.0, epsilon = 1e-14);
        let eq = CovarianceModel::equicorrelated(3, 0.5).unwrap();
        assert_relative_eq!(eq.min_eigenvalue(), 0.5, epsilon = 1e-13);
        for d in [2, 5, 11, 40] {
            let sw = CovarianceModel::local_means(d).unwrap();
            assert!(sw.min_eigenvalue().abs() <= 1e-9, "d={d}: {}", sw.min_eigenvalue());
            assert!(matches!(sw.cholesky(), Err(Error::NotPositiveDefinite { .. })));
            let back = mat_mul_lt(sw.factor(), d);
            assert!(sup_norm_diff_of(&back, sw.entries()) <= 1e-10);
        }
    }

    #[test]
    fn sup_norm_examples() {
        let s = CovarianceModel::equicorrelated(4, 0.2).unwrap();
        assert_eq!(s.sup_norm_diff(&s).unwrap(), 0.0);
        let q = CovarianceModel::new(2, vec![1.0, 0.3, 0.3, 1.0]).unwrap();
        assert_relative_eq!(CovarianceModel::identity(2).sup_norm_diff(&q).unwrap(), 0.3);
        for d in [3usize, 10, 11] {
            let p = 1.0 / d as f64;
            let sw = CovarianceModel::local_means(d).unwrap();
            let surrogate = CovarianceModel::identity(d).scaled(1.0 / (1.0 - p)).unwrap();
            let gap = sw.sup_norm_diff(&surrogate).unwrap();
            assert_relative_eq!(gap, 1.0 / (d as f64 - 1.0), epsilon = 1e-14);
            assert_relative_eq!(gap, p / (1.0 - p), epsilon = 1e-14);
        }
        assert!(matches!(
            CovarianceModel::identity(2).sup_norm_diff(&CovarianceModel::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eigen_matches_reference_solver() {
        let d = 7;
        let mut a = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                a[r * d + c] = ((r * 7 + c * 3) % 11) as f64 / 5.0 - 1.0;
            }
        }
        let mut s = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                s[r * d + c] = 0.5 * (a[r * d + c] + a[c * d + r]);
            }
        }
        let (vals, vecs) = symmetric_eigen(d, &s);
        let reference = nalgebra::DMatrix::from_row_slice(d, d, &s).symmetric_eigen();
        let mut rv: Vec<f64> = reference.eigenvalues.iter().copied().collect();
        rv.sort_by(f64::total_cmp);
        for (x, y) in vals.iter().zip(&rv) {
            assert_relative_eq!(x, y, epsilon = 1e-12, max_relative = 1e-9);
        }
        // S v = λ v
        for k in 0..d {
            for r in 0..d {
                let sv: f64 = (0..d).map(|c| s[r * d + c] * vecs[c * d + k]).sum();
                assert!((sv - vals[k] * vecs[r * d + k]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn enlarge_examples() {
        let a = RectangleSpec::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(a.enlarge(0.0).unwrap(), a);
        let b = RectangleSpec::new(vec![0.0], vec![1.0]).unwrap();
        let e = b.enlarge(0.5).unwrap();
        assert_eq!((e.lower()[0], e.upper()[0]), (-0.5, 1.5));
        assert!(matches!(b.enlarge(-0.6), Err(Error::DegenerateRectangle { .. })));
        let one = RectangleSpec::one_sided(3, 2.0).enlarge(1.0).unwrap();
        assert_eq!(one.lower()[0], f64::NEG_INFINITY);
        assert_eq!(one.upper()[2], 3.0);
    }

    fn psd_matrix(d: usize, raw: &[f64]) -> Vec<f64> {
        // A Aᵀ + small ridge
        let mut s = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                s[r * d + c] = (0..d).map(|k| raw[r * d + k] * raw[c * d + k]).sum::<f64>();
            }
            s[r * d + r] += 1e-3;
        }
        s
    }

    proptest! {
        #[test]
        fn cholesky_reconstructs(d in 1usize..=8, raw in proptest::collection::vec(-2.0f64..2.0, 64)) {
            let s = psd_matrix(d, &raw[..d * d]);
            let cov = CovarianceModel::new(d, s.clone()).unwrap();
            let l = cov.cholesky().unwrap();
            prop_assert!(sup_norm_diff_of(&mat_mul_lt(l, d), &s) <= 1e-10);
            for j in 0..d {
                prop_assert!(cov.min_eigenvalue() <= s[j * d + j] + 1e-12);
            }
        }

        #[test]
        fn sup_norm_is_a_metric(
            a in proptest::collection::vec(-1.0f64..1.0, 9),
            b in proptest::collection::vec(-1.0f64..1.0, 9),
            c in proptest::collection::vec(-1.0f64..1.0, 9),
        ) {
            let (sa, sb, sc) = (psd_matrix(3, &a), psd_matrix(3, &b), psd_matrix(3, &c));
            let (ma, mb, mc) = (
                CovarianceModel::new(3, sa).unwrap(),
                CovarianceModel::new(3, sb).unwrap(),
                CovarianceModel::new(3, sc).unwrap(),
            );
            let ab = ma.sup_norm_diff(&mb).unwrap();
            prop_assert_eq!(ab, mb.sup_norm_diff(&ma).unwrap());
            prop_assert_eq!(ma.sup_norm_diff(&ma).unwrap(), 0.0);
            prop_assert!(ab <= ma.sup_norm_diff(&mc).unwrap() + mc.sup_norm_diff(&mb).unwrap() + 1e-12);
        }

        #[test]
        fn enlarge_composes(lo in -5.0f64..0.0, width in 0.0f64..5.0, t in -1.0f64..3.0, s in -1.0f64..3.0) {
            let a = RectangleSpec::new(vec![lo, f64::NEG_INFINITY], vec![lo + width, 1.0]).unwrap();
            if let (Ok(step), Ok(direct)) = (a.enlarge(t).and_then(|x| x.enlarge(s)), a.enlarge(t + s)) {
                prop_assert!((step.lower()[0] - direct.lower()[0]).abs() <= 1e-12);
                prop_assert_eq!(step.lower()[1], f64::NEG_INFINITY);
                prop_assert!((step.upper()[0] - direct.upper()[0]).abs() <= 1e-12);
                prop_assert!((step.upper()[1] - direct.upper()[1]).abs() <= 1e-12);
            }
            if let Ok(big) = a.enlarge(t.abs()) {
                let back = big.enlarge(-t.abs()).unwrap();
                prop_assert!((back.lower()[0] - lo).abs() <= 1e-12);
                prop_assert!((back.upper()[0] - (lo + width)).abs() <= 1e-12);
            }
        }
    }
}
