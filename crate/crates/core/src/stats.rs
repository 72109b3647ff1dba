//! Small descriptive-statistics helpers shared by the estimators.

use serde::{Deserialize, Serialize};

/// Least-squares line `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual variance; `NaN` with
    /// fewer than three points.
    pub slope_se: f64,
}

/// Ordinary (or weighted, when `weights` is given) least squares.
pub fn fit_line(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n || weights.is_some_and(|w| w.len() != n) {
        return None;
    }
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
        (rss / (n as f64 - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(LineFit { slope, intercept, slope_se })
}

/// Fit on `(ln x, ln y)`; points with non-positive coordinates are skipped.
pub fn fit_loglog(x: &[f64], y: &[f64], se: Option<&[f64]>) -> Option<LineFit> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut lw = Vec::new();
    for i in 0..x.len() {
        if x[i] > 0.0 && y[i] > 0.0 {
            lx.push(x[i].ln());
            ly.push(y[i].ln());
            // delta method: se(ln y) ≈ se(y) / y
            if let Some(s) = se {
                let rel = s[i] / y[i];
                lw.push(if rel > 0.0 { 1.0 / (rel * rel) } else { 1.0 });
            }
        }
    }
    fit_line(&lx, &ly, se.map(|_| lw.as_slice()))
}

/// Column means of a row-major `rows × cols` matrix.
pub fn column_means(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut m = vec![0.0; cols];
    for r in 0..rows {
        for (acc, v) in m.iter_mut().zip(&values[r * cols..(r + 1) * cols]) {
            *acc += v;
        }
    }
    m.iter_mut().for_each(|x| *x /= rows as f64);
    m
}

/// Covariance with divisor `rows` (not `rows − 1`) around the column means.
pub fn covariance(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mean = column_means(values, rows, cols);
    let mut cov = vec![0.0; cols * cols];
    let mut centered = vec![0.0; cols];
    for r in 0..rows {
        for j in 0..cols {
            centered[j] = values[r * cols + j] - mean[j];
        }
        for j in 0..cols {
            let cj = centered[j];
            for k in j..cols {
                cov[j * cols + k] += cj * centered[k];
            }
        }
    }
    for j in 0..cols {
        for k in j..cols {
            let v = cov[j * cols + k] / rows as f64;
            cov[j * cols + k] = v;
            cov[k * cols + j] = v;
        }
    }
    cov
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
