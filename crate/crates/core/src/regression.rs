//! Kernel regression with Silverman's bandwidth rule, plus K-fold
//! cross-fitting. Used by the regression baselines and by the residual
//! diagnostics on synthetic data.
//!
//! Predictions come from a local-linear fit (Gaussian weights): unlike the
//! plain Nadaraya-Watson average it has no boundary bias, which matters when
//! testing residual independence on steep trends. Nadaraya-Watson remains as
//! the fallback where the local fit is degenerate.

use crate::error::{Error, Result};
use crate::numerics::variance;

/// Silverman's rule of thumb: `1.06 * sd * n^(-1/5)`.
pub fn silverman_bandwidth(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::Parameter("bandwidth needs at least 2 points".into()));
    }
    let sd = variance(x).sqrt();
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::Parameter(format!("degenerate bandwidth: sd = {sd}")));
    }
    Ok(1.06 * sd * (x.len() as f64).powf(-0.2))
}

/// Gaussian-kernel Nadaraya-Watson estimate of `E[y | x0]` from training pairs.
/// Falls back to the training mean when every kernel weight underflows.
pub fn nw_predict(train_x: &[f64], train_y: &[f64], bandwidth: f64, x0: f64) -> f64 {
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in train_x.iter().zip(train_y) {
        let d = x0 - xi;
        let w = (-d * d * inv).exp();
        num += w * yi;
        den += w;
    }
    if den > 1e-300 {
        num / den
    } else {
        train_y.iter().sum::<f64>() / train_y.len() as f64
    }
}

/// Local-linear estimate of `E[y | x0]`: weighted least squares of `y` on
/// `(1, x - x0)` with Gaussian weights, evaluated at the intercept.
pub fn local_linear_predict(train_x: &[f64], train_y: &[f64], bandwidth: f64, x0: f64) -> f64 {
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let (mut t0, mut t1) = (0.0, 0.0);
    for (xi, yi) in train_x.iter().zip(train_y) {
        let d = xi - x0;
        let w = (-d * d * inv).exp();
        s0 += w;
        s1 += w * d;
        s2 += w * d * d;
        t0 += w * yi;
        t1 += w * d * yi;
    }
    let det = s0 * s2 - s1 * s1;
    if det.abs() > 1e-12 * s2.max(1e-300) {
        (s2 * t0 - s1 * t1) / det
    } else {
        // weights concentrated on one point (or all underflowed)
        nw_predict(train_x, train_y, bandwidth, x0)
    }
}

/// Out-of-fold predictions of `y` from `x` with contiguous folds; the bandwidth
/// is refit on each training part.
pub fn crossfit_predictions(x: &[f64], y: &[f64], folds: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::Parameter(
            "regression inputs differ in length".into(),
        ));
    }
    if folds < 2 || n < 2 * folds {
        return Err(Error::Parameter(format!(
            "need at least 2 folds and 2 points per fold, got n={n} folds={folds}"
        )));
    }
    let mut preds = vec![0.0; n];
    for f in 0..folds {
        let lo = f * n / folds;
        let hi = (f + 1) * n / folds;
        let mut tx = Vec::with_capacity(n - (hi - lo));
        let mut ty = Vec::with_capacity(n - (hi - lo));
        for i in (0..n).filter(|i| *i < lo || *i >= hi) {
            tx.push(x[i]);
            ty.push(y[i]);
        }
        let h = silverman_bandwidth(&tx)?;
        for i in lo..hi {
            preds[i] = local_linear_predict(&tx, &ty, h, x[i]);
        }
    }
    Ok(preds)
}

/// Out-of-fold residuals `y - E[y|x]`.
pub fn crossfit_residuals(x: &[f64], y: &[f64], folds: usize) -> Result<Vec<f64>> {
    let preds = crossfit_predictions(x, y, folds)?;
    Ok(y.iter().zip(&preds).map(|(yi, p)| yi - p).collect())
}

/// Out-of-fold mean squared error of predicting `y` from `x`.
pub fn crossfit_mse(x: &[f64], y: &[f64], folds: usize) -> Result<f64> {
    let r = crossfit_residuals(x, y, folds)?;
    Ok(r.iter().map(|e| e * e).sum::<f64>() / r.len() as f64)
}
