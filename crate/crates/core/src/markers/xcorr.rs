//! Normalised cross-correlation between an agent and the shepherd (M15, M16).

use super::{is_flat, mean, speed_series, variance, Segment};
use crate::error::Result;

/// Correlation coefficient of `x_t` against `y_{t+lag}`, normalised by the
/// full-series standard deviations and length (the biased `coeff` form),
/// so `x` against itself at lag 0 is exactly 1.
///
/// Returns 0 when either series is constant.
pub fn cross_correlation(x: &[f64], y: &[f64], lag: isize) -> f64 {
    let n = x.len().min(y.len());
    if n == 0 {
        return 0.0;
    }
    let (x, y) = (&x[..n], &y[..n]);
    if is_flat(x) || is_flat(y) {
        return 0.0;
    }
    let (mx, my) = (mean(x), mean(y));
    let (sx, sy) = (variance(x).sqrt(), variance(y).sqrt());
    let mut acc = 0.0;
    for t in 0..n {
        let u = t as isize + lag;
        if u < 0 || u >= n as isize {
            continue;
        }
        acc += (x[t] - mx) * (y[u as usize] - my);
    }
    acc / (n as f64 * sx * sy)
}

/// Coefficients for lags `-max_lag..=max_lag`.
pub fn correlogram(x: &[f64], y: &[f64], max_lag: usize) -> Vec<f64> {
    let l = max_lag as isize;
    (-l..=l).map(|lag| cross_correlation(x, y, lag)).collect()
}

/// Mean and variance of the correlogram.
pub fn lagged_stats(x: &[f64], y: &[f64], max_lag: usize) -> (f64, f64) {
    let c = correlogram(x, y, max_lag);
    (mean(&c), variance(&c))
}

/// M15/M16 for agent `i`: speed of `i` against the shepherd's speed over
/// lags up to a quarter of the window.
pub fn cross_correlation_stats(seg: &Segment, i: usize) -> Result<(f64, f64)> {
    seg.require(4, "cross-correlation")?;
    let x = speed_series(&seg.path(i), seg.dt);
    let y = speed_series(&seg.path(seg.shepherd()), seg.dt);
    Ok(lagged_stats(&x, &y, seg.len() / 4))
}
