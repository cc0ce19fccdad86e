//! Scalar time-series markers: warping distance, divergence rate and
//! smoothing residuals.

use super::{is_flat, mean, variance, FLAT_TOLERANCE};

/// Dynamic time warping distance with absolute-difference local cost and
/// the symmetric `(1,0) / (0,1) / (1,1)` step pattern.
pub fn dtw(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { f64::INFINITY };
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in a {
        cur[0] = f64::INFINITY;
        for (j, &y) in b.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(cur[j]);
            cur[j + 1] = (x - y).abs() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Pairwise DTW distances between a set of series.
#[derive(Debug, Clone)]
pub struct DtwTable {
    n: usize,
    dist: Vec<f64>,
}

impl DtwTable {
    pub fn new(series: &[Vec<f64>]) -> Self {
        let n = series.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = dtw(&series[i], &series[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        DtwTable { n, dist }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Mean and population variance of series `i`'s distance to every other.
    pub fn stats(&self, i: usize) -> (f64, f64) {
        let d: Vec<f64> = (0..self.n).filter(|&j| j != i).map(|j| self.get(i, j)).collect();
        (mean(&d), variance(&d))
    }
}

const EMBED_DIM: usize = 2;
const THEILER: usize = 1;
const MAX_HORIZON: usize = 5;

/// Per-reference-point divergence rates (nats per sample) following
/// Rosenstein et al.: delay-embed with dimension 2 and lag 1, pair every
/// point with its nearest neighbour outside a one-sample temporal exclusion
/// window, and fit the slope of `ln d(i)` over `i = 0..=H` by least squares,
/// `H = min(5, M/4)` for `M` embedded points.
///
/// Empty for series too short or too flat to embed.
pub fn divergence_rates(x: &[f64]) -> Vec<f64> {
    if x.len() < EMBED_DIM + 1 || is_flat(x) {
        return Vec::new();
    }
    let m = x.len() - EMBED_DIM + 1;
    let horizon = MAX_HORIZON.min(m / 4);
    if horizon == 0 {
        return Vec::new();
    }
    let point = |t: usize| &x[t..t + EMBED_DIM];
    let dist = |a: usize, b: usize| {
        point(a)
            .iter()
            .zip(point(b))
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    };
    // separations at rounding level carry no divergence information
    let tiny = FLAT_TOLERANCE * (1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let usable = m - horizon;
    let mut rates = Vec::new();
    for j in 0..usable {
        let candidates: Vec<(usize, f64)> = (0..usable)
            .filter(|&k| k.abs_diff(j) > THEILER)
            .map(|k| (k, dist(j, k)))
            .filter(|&(_, d)| d > tiny)
            .collect();
        let Some(closest) = candidates.iter().map(|c| c.1).min_by(f64::total_cmp) else {
            continue;
        };
        // quantised series produce exact ties; take the earliest
        let Some(&(k, _)) = candidates.iter().find(|c| c.1 <= closest + tiny) else {
            continue;
        };
        let pts: Vec<(f64, f64)> = (0..=horizon)
            .map(|i| (i as f64, dist(j + i, k + i)))
            .filter(|&(_, d)| d > tiny)
            .map(|(i, d)| (i, d.ln()))
            .collect();
        if let Some(slope) = ls_slope(&pts) {
            rates.push(slope);
        }
    }
    rates
}

fn ls_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Mean and variance of the divergence rates; `(0, 0)` for degenerate
/// series.
pub fn lyapunov_stats(x: &[f64]) -> (f64, f64) {
    let rates = divergence_rates(x);
    if rates.is_empty() {
        (0.0, 0.0)
    } else {
        (mean(&rates), variance(&rates))
    }
}

/// Per-sample noise-to-signal ratios `r_t^2 / var(x)` on interior samples,
/// `r_t` being the residual after a centred width-3 moving average.
pub fn noise_to_signal(x: &[f64]) -> Vec<f64> {
    if x.len() < 3 || is_flat(x) {
        return Vec::new();
    }
    let var = variance(x);
    x.windows(3)
        .map(|w| {
            let r = w[1] - (w[0] + w[1] + w[2]) / 3.0;
            r * r / var
        })
        .collect()
}

/// Mean and variance of [`noise_to_signal`]; `(0, 0)` for degenerate series.
pub fn noise_to_signal_stats(x: &[f64]) -> (f64, f64) {
    let ratios = noise_to_signal(x);
    if ratios.is_empty() {
        (0.0, 0.0)
    } else {
        (mean(&ratios), variance(&ratios))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn logistic(n: usize, x0: f64) -> Vec<f64> {
        let mut x = x0;
        (0..n)
            .map(|_| {
                x = 4.0 * x * (1.0 - x);
                x
            })
            .collect()
    }

    /// Exponent from two directly iterated, repeatedly renormalised orbits.
    fn orbit_separation(x0: f64, steps: usize) -> f64 {
        let eps = 1e-9;
        let (mut a, mut b) = (x0, x0 + eps);
        let mut acc = 0.0;
        for _ in 0..steps {
            a = 4.0 * a * (1.0 - a);
            b = 4.0 * b * (1.0 - b);
            let d = (b - a).abs().max(1e-300);
            acc += (d / eps).ln();
            b = a + eps * (b - a).signum();
        }
        acc / steps as f64
    }

    #[test]
    fn dtw_hand_cases() {
        assert_eq!(dtw(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        // stretching a series costs nothing
        assert_eq!(dtw(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0, 3.0, 3.0]), 0.0);
        assert_eq!(dtw(&[0.0], &[1.0, 2.0]), 3.0);
        assert_eq!(dtw(&[0.0, 0.0], &[1.0, 1.0]), 2.0);
    }

    #[test]
    fn dtw_table_stats() {
        let s = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![3.0, 3.0]];
        let t = DtwTable::new(&s);
        assert_eq!(t.get(0, 2), 6.0);
        let (m, v) = t.stats(0);
        assert_eq!(m, 4.0);
        assert_eq!(v, 4.0);
    }

    #[test]
    fn logistic_map_exponent() {
        let ln2 = std::f64::consts::LN_2;
        let oracle = orbit_separation(0.3, 100_000);
        assert!((oracle - ln2).abs() < 0.01, "oracle = {oracle}");
        let (est, _) = lyapunov_stats(&logistic(1000, 0.3));
        assert!((est - oracle).abs() < 0.25 * ln2, "est = {est}, oracle = {oracle}");
    }

    #[test]
    fn degenerate_series_are_zero() {
        assert_eq!(lyapunov_stats(&[2.0; 40]), (0.0, 0.0));
        assert_eq!(noise_to_signal_stats(&[2.0; 40]), (0.0, 0.0));
        assert_eq!(lyapunov_stats(&[1.0, 2.0]), (0.0, 0.0));
    }

    #[test]
    fn ramp_has_no_noise() {
        let ramp: Vec<f64> = (0..30).map(|t| 0.5 * t as f64 + 1.0).collect();
        let (m, v) = noise_to_signal_stats(&ramp);
        assert!(m.abs() < 1e-12 && v.abs() < 1e-12);
    }

    #[test]
    fn zigzag_noise_ratio() {
        // +1,-1,...: residual 2/3 of the swing, variance 1
        let z: Vec<f64> = (0..20).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (m, v) = noise_to_signal_stats(&z);
        assert!((m - 16.0 / 9.0).abs() < 1e-12);
        assert!(v.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn dtw_metric_properties(
            a in prop::collection::vec(-5.0f64..5.0, 1..25),
            b in prop::collection::vec(-5.0f64..5.0, 1..25),
        ) {
            prop_assert_eq!(dtw(&a, &a), 0.0);
            prop_assert!((dtw(&a, &b) - dtw(&b, &a)).abs() < 1e-9);
            prop_assert!(dtw(&a, &b) >= 0.0);
        }
    }
}
