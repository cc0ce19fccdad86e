//! Greedy mutual-information feature selection.
//!
//! Features are discretised into equal-frequency bins and ranked with the
//! conditional-MI-maximisation rule: the first pick has the largest
//! `I(f; Y)`, each later pick maximises `min_s I(f; Y | s)` over the
//! already selected `s`. That marginal score is the feature's unique
//! information; it is nonincreasing along the ranking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::windowing::Samples;

pub const MI_BINS: usize = 16;

/// Values smaller than this are treated as no information at all.
const MI_EPS: f64 = 1e-12;

/// Equal-frequency bin of every value, by rank; tied values share the bin
/// of their first rank and NaN gets its own extra bin.
pub fn equal_frequency_bins(values: &[f64], n_bins: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let n = order.len();
    let mut bins = vec![n_bins; values.len()];
    let mut rank = 0;
    while rank < n {
        let v = values[order[rank]];
        let bin = rank * n_bins / n;
        let mut end = rank;
        while end < n && values[order[end]] == v {
            bins[order[end]] = bin;
            end += 1;
        }
        rank = end;
    }
    bins
}

fn entropy_of(counts: &[usize], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Plug-in `I(X; Y)` in nats over discrete codes.
pub fn mutual_information(x: &[usize], y: &[usize]) -> f64 {
    let ax = x.iter().max().map_or(0, |m| m + 1);
    let ay = y.iter().max().map_or(0, |m| m + 1);
    let total = x.len() as f64;
    let mut joint = vec![0usize; ax * ay];
    let mut px = vec![0usize; ax];
    let mut py = vec![0usize; ay];
    for (&a, &b) in x.iter().zip(y) {
        joint[a * ay + b] += 1;
        px[a] += 1;
        py[b] += 1;
    }
    let mi = entropy_of(&px, total) + entropy_of(&py, total) - entropy_of(&joint, total);
    if mi < MI_EPS {
        0.0
    } else {
        mi
    }
}

/// Plug-in `I(X; Y | Z)` in nats over discrete codes.
pub fn conditional_mutual_information(x: &[usize], y: &[usize], z: &[usize]) -> f64 {
    let ax = x.iter().max().map_or(0, |m| m + 1);
    let ay = y.iter().max().map_or(0, |m| m + 1);
    let az = z.iter().max().map_or(0, |m| m + 1);
    let total = x.len() as f64;
    let mut xyz = vec![0usize; ax * ay * az];
    let mut xz = vec![0usize; ax * az];
    let mut yz = vec![0usize; ay * az];
    let mut zc = vec![0usize; az];
    for ((&a, &b), &c) in x.iter().zip(y).zip(z) {
        xyz[(a * ay + b) * az + c] += 1;
        xz[a * az + c] += 1;
        yz[b * az + c] += 1;
        zc[c] += 1;
    }
    // H(XZ) + H(YZ) - H(XYZ) - H(Z)
    let cmi = entropy_of(&xz, total) + entropy_of(&yz, total)
        - entropy_of(&xyz, total)
        - entropy_of(&zc, total);
    if cmi < MI_EPS {
        0.0
    } else {
        cmi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiRanking {
    /// Feature indices in selection order.
    pub order: Vec<usize>,
    /// Marginal (unique) information of each pick, nats.
    pub gains: Vec<f64>,
}

impl MiRanking {
    /// Minimal prefix whose summed gain reaches `coverage` of the total.
    pub fn prefix(&self, coverage: f64) -> Vec<usize> {
        let total: f64 = self.gains.iter().sum();
        if total <= 0.0 {
            return Vec::new();
        }
        let mut acc = 0.0;
        for (k, g) in self.gains.iter().enumerate() {
            acc += g;
            if acc >= coverage * total - 1e-12 * total {
                return self.order[..=k].to_vec();
            }
        }
        self.order.clone()
    }
}

/// Ranks every feature of `data` against its labels.
pub fn mi_rank(data: &Samples) -> Result<MiRanking> {
    if data.n_features < 2 {
        return Err(Error::config("markers", "selection needs at least two features"));
    }
    let codes: Vec<Vec<usize>> = (0..data.n_features)
        .map(|f| {
            let col: Vec<f64> = (0..data.len()).map(|i| data.value(i, f)).collect();
            equal_frequency_bins(&col, MI_BINS)
        })
        .collect();
    let y = &data.y;
    let nf = data.n_features;
    let mut score: Vec<f64> = codes.iter().map(|c| mutual_information(c, y)).collect();
    let mut chosen = vec![false; nf];
    let mut order = Vec::with_capacity(nf);
    let mut gains = Vec::with_capacity(nf);
    for _ in 0..nf {
        let mut pick = None;
        for f in 0..nf {
            if !chosen[f] && pick.map_or(true, |p: usize| score[f] > score[p]) {
                pick = Some(f);
            }
        }
        let p = pick.expect("a feature remains");
        chosen[p] = true;
        order.push(p);
        gains.push(score[p]);
        for f in 0..nf {
            if !chosen[f] && score[f] > 0.0 {
                score[f] = score[f].min(conditional_mutual_information(&codes[f], y, &codes[p]));
            }
        }
    }
    Ok(MiRanking { order, gains })
}

/// Feature indices of the minimal MI-ranked prefix reaching `coverage`.
pub fn mi_select(data: &Samples, coverage: f64) -> Result<Vec<usize>> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(Error::config("coverage", format!("{coverage} is not in (0, 1]")));
    }
    Ok(mi_rank(data)?.prefix(coverage))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Label in 0..4; feature 0 carries the high bit, feature 1 a noisy
    /// copy of the low bit, feature 2 is a duplicate of feature 0 and
    /// feature 3 is independent noise.
    fn synthetic(n: usize) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let label: usize = rng.gen_range(0..4);
            let hi = (label >> 1) as f64 + rng.gen::<f64>() * 0.5;
            let lo_bit = if rng.gen_bool(0.8) { label & 1 } else { 1 - (label & 1) };
            let lo = lo_bit as f64 + rng.gen::<f64>() * 0.5;
            x.extend([hi, lo, hi, rng.gen::<f64>()]);
            y.push(label);
        }
        Samples::new(x, 4, y, 4).unwrap()
    }

    #[test]
    fn bins_are_equal_frequency() {
        let v: Vec<f64> = (0..32).map(|i| i as f64).collect();
        let b = equal_frequency_bins(&v, 16);
        for k in 0..16 {
            assert_eq!(b.iter().filter(|&&x| x == k).count(), 2);
        }
        let b = equal_frequency_bins(&[1.0, 1.0, 1.0, 2.0, f64::NAN], 2);
        assert_eq!(b, vec![0, 0, 0, 1, 2]);
    }

    #[test]
    fn information_of_known_relations() {
        let x: Vec<usize> = (0..1000).map(|i| i % 4).collect();
        assert!((mutual_information(&x, &x) - 4f64.ln()).abs() < 1e-12);
        let z: Vec<usize> = (0..1000).map(|i| (i / 4) % 2).collect();
        assert_eq!(mutual_information(&x, &z), 0.0);
        assert_eq!(conditional_mutual_information(&x, &x, &x), 0.0);
        // knowing z leaves x fully informative about itself
        assert!((conditional_mutual_information(&x, &x, &z) - 4f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn ranking_matches_known_ordering() {
        let r = mi_rank(&synthetic(4000)).unwrap();
        assert_eq!(r.order[0], 0, "strongest feature first");
        assert_eq!(r.order[1], 1, "complementary feature second");
        // the duplicate adds nothing once its twin is in
        let dup = r.order.iter().position(|&f| f == 2).unwrap();
        assert_eq!(r.gains[dup], 0.0);
        // label-independent noise ranks last among informative features
        let noise = r.order.iter().position(|&f| f == 3).unwrap();
        assert!(noise >= 2);
        assert!(r.gains[noise] < 0.01);
        for w in r.gains.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn coverage_prefixes() {
        let d = synthetic(4000);
        let r = mi_rank(&d).unwrap();
        let all_nonzero: Vec<usize> = r
            .order
            .iter()
            .zip(&r.gains)
            .filter(|(_, &g)| g > 0.0)
            .map(|(&f, _)| f)
            .collect();
        assert_eq!(mi_select(&d, 1.0).unwrap(), all_nonzero);
        assert_eq!(mi_select(&d, 0.5).unwrap(), vec![0]);
        assert!(mi_select(&d, 0.0).is_err());
    }
}
