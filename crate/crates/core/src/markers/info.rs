//! Symbolic information-theoretic markers.
//!
//! All estimators are plug-in (histogram) estimators over small alphabets
//! with first-order histories, in bits, using the `0 log 0 = 0` convention.

use std::cell::RefCell;
use std::collections::HashMap;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{is_flat, mean, variance};
use crate::error::{Error, Result};

/// Equal-width binning over the series' own range. A (numerically)
/// constant series maps to symbol 0 throughout.
pub fn symbolize(series: &[f64], n_bins: usize) -> Vec<usize> {
    assert!(n_bins >= 2, "symbolize needs at least two bins");
    if is_flat(series) {
        return vec![0; series.len()];
    }
    let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    series
        .iter()
        .map(|&x| (((x - lo) / span * n_bins as f64) as usize).min(n_bins - 1))
        .collect()
}

fn alphabet(xs: &[usize]) -> usize {
    xs.iter().copied().max().map_or(1, |m| m + 1)
}

fn plogp_sum(counts: impl Iterator<Item = usize>, total: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Shannon entropy of the symbol distribution.
pub fn shannon_entropy(symbols: &[usize]) -> f64 {
    if symbols.is_empty() {
        return 0.0;
    }
    let mut counts = vec![0usize; alphabet(symbols)];
    for &s in symbols {
        counts[s] += 1;
    }
    plogp_sum(counts.into_iter(), symbols.len() as f64).max(0.0)
}

/// Plug-in transfer entropy from `source` to `target` with unit history
/// length and lag:
/// `sum p(x', x, y) log2( p(x' | x, y) / p(x' | x) )`.
pub fn transfer_entropy(source: &[usize], target: &[usize]) -> Result<f64> {
    if source.len() != target.len() {
        return Err(Error::Estimator("series lengths differ".into()));
    }
    if target.len() < 2 {
        return Err(Error::Estimator(
            "transfer entropy needs at least one transition".into(),
        ));
    }
    let a = alphabet(target).max(alphabet(source));
    let idx = |next: usize, cur: usize, src: usize| (next * a + cur) * a + src;
    let mut joint = vec![0usize; a * a * a];
    for t in 0..target.len() - 1 {
        joint[idx(target[t + 1], target[t], source[t])] += 1;
    }
    let mut cur_src = vec![0usize; a * a];
    let mut next_cur = vec![0usize; a * a];
    let mut cur = vec![0usize; a];
    for next in 0..a {
        for c in 0..a {
            for s in 0..a {
                let n = joint[idx(next, c, s)];
                cur_src[c * a + s] += n;
                next_cur[next * a + c] += n;
                cur[c] += n;
            }
        }
    }
    let total = (target.len() - 1) as f64;
    let mut te = 0.0;
    for next in 0..a {
        for c in 0..a {
            for s in 0..a {
                let n = joint[idx(next, c, s)];
                if n == 0 {
                    continue;
                }
                let num = n as f64 * cur[c] as f64;
                let den = cur_src[c * a + s] as f64 * next_cur[next * a + c] as f64;
                te += n as f64 / total * (num / den).log2();
            }
        }
    }
    Ok(te.max(0.0))
}

/// Active information storage `I(X_t; X_{t-1})`.
pub fn active_information_storage(symbols: &[usize]) -> f64 {
    if symbols.len() < 2 {
        return 0.0;
    }
    let a = alphabet(symbols);
    let mut joint = vec![0usize; a * a];
    let mut prev = vec![0usize; a];
    let mut next = vec![0usize; a];
    for w in symbols.windows(2) {
        joint[w[0] * a + w[1]] += 1;
        prev[w[0]] += 1;
        next[w[1]] += 1;
    }
    let total = (symbols.len() - 1) as f64;
    let mut mi = 0.0;
    for p in 0..a {
        for n in 0..a {
            let c = joint[p * a + n];
            if c > 0 {
                mi += c as f64 / total
                    * (c as f64 * total / (prev[p] as f64 * next[n] as f64)).log2();
            }
        }
    }
    mi.max(0.0)
}

/// Effort to compress: number of non-sequential recursive pair
/// substitution passes until the sequence is constant or a single symbol.
///
/// Each pass replaces the most frequent adjacent pair (non-overlapping
/// occurrences, ties broken by the lexicographically smallest pair) with a
/// fresh symbol.
pub fn effort_to_compress(symbols: &[usize]) -> usize {
    let mut seq: Vec<usize> = symbols.to_vec();
    let mut next_symbol = alphabet(&seq);
    let mut passes = 0;
    while seq.len() > 1 && seq.iter().any(|&s| s != seq[0]) {
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        let mut t = 0;
        while t + 1 < seq.len() {
            let pair = (seq[t], seq[t + 1]);
            *counts.entry(pair).or_default() += 1;
            // a run like `aaa` holds one non-overlapping `aa`
            if pair.0 == pair.1 && t + 2 < seq.len() && seq[t + 2] == pair.0 {
                t += 2;
            } else {
                t += 1;
            }
        }
        let best = counts
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(pair, _)| pair)
            .expect("sequence has a pair");
        let mut out = Vec::with_capacity(seq.len());
        let mut t = 0;
        while t < seq.len() {
            if t + 1 < seq.len() && (seq[t], seq[t + 1]) == best {
                out.push(next_symbol);
                t += 2;
            } else {
                out.push(seq[t]);
                t += 1;
            }
        }
        seq = out;
        next_symbol += 1;
        passes += 1;
    }
    passes
}

thread_local! {
    static FFT: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Shannon entropy (bits) of the normalised one-sided periodogram of the
/// mean-removed series. Zero for a constant series.
pub fn spectral_entropy(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 || is_flat(series) {
        return 0.0;
    }
    let m = mean(series);
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x - m, 0.0)).collect();
    FFT.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let power: Vec<f64> = buf[..=n / 2].iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    power
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| {
            let q = p / total;
            -q * q.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Directed information exchange between a source J and a target I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseTE {
    /// `te(J -> I)`
    pub te_fwd: f64,
    /// `te(I -> J)`
    pub te_rev: f64,
    pub net: f64,
    pub tot: f64,
    pub sync: f64,
}

impl PairwiseTE {
    pub fn new(te_fwd: f64, te_rev: f64) -> Self {
        let net = te_fwd - te_rev;
        let tot = te_fwd + te_rev;
        let mut pair = PairwiseTE {
            te_fwd,
            te_rev,
            net,
            tot,
            sync: 0.0,
        };
        pair.sync = synchronicity(&pair);
        pair
    }

    pub fn between(source: &[usize], target: &[usize]) -> Result<Self> {
        Ok(Self::new(
            transfer_entropy(source, target)?,
            transfer_entropy(target, source)?,
        ))
    }
}

/// `sgn(net) * |tot|`: positive when J drives I, negative when J is driven
/// by I, zero when there is no net direction.
pub fn synchronicity(pair: &PairwiseTE) -> f64 {
    if pair.net > 0.0 {
        pair.tot.abs()
    } else if pair.net < 0.0 {
        -pair.tot.abs()
    } else {
        0.0
    }
}

/// Transfer entropy between every ordered pair of agents in a window;
/// `get(j, i)` is `te(j -> i)`.
#[derive(Debug, Clone)]
pub struct TeMatrix {
    n: usize,
    te: Vec<f64>,
}

impl TeMatrix {
    pub fn from_symbols(symbols: &[Vec<usize>]) -> Self {
        let n = symbols.len();
        let mut te = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    te[j * n + i] = transfer_entropy(&symbols[j], &symbols[i]).unwrap_or(0.0);
                }
            }
        }
        TeMatrix { n, te }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, source: usize, target: usize) -> f64 {
        self.te[source * self.n + target]
    }

    /// Pair with `source` as J and `target` as I.
    pub fn pair(&self, source: usize, target: usize) -> PairwiseTE {
        PairwiseTE::new(self.get(source, target), self.get(target, source))
    }
}

/// Transfer-entropy markers of one sheep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeSuite {
    /// M21, M22: synchronicity `S(j -> i)` over all partners.
    pub sync_mean: f64,
    pub sync_var: f64,
    /// M23: net transfer from the sheep to the shepherd.
    pub net_vs_shepherd: f64,
    /// M27
    pub total_vs_shepherd: f64,
    /// M29: net transfer into the sheep from the other sheep.
    pub internal_net: f64,
    /// M30: net transfer from the shepherd into the sheep.
    pub external_net: f64,
    /// M31: summed total transfer with every partner.
    pub aggregate_influence: f64,
    /// M32: summed outgoing transfer.
    pub net_source: f64,
    /// M33..M36: incoming and outgoing transfer per partner.
    pub inflow_mean: f64,
    pub inflow_var: f64,
    pub outflow_mean: f64,
    pub outflow_var: f64,
}

/// Markers of sheep `i` from a window's pairwise table; `shepherd` is the
/// shepherd's agent index.
pub fn transfer_entropy_suite(te: &TeMatrix, i: usize, shepherd: usize) -> TeSuite {
    let partners: Vec<usize> = (0..te.len()).filter(|&j| j != i).collect();
    let syncs: Vec<f64> = partners.iter().map(|&j| te.pair(j, i).sync).collect();
    let inflow: Vec<f64> = partners.iter().map(|&j| te.get(j, i)).collect();
    let outflow: Vec<f64> = partners.iter().map(|&j| te.get(i, j)).collect();
    let with_shepherd = te.pair(shepherd, i);
    TeSuite {
        sync_mean: mean(&syncs),
        sync_var: variance(&syncs),
        net_vs_shepherd: -with_shepherd.net,
        total_vs_shepherd: with_shepherd.tot,
        internal_net: partners
            .iter()
            .filter(|&&j| j != shepherd)
            .map(|&j| te.pair(j, i).net)
            .sum(),
        external_net: with_shepherd.net,
        aggregate_influence: partners.iter().map(|&j| te.pair(j, i).tot).sum(),
        net_source: outflow.iter().sum(),
        inflow_mean: mean(&inflow),
        inflow_var: variance(&inflow),
        outflow_mean: mean(&outflow),
        outflow_var: variance(&outflow),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageSuite {
    /// M26
    pub ais: f64,
    /// M28
    pub effort_to_compress: f64,
    /// M41, from the speed series
    pub spectral_entropy: f64,
    /// M42
    pub shannon_entropy: f64,
}

pub fn storage_entropy_suite(symbols: &[usize], speeds: &[f64]) -> StorageSuite {
    StorageSuite {
        ais: active_information_storage(symbols),
        effort_to_compress: effort_to_compress(symbols) as f64,
        spectral_entropy: spectral_entropy(speeds),
        shannon_entropy: shannon_entropy(symbols),
    }
}
