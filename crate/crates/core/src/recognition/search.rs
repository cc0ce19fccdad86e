//! Cross-validation and sequential hyperparameter search.
//!
//! The search is a small tree-structured Parzen estimator over the two
//! integer tree hyperparameters: a few uniform draws seed it, then each
//! trial picks, from candidates sampled around the best quarter of past
//! trials, the one maximising `l(x) / g(x)`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::accuracy;
use super::tree::{DecisionTree, TreeParams};
use crate::error::{Error, Result};
use crate::windowing::Samples;

/// Candidate values for each hyperparameter.
pub const MAX_DEPTHS: std::ops::RangeInclusive<usize> = 2..=30;
pub const MIN_LEAVES: [usize; 12] = [1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64];

const GOOD_FRACTION: f64 = 0.25;
const N_CANDIDATES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub folds: usize,
    /// Total number of evaluated trials.
    pub budget: usize,
    /// Uniformly drawn trials before the model-based phase.
    pub n_startup: usize,
    /// Cap on the rows used for tuning (stratified subsample); the final
    /// model always sees the full training split.
    pub tune_rows: Option<usize>,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            folds: 10,
            budget: 30,
            n_startup: 10,
            tune_rows: Some(20_000),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    Tpe,
    /// Budget too small for the model-based phase; every trial was random.
    RandomFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub params: TreeParams,
    pub cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: TreeParams,
    pub cv_accuracy: f64,
    pub strategy: SearchStrategy,
    pub trials: Vec<Trial>,
}

/// Fold index per row; each class is dealt round-robin after a seeded
/// shuffle so fold class proportions differ by at most one row.
pub fn stratified_folds(y: &[usize], n_classes: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for c in 0..n_classes {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        rows.shuffle(&mut rng);
        for r in rows {
            fold[r] = next % k;
            next += 1;
        }
    }
    fold
}

fn check_folds(data: &Samples, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::config("folds", "need at least two folds"));
    }
    let counts = data.class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateModel("training data has a single class".into()));
    }
    if let Some(c) = counts.iter().position(|&c| c > 0 && c < k) {
        return Err(Error::InsufficientData(format!(
            "class {c} has {} rows, fewer than {k} folds",
            counts[c]
        )));
    }
    Ok(())
}

/// Mean accuracy over `k` stratified folds.
pub fn cross_validate(data: &Samples, params: TreeParams, k: usize, seed: u64) -> Result<f64> {
    check_folds(data, k)?;
    let fold = stratified_folds(&data.y, data.n_classes, k, seed);
    let scores: Vec<Result<f64>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..data.len()).filter(|&i| fold[i] != f).collect();
            let test: Vec<usize> = (0..data.len()).filter(|&i| fold[i] == f).collect();
            let tree = DecisionTree::fit(&data.subset(&train), params)?;
            let held = data.subset(&test);
            Ok(accuracy(&tree.predict_all(&held), &held.y))
        })
        .collect();
    let mut sum = 0.0;
    for s in scores {
        sum += s?;
    }
    Ok(sum / k as f64)
}

/// Stratified subsample of at most `cap` rows (per-class shares rounded).
pub fn stratified_subsample(data: &Samples, cap: usize, seed: u64) -> Samples {
    if data.len() <= cap {
        return data.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frac = cap as f64 / data.len() as f64;
    let mut keep = Vec::with_capacity(cap);
    for c in 0..data.n_classes {
        let mut rows: Vec<usize> = (0..data.len()).filter(|&i| data.y[i] == c).collect();
        rows.shuffle(&mut rng);
        let n = ((rows.len() as f64 * frac).round() as usize).min(rows.len());
        keep.extend_from_slice(&rows[..n]);
    }
    keep.sort_unstable();
    data.subset(&keep)
}

/// Index-space Parzen density over `n` ordered values: a uniform prior
/// component plus one discretised Gaussian per observation.
fn parzen(obs: &[usize], n: usize) -> Vec<f64> {
    let bw = (n as f64 / 10.0).max(1.0);
    let mut dens = vec![1.0 / n as f64; n];
    for &o in obs {
        let kernel: Vec<f64> = (0..n)
            .map(|v| (-0.5 * ((v as f64 - o as f64) / bw).powi(2)).exp())
            .collect();
        let z: f64 = kernel.iter().sum();
        for (d, k) in dens.iter_mut().zip(kernel) {
            *d += k / z;
        }
    }
    let total: f64 = dens.iter().sum();
    dens.iter().map(|d| d / total).collect()
}

fn sample(dens: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, d) in dens.iter().enumerate() {
        acc += d;
        if u < acc {
            return i;
        }
    }
    dens.len() - 1
}

fn to_params(depth_idx: usize, leaf_idx: usize) -> TreeParams {
    TreeParams {
        max_depth: *MAX_DEPTHS.start() + depth_idx,
        min_leaf: MIN_LEAVES[leaf_idx],
    }
}

fn to_indices(p: TreeParams) -> (usize, usize) {
    (
        p.max_depth - MAX_DEPTHS.start(),
        MIN_LEAVES.iter().position(|&l| l == p.min_leaf).unwrap_or(0),
    )
}

/// Tunes `max_depth` and `min_leaf` by cross-validated accuracy.
pub fn tune(data: &Samples, cfg: &SearchConfig) -> Result<SearchOutcome> {
    if cfg.budget == 0 {
        return Err(Error::config("budget", "must be positive"));
    }
    let data = match cfg.tune_rows {
        Some(cap) => stratified_subsample(data, cap, cfg.seed ^ 0x5eed),
        None => data.clone(),
    };
    check_folds(&data, cfg.folds)?;
    let n_depth = MAX_DEPTHS.count();
    let n_leaf = MIN_LEAVES.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cache: HashMap<TreeParams, f64> = HashMap::new();
    let mut trials: Vec<Trial> = Vec::with_capacity(cfg.budget);
    let mut model_based = false;

    for t in 0..cfg.budget {
        let params = if t < cfg.n_startup {
            to_params(rng.gen_range(0..n_depth), rng.gen_range(0..n_leaf))
        } else {
            model_based = true;
            let mut ranked: Vec<&Trial> = trials.iter().collect();
            ranked.sort_by(|a, b| b.cv_accuracy.total_cmp(&a.cv_accuracy));
            let n_good = ((ranked.len() as f64 * GOOD_FRACTION).ceil() as usize).max(1);
            let (good, bad) = ranked.split_at(n_good);
            let idx = |ts: &[&Trial]| -> (Vec<usize>, Vec<usize>) {
                ts.iter().map(|t| to_indices(t.params)).unzip()
            };
            let (gd, gl) = idx(good);
            let (bd, bl) = idx(bad);
            let (l_depth, g_depth) = (parzen(&gd, n_depth), parzen(&bd, n_depth));
            let (l_leaf, g_leaf) = (parzen(&gl, n_leaf), parzen(&bl, n_leaf));
            let mut best: Option<((usize, usize), f64)> = None;
            for _ in 0..N_CANDIDATES {
                let (d, l) = (sample(&l_depth, &mut rng), sample(&l_leaf, &mut rng));
                let ratio = (l_depth[d] / g_depth[d]) * (l_leaf[l] / g_leaf[l]);
                if best.map_or(true, |(_, r)| ratio > r) {
                    best = Some(((d, l), ratio));
                }
            }
            let ((d, l), _) = best.expect("at least one candidate");
            to_params(d, l)
        };
        let score = match cache.get(&params) {
            Some(&s) => s,
            None => {
                let s = cross_validate(&data, params, cfg.folds, cfg.seed.wrapping_add(1))?;
                cache.insert(params, s);
                s
            }
        };
        trials.push(Trial {
            params,
            cv_accuracy: score,
        });
    }

    let best = trials
        .iter()
        .fold(None::<&Trial>, |acc, t| match acc {
            Some(b) if b.cv_accuracy >= t.cv_accuracy => Some(b),
            _ => Some(t),
        })
        .expect("budget is positive");
    Ok(SearchOutcome {
        best: best.params,
        cv_accuracy: best.cv_accuracy,
        strategy: if model_based {
            SearchStrategy::Tpe
        } else {
            SearchStrategy::RandomFallback
        },
        trials,
    })
}
