//! Agent association networks and swarm attention points.
//!
//! Both analyses start from one marker-matrix window at a time: every
//! marker column is scaled by its L1 norm over the agents, so each marker
//! carries equal weight, and an agent's share of the window is the L1 norm
//! of its scaled row, normalised over the swarm.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::ProfileLabel;
use crate::windowing::MarkerMatrix;

const KMEANS_MAX_ITER: usize = 100;
const KMEANS_TOL: f64 = 1e-9;
const ATTENTION_TOL: f64 = 1e-12;

/// Rows of window `window` with every usable marker column divided by its
/// L1 norm across agents. Columns that are all zero or contain a masked
/// cell are dropped.
pub fn normalized_rows(matrix: &MarkerMatrix, window: usize) -> Vec<Vec<f64>> {
    let n = matrix.n_agents();
    let mut rows = vec![Vec::new(); n];
    for c in 0..matrix.n_markers() {
        let col = matrix.column(window, c);
        if col.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let norm: f64 = col.iter().map(|v| v.abs()).sum();
        if norm <= 0.0 {
            continue;
        }
        for (row, v) in rows.iter_mut().zip(col) {
            row.push(v / norm);
        }
    }
    rows
}

/// Normalised L1 shares of a set of rows: uniform when every row is zero.
pub fn l1_shares(rows: &[Vec<f64>]) -> Vec<f64> {
    let norms: Vec<f64> = rows.iter().map(|r| r.iter().map(|v| v.abs()).sum()).collect();
    let total: f64 = norms.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / rows.len() as f64; rows.len()];
    }
    norms.iter().map(|v| v / total).collect()
}

/// Per-agent share of window `window`; sums to 1.
pub fn agent_l1_profile(matrix: &MarkerMatrix, window: usize) -> Vec<f64> {
    l1_shares(&normalized_rows(matrix, window))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances after each assignment step.
    pub objective: Vec<f64>,
}

/// Lloyd's algorithm from a k-means++ start.
///
/// When there are fewer distinct points than `k`, emptied clusters take
/// over a point from a cluster with several members, so every cluster
/// ends up non-empty.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeans> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::config("k", format!("{k} clusters for {n} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centroids: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut chosen = vec![false; n];
    while centroids.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| centroids.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if u < acc && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // only duplicates left
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
    }

    let mut assignment = vec![0; n];
    let mut objective = Vec::new();
    for _ in 0..KMEANS_MAX_ITER {
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, cen) in centroids.iter().enumerate() {
                let d = sq_dist(p, cen);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            assignment[i] = best;
        }
        fill_empty_clusters(points, &mut assignment, &centroids, k);
        objective.push(
            points
                .iter()
                .zip(&assignment)
                .map(|(p, &c)| sq_dist(p, &centroids[c]))
                .sum(),
        );

        let mut shift: f64 = 0.0;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p)
                .collect();
            let dim = centroid.len();
            let mut next = vec![0.0; dim];
            for m in &members {
                for (acc, v) in next.iter_mut().zip(m.iter()) {
                    *acc += v;
                }
            }
            for v in next.iter_mut() {
                *v /= members.len() as f64;
            }
            shift = shift.max(sq_dist(&next, centroid).sqrt());
            *centroid = next;
        }
        if shift < KMEANS_TOL {
            break;
        }
    }
    Ok(KMeans {
        assignment,
        centroids,
        objective,
    })
}

fn fill_empty_clusters(points: &[Vec<f64>], assignment: &mut [usize], centroids: &[Vec<f64>], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignment.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        // the worst-fitting point of a multi-member cluster moves over
        let mut donor = None;
        let mut worst = -1.0;
        for (i, p) in points.iter().enumerate() {
            let a = assignment[i];
            if sizes[a] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[a]);
            if d >= worst {
                worst = d;
                donor = Some(i);
            }
        }
        match donor {
            Some(i) => assignment[i] = empty,
            None => return,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationResult {
    /// `adjacency[i][j]`: number of windows in which i and j shared a cluster.
    pub adjacency: Vec<Vec<usize>>,
    /// Degree of each agent over the summed graph, normalised to sum 1.
    pub scores: Vec<f64>,
    /// Cluster id of each agent, per window.
    pub assignments: Vec<Vec<usize>>,
    /// No agent was ever co-clustered; scores fall back to uniform.
    pub zero_interaction: bool,
}

/// Sums co-clustering graphs over windows.
pub fn association_from_assignments(assignments: &[Vec<usize>]) -> Result<AssociationResult> {
    if assignments.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "association needs at least 2 windows, got {}",
            assignments.len()
        )));
    }
    let n = assignments[0].len();
    if assignments.iter().any(|a| a.len() != n) {
        return Err(Error::Schema("windows disagree on the number of agents".into()));
    }
    let mut adjacency = vec![vec![0usize; n]; n];
    for a in assignments {
        for i in 0..n {
            for j in 0..n {
                if i != j && a[i] == a[j] {
                    adjacency[i][j] += 1;
                }
            }
        }
    }
    let degrees: Vec<usize> = adjacency.iter().map(|r| r.iter().sum()).collect();
    let total: usize = degrees.iter().sum();
    let zero_interaction = total == 0;
    let scores = if zero_interaction {
        vec![1.0 / n as f64; n]
    } else {
        degrees.iter().map(|&d| d as f64 / total as f64).collect()
    };
    Ok(AssociationResult {
        adjacency,
        scores,
        assignments: assignments.to_vec(),
        zero_interaction,
    })
}

/// Cluster count matching the number of distinct agent types, at least 2.
pub fn default_k(labels: &[ProfileLabel]) -> usize {
    let mut distinct: Vec<ProfileLabel> = labels.to_vec();
    distinct.sort();
    distinct.dedup();
    distinct.len().max(2).min(labels.len().max(1))
}

/// Clusters the scaled marker rows of every window and sums the
/// co-clustering graphs.
pub fn agent_association(matrix: &MarkerMatrix, k: usize, seed: u64) -> Result<AssociationResult> {
    let assignments = (0..matrix.n_windows())
        .into_par_iter()
        .map(|w| {
            let rows = normalized_rows(matrix, w);
            Ok(kmeans(&rows, k, seed.wrapping_add(w as u64))?.assignment)
        })
        .collect::<Result<Vec<_>>>()?;
    association_from_assignments(&assignments)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionResult {
    pub eta: f64,
    /// Per window, whether each agent is an attention point.
    pub membership: Vec<Vec<bool>>,
    /// Per agent, fraction of windows in which it is an attention point.
    pub fractions: Vec<f64>,
}

/// Largest-share agents whose cumulative share first reaches `eta`; ties
/// go to the lower agent index.
pub fn attention_window(shares: &[f64], eta: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| shares[b].total_cmp(&shares[a]).then(a.cmp(&b)));
    let mut member = vec![false; shares.len()];
    let mut acc = 0.0;
    for i in order {
        if acc >= eta - ATTENTION_TOL {
            break;
        }
        member[i] = true;
        acc += shares[i];
    }
    member
}

pub fn attention_points(profiles: &[Vec<f64>], eta: f64) -> Result<AttentionResult> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::config("eta", format!("{eta} is not in (0, 1]")));
    }
    let membership: Vec<Vec<bool>> = profiles.iter().map(|p| attention_window(p, eta)).collect();
    let n = profiles.first().map_or(0, |p| p.len());
    let fractions = (0..n)
        .map(|a| {
            let hits = membership.iter().filter(|m| m[a]).count();
            if membership.is_empty() {
                0.0
            } else {
                hits as f64 / membership.len() as f64
            }
        })
        .collect();
    Ok(AttentionResult {
        eta,
        membership,
        fractions,
    })
}

/// Attention points of every window of a matrix.
pub fn matrix_attention(matrix: &MarkerMatrix, eta: f64) -> Result<AttentionResult> {
    let profiles: Vec<Vec<f64>> = (0..matrix.n_windows()).map(|w| agent_l1_profile(matrix, w)).collect();
    attention_points(&profiles, eta)
}

/// Descriptive statistics in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub max: f64,
    pub min: f64,
    pub range: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Summary of fractions in `[0, 1]`, reported as percentages.
pub fn summarize(fractions: &[f64]) -> SummaryStats {
    if fractions.is_empty() {
        return SummaryStats {
            max: 0.0,
            min: 0.0,
            range: 0.0,
            mean: 0.0,
            std: 0.0,
        };
    }
    let pct: Vec<f64> = fractions.iter().map(|f| 100.0 * f).collect();
    let max = pct.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = pct.iter().copied().fold(f64::INFINITY, f64::min);
    let n = pct.len() as f64;
    let mean = pct.iter().sum::<f64>() / n;
    let std = (pct.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    SummaryStats {
        max,
        min,
        range: max - min,
        mean,
        std,
    }
}

pub fn summarize_association(r: &AssociationResult) -> SummaryStats {
    summarize(&r.scores)
}

pub fn summarize_attention(r: &AttentionResult) -> SummaryStats {
    summarize(&r.fractions)
}

pub fn write_adjacency_csv<W: Write>(r: &AssociationResult, mut w: W) -> Result<()> {
    let n = r.adjacency.len();
    write!(w, "agent")?;
    for j in 0..n {
        write!(w, ",{j}")?;
    }
    writeln!(w, ",score")?;
    for (i, row) in r.adjacency.iter().enumerate() {
        write!(w, "{i}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{}", r.scores[i])?;
    }
    Ok(())
}

pub fn write_membership_csv<W: Write>(r: &AttentionResult, mut w: W) -> Result<()> {
    let n = r.fractions.len();
    write!(w, "window")?;
    for j in 0..n {
        write!(w, ",{j}")?;
    }
    writeln!(w)?;
    for (win, m) in r.membership.iter().enumerate() {
        write!(w, "{win}")?;
        for &b in m {
            write!(w, ",{}", b as u8)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// One summary row per labelled group (e.g. scenario).
pub fn write_stats_csv<W: Write>(rows: &[(String, SummaryStats)], mut w: W) -> Result<()> {
    writeln!(w, "group,max,min,range,mean,std")?;
    for (name, s) in rows {
        writeln!(
            w,
            "{name},{:.2},{:.2},{:.2},{:.2},{:.2}",
            s.max, s.min, s.range, s.mean, s.std
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markers::{MarkerId, MarkerSet};
    use crate::sim::ScenarioId;
    use crate::windowing::WindowPlan;
    use proptest::prelude::*;

    fn matrix(values: Vec<Vec<Vec<f64>>>) -> MarkerMatrix {
        let n_agents = values[0].len();
        let width = values[0][0].len();
        MarkerMatrix::from_values(
            ScenarioId::S1,
            0,
            WindowPlan::new(20, 0.5).unwrap(),
            MarkerSet::from_ids((1..=width as u8).map(MarkerId::m)),
            vec![ProfileLabel::A7; n_agents],
            values,
        )
        .unwrap()
    }

    /// Relabel-invariant form of a partition.
    fn canonical(a: &[usize]) -> Vec<usize> {
        let mut map = Vec::new();
        a.iter()
            .map(|c| match map.iter().position(|m| m == c) {
                Some(i) => i,
                None => {
                    map.push(*c);
                    map.len() - 1
                }
            })
            .collect()
    }

    #[test]
    fn profile_cases() {
        let same = matrix(vec![vec![vec![2.0, 5.0]; 4]]);
        assert_eq!(agent_l1_profile(&same, 0), vec![0.25; 4]);

        let single = matrix(vec![vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![0.0, 0.0]]]);
        assert_eq!(agent_l1_profile(&single, 0), vec![0.0, 1.0, 0.0]);

        // columns (1,2,1) / 4 and (0,3,1) / 4 -> rows 1/4, 5/4, 2/4 -> / 2
        let m = matrix(vec![vec![vec![1.0, 0.0], vec![2.0, 3.0], vec![1.0, 1.0]]]);
        let p = agent_l1_profile(&m, 0);
        for (got, want) in p.iter().zip([0.125, 0.625, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }

        // an all-zero column and a masked column are ignored
        let m = matrix(vec![vec![
            vec![1.0, 0.0, f64::NAN],
            vec![3.0, 0.0, 1.0],
        ]]);
        assert_eq!(agent_l1_profile(&m, 0), vec![0.25, 0.75]);
    }

    #[test]
    fn kmeans_simple_cases() {
        let pts: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![if i < 3 { 0.0 } else { 10.0 } + i as f64 * 0.01])
            .collect();
        let one = kmeans(&pts, 1, 0).unwrap();
        assert!(one.assignment.iter().all(|&a| a == 0));
        let two = kmeans(&pts, 2, 0).unwrap();
        assert_eq!(canonical(&two.assignment), vec![0, 0, 0, 1, 1, 1]);
        assert!(kmeans(&pts, 7, 0).is_err());
    }

    #[test]
    fn kmeans_duplicates_become_singletons() {
        let pts = vec![vec![1.0, 1.0]; 4];
        let r = kmeans(&pts, 3, 5).unwrap();
        let mut sizes = vec![0; 3];
        for &a in &r.assignment {
            sizes[a] += 1;
        }
        assert!(sizes.iter().all(|&s| s > 0));
        let all = kmeans(&pts, 4, 5).unwrap();
        assert_eq!(canonical(&all.assignment), vec![0, 1, 2, 3]);
    }

    /// Minimum-SSE partition by enumerating every assignment.
    fn brute_force(points: &[Vec<f64>], k: usize) -> Vec<usize> {
        let n = points.len();
        let mut best = (f64::INFINITY, vec![]);
        for code in 0..k.pow(n as u32) {
            let a: Vec<usize> = (0..n).map(|i| code / k.pow(i as u32) % k).collect();
            if (0..k).any(|c| !a.contains(&c)) {
                continue;
            }
            let mut sse = 0.0;
            for c in 0..k {
                let m: Vec<&Vec<f64>> = (0..n).filter(|&i| a[i] == c).map(|i| &points[i]).collect();
                let cx = m.iter().map(|p| p[0]).sum::<f64>() / m.len() as f64;
                let cy = m.iter().map(|p| p[1]).sum::<f64>() / m.len() as f64;
                sse += m.iter().map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sum::<f64>();
            }
            if sse < best.0 - 1e-12 {
                best = (sse, a);
            }
        }
        canonical(&best.1)
    }

    #[test]
    fn three_blobs_match_exhaustive_oracle() {
        let pts: Vec<Vec<f64>> = [
            (0.0, 0.0), (0.4, 0.1), (0.1, 0.5),
            (5.0, 5.0), (5.3, 4.8), (4.7, 5.4),
            (0.0, 6.0), (0.5, 6.2), (-0.3, 5.7),
        ]
        .iter()
        .map(|&(x, y)| vec![x, y])
        .collect();
        let oracle = brute_force(&pts, 3);
        for seed in 0..5 {
            assert_eq!(canonical(&kmeans(&pts, 3, seed).unwrap().assignment), oracle);
        }
    }

    #[test]
    fn scripted_association() {
        let r = association_from_assignments(&[vec![0, 0, 1, 1], vec![0, 1, 0, 1]]).unwrap();
        assert_eq!(r.scores, vec![0.25; 4]);
        assert!(r.adjacency.iter().all(|row| row.iter().sum::<usize>() == 2));
        assert_eq!(r.adjacency[0], vec![0, 1, 1, 0]);
        let s = summarize_association(&r);
        assert_eq!((s.max, s.min, s.range, s.mean, s.std), (25.0, 25.0, 0.0, 25.0, 0.0));

        assert!(association_from_assignments(&[vec![0, 0]]).is_err());
    }

    #[test]
    fn association_boundaries() {
        let values: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|w| (0..5).map(|a| vec![(a * a + w) as f64, (a + 1) as f64]).collect())
            .collect();
        let m = matrix(values);
        let k1 = agent_association(&m, 1, 0).unwrap();
        assert_eq!(k1.scores, vec![0.2; 5]);
        assert!(k1.adjacency[0][1..].iter().all(|&v| v == 3));
        let kn = agent_association(&m, 5, 0).unwrap();
        assert!(kn.zero_interaction);
        assert!(kn.adjacency.iter().flatten().all(|&v| v == 0));
        assert_eq!(kn.scores, vec![0.2; 5]);
    }

    #[test]
    fn scripted_summary() {
        let s = summarize(&[0.1, 0.4, 0.25]);
        assert!((s.max - 40.0).abs() < 1e-12);
        assert!((s.min - 10.0).abs() < 1e-12);
        assert!((s.range - 30.0).abs() < 1e-12);
        assert!((s.mean - 25.0).abs() < 1e-12);
        assert!((s.std - 150f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn attention_cases() {
        let q = attention_window(&[0.1, 0.6, 0.2, 0.1], 0.5);
        assert_eq!(q, vec![false, true, false, false]);
        let uniform = vec![1.0 / 20.0; 20];
        let q = attention_window(&uniform, 0.5);
        assert_eq!(q.iter().filter(|&&b| b).count(), 10);
        assert!(q[..10].iter().all(|&b| b));
        let q = attention_window(&[0.5, 0.0, 0.3, 0.2], 1.0);
        assert_eq!(q, vec![true, false, true, true]);
        assert!(attention_points(&[uniform.clone()], 0.0).is_err());
        assert!(attention_points(&[uniform], 1.5).is_err());
    }

    #[test]
    fn default_cluster_count() {
        use ProfileLabel::*;
        assert_eq!(default_k(&[A7; 20]), 2);
        assert_eq!(default_k(&[A2, A3, A6, A7, A7]), 4);
    }

    proptest! {
        #[test]
        fn kmeans_objective_never_increases(
            pts in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 3..30),
            k in 1usize..4,
            seed in 0u64..100,
        ) {
            let k = k.min(pts.len());
            let r = kmeans(&pts, k, seed).unwrap();
            for w in r.objective.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
        }

        #[test]
        fn attention_is_minimal_and_monotone(
            raw in prop::collection::vec(0.0f64..1.0, 2..25),
            e1 in 0.01f64..1.0,
            e2 in 0.01f64..1.0,
        ) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 0.0);
            let shares: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let q = attention_window(&shares, lo);
            let sum: f64 = shares.iter().zip(&q).filter(|(_, &m)| m).map(|(s, _)| s).sum();
            prop_assert!(sum >= lo - ATTENTION_TOL);
            let smallest = shares.iter().zip(&q).filter(|(_, &m)| m).map(|(s, _)| *s).fold(f64::INFINITY, f64::min);
            prop_assert!(sum - smallest < lo + ATTENTION_TOL);
            // members outrank non-members
            for (i, &mi) in q.iter().enumerate() {
                for (j, &mj) in q.iter().enumerate() {
                    if mi && !mj {
                        prop_assert!(shares[i] >= shares[j]);
                    }
                }
            }
            let q_hi = attention_window(&shares, hi);
            for (a, b) in q.iter().zip(&q_hi) {
                prop_assert!(!a || *b);
            }
        }

        #[test]
        fn association_scores_are_a_distribution(
            windows in prop::collection::vec(prop::collection::vec(0usize..3, 6), 2..8),
        ) {
            let r = association_from_assignments(&windows).unwrap();
            prop_assert!((r.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for i in 0..6 {
                prop_assert_eq!(r.adjacency[i][i], 0);
                for j in 0..6 {
                    prop_assert_eq!(r.adjacency[i][j], r.adjacency[j][i]);
                }
            }
            // relabelling clusters changes nothing
            let relabelled: Vec<Vec<usize>> =
                windows.iter().map(|w| w.iter().map(|c| 2 - c).collect()).collect();
            prop_assert_eq!(association_from_assignments(&relabelled).unwrap().scores, r.scores);
        }
    }
}
