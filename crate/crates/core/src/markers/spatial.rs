//! Situation awareness (M7, M8) and predation risk (M9, M10).

use super::{MarkerConfig, Segment};
use crate::geom::{centroid, Vec2};

/// Distances and counts describing one sheep at one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialContext {
    /// Sheep to shepherd.
    pub d_pi_beta: f64,
    /// Sheep to flock centre.
    pub d_pi_gcm: f64,
    /// Flock centre to shepherd.
    pub d_gcm_beta: f64,
    /// Other sheep blocking the line of sight to the shepherd.
    pub theta: usize,
    /// 1-based distance bin, 1 nearest the shepherd.
    pub bin_order: usize,
    pub n_bins: usize,
    /// Crowding: other sheep nearby.
    pub omega_pipi: usize,
}

/// Situation awareness of a sheep, in `(0, 1]`.
///
/// With a zero distance in the denominator the obstruction term is taken
/// at its limit: 1 when nothing obstructs, 0 otherwise.
pub fn situation_awareness(ctx: &SpatialContext) -> f64 {
    if ctx.theta == 0 {
        return 1.0;
    }
    let denom = ctx.d_pi_gcm * ctx.d_gcm_beta;
    if denom <= 0.0 {
        return 0.0;
    }
    let ratio = ctx.d_pi_beta * ctx.d_pi_beta / denom;
    1.0 / (ratio * ctx.theta as f64 + 1.0)
}

/// Sheep (other than `i`) lying within `corridor` of the open segment
/// from sheep `i` to the shepherd.
pub fn line_of_sight_obstructions(sheep: &[Vec2], i: usize, beta: Vec2, corridor: f64) -> usize {
    let from = sheep[i];
    let axis = beta - from;
    let len_sq = axis.norm_sq();
    if len_sq == 0.0 {
        return 0;
    }
    sheep
        .iter()
        .enumerate()
        .filter(|&(j, p)| {
            if j == i {
                return false;
            }
            let rel = *p - from;
            let u = rel.dot(axis) / len_sq;
            if u <= 0.0 || u >= 1.0 {
                return false;
            }
            let perp = rel.cross(axis).abs() / len_sq.sqrt();
            perp <= corridor
        })
        .count()
}

/// Number of distance bins for `n` sheep, `ceil(sqrt(n))`.
pub fn n_bins(n: usize) -> usize {
    let mut b = (n as f64).sqrt().ceil() as usize;
    // guard against float error on perfect squares
    while b > 1 && (b - 1) * (b - 1) >= n {
        b -= 1;
    }
    while b * b < n {
        b += 1;
    }
    b.max(1)
}

/// Predation risk, `(1 / O_b) * N / (Omega + 1)`.
pub fn predation_risk(ctx: &SpatialContext, n: usize) -> f64 {
    n as f64 / (ctx.bin_order as f64 * (ctx.omega_pipi as f64 + 1.0))
}

/// Bin orders from distances to the shepherd: sheep are ranked nearest
/// first (ties by index) and the ranks split evenly over `n_bins` bins.
pub fn bin_orders(dist_to_shepherd: &[f64]) -> Vec<usize> {
    let n = dist_to_shepherd.len();
    let bins = n_bins(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        dist_to_shepherd[a]
            .total_cmp(&dist_to_shepherd[b])
            .then(a.cmp(&b))
    });
    let mut out = vec![0; n];
    for (rank, &agent) in order.iter().enumerate() {
        out[agent] = rank * bins / n + 1;
    }
    out
}

/// Spatial contexts of all sheep in one frame.
pub fn frame_contexts(frame: &[Vec2], n_sheep: usize, cfg: &MarkerConfig) -> Vec<SpatialContext> {
    let sheep = &frame[..n_sheep];
    let beta = frame[n_sheep];
    let gcm = centroid(sheep);
    let d_gcm_beta = gcm.distance(beta);
    let dists: Vec<f64> = sheep.iter().map(|p| p.distance(beta)).collect();
    let orders = bin_orders(&dists);
    let bins = n_bins(n_sheep);
    let crowd = 3.0 * cfg.r_agent_repulse;
    let corridor = cfg.r_agent_repulse / 2.0;
    (0..n_sheep)
        .map(|i| SpatialContext {
            d_pi_beta: dists[i],
            d_pi_gcm: sheep[i].distance(gcm),
            d_gcm_beta,
            theta: line_of_sight_obstructions(sheep, i, beta, corridor),
            bin_order: orders[i],
            n_bins: bins,
            omega_pipi: sheep
                .iter()
                .enumerate()
                .filter(|&(j, p)| j != i && p.distance(sheep[i]) <= crowd)
                .count(),
        })
        .collect()
}

/// Per-sheep, per-tick situation awareness and predation risk.
pub struct SpatialSeries {
    pub sa: Vec<Vec<f64>>,
    pub pr: Vec<Vec<f64>>,
}

pub fn spatial_series(seg: &Segment, cfg: &MarkerConfig) -> SpatialSeries {
    let n = seg.n_sheep;
    let mut sa = vec![Vec::with_capacity(seg.len()); n];
    let mut pr = vec![Vec::with_capacity(seg.len()); n];
    for frame in seg.frames {
        for (i, ctx) in frame_contexts(frame, n, cfg).iter().enumerate() {
            sa[i].push(situation_awareness(ctx));
            pr[i].push(predation_risk(ctx, n));
        }
    }
    SpatialSeries { sa, pr }
}
