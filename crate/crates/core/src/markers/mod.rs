//! Per-window information markers M1..M42.
//!
//! Every kernel is a pure function of a [`Segment`] (a run of consecutive
//! frames). [`compute_window`] evaluates a [`MarkerSet`] for every sheep
//! in a segment, sharing the pairwise transfer-entropy and DTW tables
//! between agents.
//!
//! | markers | kernel |
//! |---|---|
//! | M1-M6, M14, M17-M20 | [`kinematics::kinematic_stats`] |
//! | M7-M10 | [`spatial`] (situation awareness, predation risk) |
//! | M11-M13 | [`kinematics::dba_stats`] |
//! | M15-M16 | [`xcorr::cross_correlation_stats`] |
//! | M21-M23, M27, M29-M36 | [`info::transfer_entropy_suite`] |
//! | M24-M25, M37-M40 | [`series`] |
//! | M26, M28, M41, M42 | [`info::storage_entropy_suite`] |

pub mod info;
pub mod kinematics;
pub mod series;
pub mod spatial;
pub mod xcorr;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{wrap_angle, Vec2};

pub const N_MARKERS: usize = 42;

/// Marker identifier `M1`..`M42`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MarkerId(u8);

impl MarkerId {
    pub fn new(number: usize) -> Result<Self> {
        if (1..=N_MARKERS).contains(&number) {
            Ok(MarkerId(number as u8))
        } else {
            Err(Error::Parse(format!("marker number {number} outside 1..=42")))
        }
    }

    /// Panics outside 1..=42; for literals.
    pub const fn m(number: u8) -> Self {
        assert!(number >= 1 && number as usize <= N_MARKERS);
        MarkerId(number)
    }

    pub fn number(self) -> usize {
        self.0 as usize
    }

    /// Zero-based position in a full 42-column row.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = MarkerId> {
        (1..=N_MARKERS as u8).map(MarkerId)
    }

    pub fn name(self) -> &'static str {
        MARKER_NAMES[self.index()]
    }
}

const MARKER_NAMES: [&str; N_MARKERS] = [
    "Speed (Segment)",
    "Distance (Segment Rate)",
    "Speed (Mean)",
    "Speed (Var)",
    "Heading (Mean)",
    "Heading (Var)",
    "Situation Awareness (Mean)",
    "Situation Awareness (Var)",
    "Predation Risk (Mean)",
    "Predation Risk (Var)",
    "Dynamic Body Acceleration (Mean)",
    "Dynamic Body Acceleration (Var)",
    "Dynamic Body Acceleration (Cumulative)",
    "Rate Of Change (Angular Velocity)",
    "Cross Correlation (Mean)",
    "Cross Correlation (Var)",
    "Distance (Mean)",
    "Distance (Var)",
    "Distance (Max)",
    "Distance (Min)",
    "Synchronicity (Mean)",
    "Synchronicity (Var)",
    "Transfer Entropy (Net)",
    "Dynamic Time Warping (Mean)",
    "Dynamic Time Warping (Var)",
    "Active Information Storage (Mean)",
    "Transfer Entropy (Total)",
    "Effort to Compress",
    "Transfer Entropy (Internal Net)",
    "Transfer Entropy (External Net)",
    "Transfer Entropy (Agg. Infl.)",
    "Transfer Entropy (Net Source)",
    "Information Flow In (Mean)",
    "Information Flow In (Var)",
    "Information Flow Out (Mean)",
    "Information Flow Out (Var)",
    "Lyapunov Exponent (Mean)",
    "Lyapunov Exponent (Var)",
    "Noise-to-Signal (Mean)",
    "Noise-to-Signal (Var)",
    "Power Spectral Density (Entropy)",
    "Shannon Entropy",
];

impl fmt::Display for MarkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.0)
    }
}

impl FromStr for MarkerId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix('M')
            .ok_or_else(|| Error::Parse(format!("marker `{s}` must look like M<n>")))?;
        let n: usize = digits
            .parse()
            .map_err(|_| Error::Parse(format!("marker `{s}` must look like M<n>")))?;
        MarkerId::new(n)
    }
}

impl TryFrom<String> for MarkerId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MarkerId> for String {
    fn from(m: MarkerId) -> String {
        m.to_string()
    }
}

/// Ordered, duplicate-free selection of markers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarkerSet(Vec<MarkerId>);

impl MarkerSet {
    pub fn all() -> Self {
        MarkerSet(MarkerId::all().collect())
    }

    /// M1..M23, the marker subset used for ablation and interaction analysis.
    pub fn core23() -> Self {
        MarkerSet(MarkerId::all().take(23).collect())
    }

    pub fn from_ids(ids: impl IntoIterator<Item = MarkerId>) -> Self {
        let mut v: Vec<MarkerId> = ids.into_iter().collect();
        v.sort();
        v.dedup();
        MarkerSet(v)
    }

    /// Parses `23`, `42`, or a comma-separated list such as `M1,M3,M17`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.trim() {
            "42" | "all" => Ok(Self::all()),
            "23" => Ok(Self::core23()),
            list => {
                let ids = list
                    .split(',')
                    .map(|t| t.trim().parse::<MarkerId>())
                    .collect::<Result<Vec<_>>>()?;
                if ids.is_empty() {
                    return Err(Error::Parse("empty marker set".into()));
                }
                Ok(Self::from_ids(ids))
            }
        }
    }

    pub fn ids(&self) -> &[MarkerId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, m: MarkerId) -> bool {
        self.0.binary_search(&m).is_ok()
    }

    pub fn position(&self, m: MarkerId) -> Option<usize> {
        self.0.binary_search(&m).ok()
    }

    pub fn without(&self, removed: &MarkerSet) -> MarkerSet {
        MarkerSet(self.0.iter().copied().filter(|m| !removed.contains(*m)).collect())
    }

    fn any_of(&self, numbers: &[u8]) -> bool {
        numbers.iter().any(|&n| self.contains(MarkerId(n)))
    }
}

impl fmt::Display for MarkerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Constants the kernels need beyond raw positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerConfig {
    /// Sheep repulsion radius; scales the line-of-sight corridor and the
    /// crowding neighbourhood.
    pub r_agent_repulse: f64,
    /// Alphabet size for the symbolic estimators.
    pub n_symbols: usize,
}

impl Default for MarkerConfig {
    fn default() -> Self {
        MarkerConfig {
            r_agent_repulse: 2.0,
            n_symbols: 3,
        }
    }
}

/// A window of consecutive frames. Agents `0..n_sheep` are sheep, agent
/// `n_sheep` is the shepherd.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    pub frames: &'a [Vec<Vec2>],
    pub n_sheep: usize,
    pub dt: f64,
}

impl<'a> Segment<'a> {
    pub fn new(frames: &'a [Vec<Vec2>], n_sheep: usize, dt: f64) -> Result<Self> {
        if frames.iter().any(|f| f.len() != n_sheep + 1) {
            return Err(Error::Schema(format!(
                "every frame must hold {} agents",
                n_sheep + 1
            )));
        }
        Ok(Segment { frames, n_sheep, dt })
    }

    /// Number of observations k.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn shepherd(&self) -> usize {
        self.n_sheep
    }

    pub fn n_agents(&self) -> usize {
        self.n_sheep + 1
    }

    pub fn path(&self, agent: usize) -> Vec<Vec2> {
        self.frames.iter().map(|f| f[agent]).collect()
    }

    pub fn require(&self, k: usize, what: &str) -> Result<()> {
        if self.len() < k {
            Err(Error::Window(format!(
                "{what} needs at least {k} observations, window has {}",
                self.len()
            )))
        } else {
            Ok(())
        }
    }
}

/// Per-tick displacement vectors of a path.
pub(crate) fn displacements(path: &[Vec2]) -> Vec<Vec2> {
    path.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Per-tick speeds of a path.
pub fn speed_series(path: &[Vec2], dt: f64) -> Vec<f64> {
    path.windows(2).map(|w| (w[1] - w[0]).norm() / dt).collect()
}

/// Per-tick heading change, zero where either step has no direction.
pub fn turn_series(path: &[Vec2]) -> Vec<f64> {
    displacements(path)
        .windows(2)
        .map(|w| {
            if w[0] == Vec2::ZERO || w[1] == Vec2::ZERO {
                0.0
            } else {
                wrap_angle(w[1].angle() - w[0].angle())
            }
        })
        .collect()
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Population variance.
pub(crate) fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Relative spread below which a series counts as constant. Positions
/// go through trigonometry, so a shepherd walking at its capped speed
/// shows ~1e-15 jitter that would otherwise be amplified into spurious
/// correlations and symbols.
pub const FLAT_TOLERANCE: f64 = 1e-9;

/// True when the range of `xs` is negligible against its magnitude.
pub fn is_flat(xs: &[f64]) -> bool {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.is_empty() || !(hi - lo).is_finite() {
        return true;
    }
    hi - lo <= FLAT_TOLERANCE * (1.0 + lo.abs().max(hi.abs()))
}

/// One row of marker values; `None` marks a marker that is unavailable
/// for this window or was not requested.
pub type MarkerRow = [Option<f64>; N_MARKERS];

fn put(row: &mut MarkerRow, number: u8, value: f64) {
    row[number as usize - 1] = value.is_finite().then_some(value);
}

/// Evaluates `set` for every sheep in `seg`.
pub fn compute_window(seg: &Segment, cfg: &MarkerConfig, set: &MarkerSet) -> Vec<MarkerRow> {
    let n = seg.n_sheep;
    let mut rows = vec![[None; N_MARKERS]; n];
    if n == 0 {
        return rows;
    }

    let paths: Vec<Vec<Vec2>> = (0..seg.n_agents()).map(|a| seg.path(a)).collect();
    let speeds: Vec<Vec<f64>> = paths.iter().map(|p| speed_series(p, seg.dt)).collect();

    if set.any_of(&[1, 2, 3, 4, 5, 6, 14, 17, 18, 19, 20]) {
        for (i, row) in rows.iter_mut().enumerate() {
            if let Ok(k) = kinematics::kinematic_stats(seg, i) {
                for (num, v) in [
                    (1, k.segment_speed),
                    (2, k.path_rate),
                    (3, k.speed_mean),
                    (4, k.speed_var),
                    (5, k.heading_mean),
                    (6, k.heading_var),
                    (14, k.turn_rate),
                    (17, k.dist_mean),
                    (18, k.dist_var),
                    (19, k.dist_max),
                    (20, k.dist_min),
                ] {
                    put(row, num, v);
                }
            }
        }
    }

    if set.any_of(&[7, 8, 9, 10]) {
        let sp = spatial::spatial_series(seg, cfg);
        for (i, row) in rows.iter_mut().enumerate() {
            put(row, 7, mean(&sp.sa[i]));
            put(row, 8, variance(&sp.sa[i]));
            put(row, 9, mean(&sp.pr[i]));
            put(row, 10, variance(&sp.pr[i]));
        }
    }

    if set.any_of(&[11, 12, 13]) {
        for (i, row) in rows.iter_mut().enumerate() {
            if let Ok(d) = kinematics::dba_stats(seg, i) {
                put(row, 11, d.mean);
                put(row, 12, d.var);
                put(row, 13, d.odba);
            }
        }
    }

    if set.any_of(&[15, 16]) && seg.len() >= 4 {
        let max_lag = seg.len() / 4;
        for (i, row) in rows.iter_mut().enumerate() {
            let (m, v) = xcorr::lagged_stats(&speeds[i], &speeds[n], max_lag);
            put(row, 15, m);
            put(row, 16, v);
        }
    }

    let symbols: Vec<Vec<usize>> = paths
        .iter()
        .map(|p| info::symbolize(&turn_series(p), cfg.n_symbols))
        .collect();

    if set.any_of(&[21, 22, 23, 27, 29, 30, 31, 32, 33, 34, 35, 36]) && seg.len() >= 4 {
        let te = info::TeMatrix::from_symbols(&symbols);
        for (i, row) in rows.iter_mut().enumerate() {
            let s = info::transfer_entropy_suite(&te, i, n);
            put(row, 21, s.sync_mean);
            put(row, 22, s.sync_var);
            put(row, 23, s.net_vs_shepherd);
            put(row, 27, s.total_vs_shepherd);
            put(row, 29, s.internal_net);
            put(row, 30, s.external_net);
            put(row, 31, s.aggregate_influence);
            put(row, 32, s.net_source);
            put(row, 33, s.inflow_mean);
            put(row, 34, s.inflow_var);
            put(row, 35, s.outflow_mean);
            put(row, 36, s.outflow_var);
        }
    }

    if set.any_of(&[24, 25]) && n >= 2 {
        let table = series::DtwTable::new(&speeds[..n]);
        for (i, row) in rows.iter_mut().enumerate() {
            let (m, v) = table.stats(i);
            put(row, 24, m);
            put(row, 25, v);
        }
    }

    if set.any_of(&[26, 28, 41, 42]) && seg.len() >= 4 {
        for (i, row) in rows.iter_mut().enumerate() {
            let s = info::storage_entropy_suite(&symbols[i], &speeds[i]);
            put(row, 26, s.ais);
            put(row, 28, s.effort_to_compress);
            put(row, 41, s.spectral_entropy);
            put(row, 42, s.shannon_entropy);
        }
    }

    if set.any_of(&[37, 38, 39, 40]) {
        for (i, row) in rows.iter_mut().enumerate() {
            if seg.len() >= 8 {
                let (m, v) = series::lyapunov_stats(&speeds[i]);
                put(row, 37, m);
                put(row, 38, v);
            }
            if seg.len() >= 4 {
                let (m, v) = series::noise_to_signal_stats(&speeds[i]);
                put(row, 39, m);
                put(row, 40, v);
            }
        }
    }

    for row in rows.iter_mut() {
        for (idx, cell) in row.iter_mut().enumerate() {
            if !set.contains(MarkerId((idx + 1) as u8)) {
                *cell = None;
            }
        }
    }
    rows
}
