//! Sliding windows, marker matrices and labelled datasets.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markers::{compute_window, MarkerConfig, MarkerSet, Segment};
use crate::sim::{ProfileLabel, ScenarioId, Trajectory};

/// Fraction of window groups assigned to the training split.
pub const TRAIN_FRACTION: f64 = 0.8;

/// Window size and overlap fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    size: usize,
    overlap: f64,
}

impl WindowPlan {
    pub const SIZES: [usize; 5] = [20, 40, 60, 80, 100];
    pub const OVERLAPS: [f64; 3] = [0.75, 0.5, 0.25];

    pub fn new(size: usize, overlap: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::config("window", "size must be at least 2 ticks"));
        }
        if !(overlap > 0.0 && overlap < 1.0) {
            return Err(Error::config("overlap", format!("{overlap} is not in (0, 1)")));
        }
        let plan = WindowPlan { size, overlap };
        if plan.stride() < 1 {
            return Err(Error::config("overlap", "stride rounds to zero"));
        }
        Ok(plan)
    }

    /// The 15 plans of the canonical grid, size-major.
    pub fn canonical_grid() -> Vec<WindowPlan> {
        Self::SIZES
            .iter()
            .flat_map(|&w| Self::OVERLAPS.iter().map(move |&a| WindowPlan { size: w, overlap: a }))
            .collect()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    /// `w (1 - overlap)` rounded half up.
    pub fn stride(&self) -> usize {
        (self.size as f64 * (1.0 - self.overlap) + 0.5).floor() as usize
    }

    /// Window ranges over a series of `ticks` frames.
    pub fn windows(&self, ticks: usize) -> Result<Vec<Range<usize>>> {
        make_windows(ticks, self)
    }
}

impl fmt::Display for WindowPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}-a{}", self.size, self.overlap)
    }
}

/// `[s j, s j + w)` for `j = 0..=(T - w) / s`.
pub fn make_windows(ticks: usize, plan: &WindowPlan) -> Result<Vec<Range<usize>>> {
    if ticks < plan.size {
        return Err(Error::Window(format!(
            "trajectory has {ticks} ticks, window needs {}",
            plan.size
        )));
    }
    let s = plan.stride();
    Ok((0..=(ticks - plan.size) / s)
        .map(|j| s * j..s * j + plan.size)
        .collect())
}

/// Wall-clock cost of assembling a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MatrixTiming {
    /// Mean marker computation time per window, seconds.
    pub per_window_secs: f64,
    /// Summed per-window computation time, seconds.
    pub total_secs: f64,
}

impl MatrixTiming {
    /// Pooled timing of several matrices, with their total window count.
    pub fn pooled(matrices: &[MarkerMatrix]) -> (MatrixTiming, usize) {
        let windows: usize = matrices.iter().map(|m| m.n_windows()).sum();
        let total: f64 = matrices.iter().map(|m| m.timing.total_secs).sum();
        let per_window = if windows > 0 { total / windows as f64 } else { 0.0 };
        (
            MatrixTiming {
                per_window_secs: per_window,
                total_secs: total,
            },
            windows,
        )
    }
}

/// Markers of every sheep in every window of one run. Masked cells are NaN.
#[derive(Debug, Clone)]
pub struct MarkerMatrix {
    pub scenario: ScenarioId,
    pub seed: u64,
    pub plan: WindowPlan,
    pub markers: MarkerSet,
    pub agent_labels: Vec<ProfileLabel>,
    pub timing: MatrixTiming,
    n_windows: usize,
    values: Vec<f64>,
}

impl MarkerMatrix {
    /// Builds a matrix from `[window][agent][marker]` values.
    pub fn from_values(
        scenario: ScenarioId,
        seed: u64,
        plan: WindowPlan,
        markers: MarkerSet,
        agent_labels: Vec<ProfileLabel>,
        values: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n_agents = agent_labels.len();
        let width = markers.len();
        let n_windows = values.len();
        let mut flat = Vec::with_capacity(n_windows * n_agents * width);
        for (w, window) in values.into_iter().enumerate() {
            if window.len() != n_agents {
                return Err(Error::Schema(format!("window {w} has {} agents", window.len())));
            }
            for row in window {
                if row.len() != width {
                    return Err(Error::Schema(format!("window {w} row has {} markers", row.len())));
                }
                flat.extend(row.into_iter().map(|v| if v.is_finite() { v } else { f64::NAN }));
            }
        }
        Ok(MarkerMatrix {
            scenario,
            seed,
            plan,
            markers,
            agent_labels,
            timing: MatrixTiming::default(),
            n_windows,
            values: flat,
        })
    }

    pub fn n_windows(&self) -> usize {
        self.n_windows
    }

    pub fn n_agents(&self) -> usize {
        self.agent_labels.len()
    }

    pub fn n_markers(&self) -> usize {
        self.markers.len()
    }

    /// Marker values of one agent in one window, in `markers` order.
    pub fn row(&self, window: usize, agent: usize) -> &[f64] {
        let width = self.n_markers();
        let start = (window * self.n_agents() + agent) * width;
        &self.values[start..start + width]
    }

    fn row_mut(&mut self, window: usize, agent: usize) -> &mut [f64] {
        let width = self.n_markers();
        let start = (window * self.n_agents() + agent) * width;
        &mut self.values[start..start + width]
    }

    /// `None` when masked.
    pub fn get(&self, window: usize, agent: usize, col: usize) -> Option<f64> {
        let v = self.row(window, agent)[col];
        (!v.is_nan()).then_some(v)
    }

    /// Column `col` of window `window`, one value per agent.
    pub fn column(&self, window: usize, col: usize) -> Vec<f64> {
        (0..self.n_agents()).map(|a| self.row(window, a)[col]).collect()
    }

    /// Writes the feature CSV, one row per `(window, agent)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "{FEATURE_HEADER_PREFIX}")?;
        for m in self.markers.ids() {
            write!(w, ",{m}")?;
        }
        writeln!(w)?;
        let swarm = SwarmKind::of(self.scenario);
        for win in 0..self.n_windows {
            for (a, label) in self.agent_labels.iter().enumerate() {
                write!(w, "{},{},{win},{a},{label},{swarm}", self.scenario, self.seed)?;
                for &v in self.row(win, a) {
                    if v.is_nan() {
                        write!(w, ",")?;
                    } else {
                        write!(w, ",{v}")?;
                    }
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

pub const FEATURE_HEADER_PREFIX: &str = "scenario,seed,window_index,agent_id,agent_label,swarm_label";

/// Evaluates `markers` over every window of `traj`; windows run in
/// parallel and each is timed on its own.
pub fn compute_marker_matrix(
    traj: &Trajectory,
    plan: &WindowPlan,
    markers: &MarkerSet,
    cfg: &MarkerConfig,
) -> Result<MarkerMatrix> {
    let ranges = plan.windows(traj.len())?;
    let n_sheep = traj.n_sheep();
    let ids = markers.ids();
    let results: Vec<Result<(Vec<Vec<f64>>, f64)>> = ranges
        .par_iter()
        .map(|r| {
            let started = Instant::now();
            let seg = Segment::new(&traj.positions[r.clone()], n_sheep, traj.dt)?;
            let rows = compute_window(&seg, cfg, markers);
            let secs = started.elapsed().as_secs_f64();
            let rows = rows
                .iter()
                .map(|row| ids.iter().map(|m| row[m.index()].unwrap_or(f64::NAN)).collect())
                .collect();
            Ok((rows, secs))
        })
        .collect();
    let mut values = Vec::with_capacity(results.len());
    let mut total = 0.0;
    for r in results {
        let (rows, secs) = r?;
        values.push(rows);
        total += secs;
    }
    let n = values.len();
    let mut matrix = MarkerMatrix::from_values(
        traj.scenario_id,
        traj.seed,
        *plan,
        markers.clone(),
        traj.profile_labels.clone(),
        values,
    )?;
    matrix.timing = MatrixTiming {
        per_window_secs: total / n as f64,
        total_secs: total,
    };
    Ok(matrix)
}

/// In-place population z-score of the finite entries of `column`. Returns
/// false, zeroing the finite entries, when fewer than two are present or
/// their variance is zero.
pub fn zscore(column: &mut [f64]) -> bool {
    let finite: Vec<f64> = column.iter().copied().filter(|v| v.is_finite()).collect();
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let ok = finite.len() >= 2 && var > 0.0;
    let sd = var.sqrt();
    for v in column.iter_mut().filter(|v| v.is_finite()) {
        *v = if ok { (*v - mean) / sd } else { 0.0 };
    }
    ok
}

/// Per-window z-scored copy of a matrix plus the `(window, column)` cells
/// that were constant and therefore zeroed.
pub fn zscore_normalize(matrix: &MarkerMatrix) -> (MarkerMatrix, Vec<(usize, usize)>) {
    let mut out = matrix.clone();
    let mut flagged = Vec::new();
    for w in 0..matrix.n_windows() {
        for c in 0..matrix.n_markers() {
            let mut col = matrix.column(w, c);
            if !zscore(&mut col) {
                flagged.push((w, c));
            }
            for (a, v) in col.into_iter().enumerate() {
                out.row_mut(w, a)[c] = v;
            }
        }
    }
    (out, flagged)
}

/// Homogeneous or heterogeneous swarm composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SwarmKind {
    Homogeneous,
    Heterogeneous,
}

impl SwarmKind {
    pub fn of(scenario: ScenarioId) -> Self {
        if scenario.is_homogeneous() {
            SwarmKind::Homogeneous
        } else {
            SwarmKind::Heterogeneous
        }
    }
}

impl fmt::Display for SwarmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwarmKind::Homogeneous => "homogeneous",
            SwarmKind::Heterogeneous => "heterogeneous",
        })
    }
}

/// Classification target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelKind {
    /// Profile of the individual sheep, 7 classes.
    Agent,
    /// Scenario the sheep belongs to, 11 classes.
    Swarm11,
    /// Homogeneous versus heterogeneous swarm.
    Swarm2,
}

impl LabelKind {
    pub fn n_classes(self) -> usize {
        match self {
            LabelKind::Agent => ProfileLabel::ALL.len(),
            LabelKind::Swarm11 => ScenarioId::ALL.len(),
            LabelKind::Swarm2 => 2,
        }
    }

    pub fn class_names(self) -> Vec<String> {
        match self {
            LabelKind::Agent => ProfileLabel::ALL.iter().map(|l| l.to_string()).collect(),
            LabelKind::Swarm11 => ScenarioId::ALL.iter().map(|s| s.to_string()).collect(),
            LabelKind::Swarm2 => vec!["homogeneous".into(), "heterogeneous".into()],
        }
    }
}

impl FromStr for LabelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agent" => Ok(LabelKind::Agent),
            "swarm11" => Ok(LabelKind::Swarm11),
            "swarm2" => Ok(LabelKind::Swarm2),
            _ => Err(Error::config("train", format!("unknown target `{s}`"))),
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelKind::Agent => "agent",
            LabelKind::Swarm11 => "swarm11",
            LabelKind::Swarm2 => "swarm2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

/// Where a dataset row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMeta {
    pub scenario: ScenarioId,
    pub seed: u64,
    pub window: usize,
    pub agent: usize,
    pub agent_label: ProfileLabel,
}

impl RowMeta {
    pub fn label(&self, kind: LabelKind) -> usize {
        match kind {
            LabelKind::Agent => self.agent_label.index(),
            LabelKind::Swarm11 => self.scenario.index(),
            LabelKind::Swarm2 => SwarmKind::of(self.scenario) as usize,
        }
    }
}

/// A feature table with class labels for model training.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    /// Row-major, `n_features` values per row; NaN marks a missing value.
    pub x: Vec<f64>,
    pub n_features: usize,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl Samples {
    pub fn new(x: Vec<f64>, n_features: usize, y: Vec<usize>, n_classes: usize) -> Result<Self> {
        if n_features == 0 || x.len() != y.len() * n_features {
            return Err(Error::Schema(format!(
                "{} values do not form {} rows of {n_features} features",
                x.len(),
                y.len()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Schema(format!("label {bad} out of range for {n_classes} classes")));
        }
        Ok(Samples {
            x,
            n_features,
            y,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, f: usize) -> f64 {
        self.x[i * self.n_features + f]
    }

    pub fn subset(&self, rows: &[usize]) -> Samples {
        Samples {
            x: rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            n_features: self.n_features,
            y: rows.iter().map(|&i| self.y[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Keeps only the given feature columns, in the given order.
    pub fn select_features(&self, cols: &[usize]) -> Samples {
        Samples {
            x: (0..self.len())
                .flat_map(|i| cols.iter().map(move |&c| self.value(i, c)))
                .collect(),
            n_features: cols.len(),
            y: self.y.clone(),
            n_classes: self.n_classes,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }
}

/// Shuffled, split rows of many marker matrices.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub markers: MarkerSet,
    features: Vec<f64>,
    meta: Vec<RowMeta>,
    split: Vec<Split>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.markers.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_features();
        &self.features[i * w..(i + 1) * w]
    }

    pub fn meta(&self, i: usize) -> &RowMeta {
        &self.meta[i]
    }

    pub fn split(&self, i: usize) -> Split {
        self.split[i]
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == split).collect()
    }

    /// Rows of one split as a training table for `kind`.
    pub fn samples(&self, kind: LabelKind, split: Split) -> Samples {
        let rows = self.indices(split);
        Samples {
            x: rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            n_features: self.n_features(),
            y: rows.iter().map(|&i| self.meta[i].label(kind)).collect(),
            n_classes: kind.n_classes(),
        }
    }

    /// Restricts the columns to `markers`, which must be a subset.
    pub fn select(&self, markers: &MarkerSet) -> Result<LabeledDataset> {
        let cols = markers
            .ids()
            .iter()
            .map(|&m| {
                self.markers
                    .position(m)
                    .ok_or_else(|| Error::Schema(format!("dataset has no column {m}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let features = (0..self.len())
            .flat_map(|i| cols.iter().map(move |&c| self.row(i)[c]))
            .collect();
        Ok(LabeledDataset {
            markers: markers.clone(),
            features,
            meta: self.meta.clone(),
            split: self.split.clone(),
        })
    }
}

/// Flattens matrices into one dataset.
///
/// Rows whose markers are all masked are dropped. Whole windows (every
/// sheep of one `(scenario, seed, window)`) go to the same split so that no
/// window contributes to both; within each scenario the windows are shuffled
/// and 80% (rounded half up) go to training, which keeps every agent type
/// represented in proportion on both sides. Finally the rows are shuffled.
pub fn build_labeled_dataset(matrices: &[MarkerMatrix], shuffle_seed: u64) -> Result<LabeledDataset> {
    let markers = match matrices.first() {
        Some(m) => m.markers.clone(),
        None => return Err(Error::InsufficientData("no marker matrices".into())),
    };
    if let Some(bad) = matrices.iter().find(|m| m.markers != markers) {
        return Err(Error::Schema(format!(
            "marker sets differ: {} vs {}",
            markers, bad.markers
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);

    // (matrix, window) groups per scenario
    let mut groups: BTreeMap<ScenarioId, Vec<(usize, usize)>> = BTreeMap::new();
    for (mi, m) in matrices.iter().enumerate() {
        for w in 0..m.n_windows() {
            groups.entry(m.scenario).or_default().push((mi, w));
        }
    }
    let mut rows: Vec<(usize, usize, usize, Split)> = Vec::new();
    for list in groups.values_mut() {
        list.shuffle(&mut rng);
        let n_train = (list.len() as f64 * TRAIN_FRACTION + 0.5).floor() as usize;
        for (g, &(mi, w)) in list.iter().enumerate() {
            let split = if g < n_train { Split::Train } else { Split::Test };
            let m = &matrices[mi];
            for a in 0..m.n_agents() {
                if m.row(w, a).iter().any(|v| !v.is_nan()) {
                    rows.push((mi, w, a, split));
                }
            }
        }
    }
    rows.shuffle(&mut rng);

    let mut features = Vec::with_capacity(rows.len() * markers.len());
    let mut meta = Vec::with_capacity(rows.len());
    let mut split = Vec::with_capacity(rows.len());
    for (mi, w, a, s) in rows {
        let m = &matrices[mi];
        features.extend_from_slice(m.row(w, a));
        meta.push(RowMeta {
            scenario: m.scenario,
            seed: m.seed,
            window: w,
            agent: a,
            agent_label: m.agent_labels[a],
        });
        split.push(s);
    }
    Ok(LabeledDataset {
        markers,
        features,
        meta,
        split,
    })
}
