//! Batch helpers: many runs, many matrices, one dataset.

use rayon::prelude::*;

use crate::error::Result;
use crate::markers::{MarkerConfig, MarkerSet};
use crate::sim::{run_scenario, ScenarioId, ScenarioSpec, Trajectory};
use crate::windowing::{
    build_labeled_dataset, compute_marker_matrix, LabeledDataset, MarkerMatrix, MatrixTiming, WindowPlan,
};

/// Canonical runs of every `(scenario, seed)` pair, scenario-major.
pub fn simulate_all(scenarios: &[ScenarioId], seeds: &[u64]) -> Result<Vec<Trajectory>> {
    let jobs: Vec<(ScenarioId, u64)> = scenarios
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    jobs.par_iter()
        .map(|&(s, seed)| run_scenario(&ScenarioSpec::canonical(s), seed))
        .collect()
}

/// Marker matrices of every run under one plan, in run order.
pub fn marker_matrices(
    runs: &[Trajectory],
    plan: &WindowPlan,
    markers: &MarkerSet,
    cfg: &MarkerConfig,
) -> Result<Vec<MarkerMatrix>> {
    runs.iter()
        .map(|t| compute_marker_matrix(t, plan, markers, cfg))
        .collect()
}

/// A labelled dataset under one plan with the pooled marker timing.
#[derive(Debug, Clone)]
pub struct PlanData {
    pub plan: WindowPlan,
    pub dataset: LabeledDataset,
    pub timing: MatrixTiming,
    pub n_windows: usize,
}

pub fn plan_dataset(
    runs: &[Trajectory],
    plan: &WindowPlan,
    markers: &MarkerSet,
    shuffle_seed: u64,
) -> Result<PlanData> {
    let matrices = marker_matrices(runs, plan, markers, &MarkerConfig::default())?;
    let (timing, n_windows) = MatrixTiming::pooled(&matrices);
    Ok(PlanData {
        plan: *plan,
        dataset: build_labeled_dataset(&matrices, shuffle_seed)?,
        timing,
        n_windows,
    })
}
