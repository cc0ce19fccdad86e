//! Accuracy and cost across window plans.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::search::{SearchConfig, SearchStrategy};
use super::{train_tree, TreeParams};
use crate::error::Result;
use crate::experiment::PlanData;
use crate::windowing::{LabelKind, WindowPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub plan: WindowPlan,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    /// Mean marker time per window, seconds.
    pub mean_time: f64,
    /// Total marker time over all windows, seconds.
    pub total_time: f64,
    pub n_windows: usize,
    pub params: TreeParams,
    pub strategy: SearchStrategy,
}

impl SweepCell {
    /// `T / mu_t`, the cost of the plan in units of one window.
    pub fn proportional_time(&self) -> f64 {
        if self.mean_time > 0.0 {
            self.total_time / self.mean_time
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub target: LabelKind,
    pub cells: Vec<SweepCell>,
    /// Canonical plans without input; non-empty marks a partial result.
    pub missing: Vec<WindowPlan>,
}

impl SweepResult {
    pub fn cell(&self, size: usize, overlap: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.plan.size() == size && (c.plan.overlap() - overlap).abs() < 1e-12)
    }

    /// Cells by descending test accuracy; ties keep grid order.
    pub fn ranked(&self) -> Vec<&SweepCell> {
        let mut cells: Vec<&SweepCell> = self.cells.iter().collect();
        cells.sort_by(|a, b| b.test_accuracy.total_cmp(&a.test_accuracy));
        cells
    }

    pub fn is_partial(&self) -> bool {
        !self.missing.is_empty()
    }

    /// Accuracy grid: one row per window size, one column pair per overlap.
    pub fn write_accuracy_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "window")?;
        for a in WindowPlan::OVERLAPS {
            write!(w, ",val_{a},test_{a}")?;
        }
        writeln!(w)?;
        for size in WindowPlan::SIZES {
            write!(w, "{size}")?;
            for a in WindowPlan::OVERLAPS {
                match self.cell(size, a) {
                    Some(c) => write!(
                        w,
                        ",{:.1},{:.1}",
                        100.0 * c.validation_accuracy,
                        100.0 * c.test_accuracy
                    )?,
                    None => write!(w, ",,")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Timing grid: mean and total marker time per plan, plus the
    /// accuracy/proportional-time pairs used for cost plots.
    pub fn write_timing_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "window,overlap,mean_time_s,total_time_s,n_windows,proportional_time,test_accuracy"
        )?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{:.6e},{:.6e},{},{:.1},{:.1}",
                c.plan.size(),
                c.plan.overlap(),
                c.mean_time,
                c.total_time,
                c.n_windows,
                c.proportional_time(),
                100.0 * c.test_accuracy
            )?;
        }
        Ok(())
    }
}

/// Tunes and evaluates a tree for every plan.
pub fn sweep(inputs: &[PlanData], target: LabelKind, cfg: &SearchConfig) -> Result<SweepResult> {
    let mut cells = Vec::with_capacity(inputs.len());
    for input in inputs {
        let model = train_tree(&input.dataset, target, cfg)?;
        cells.push(SweepCell {
            plan: input.plan,
            validation_accuracy: model.cv_accuracy,
            test_accuracy: model.test_accuracy,
            mean_time: input.timing.per_window_secs,
            total_time: input.timing.total_secs,
            n_windows: input.n_windows,
            params: model.search.best,
            strategy: model.search.strategy,
        });
    }
    let missing = WindowPlan::canonical_grid()
        .into_iter()
        .filter(|p| !inputs.iter().any(|i| i.plan == *p))
        .collect();
    Ok(SweepResult {
        target,
        cells,
        missing,
    })
}
