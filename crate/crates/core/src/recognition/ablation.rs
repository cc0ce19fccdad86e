//! Marker ablation: retraining without a marker group (E1) and imputing
//! a group with its mean under a fixed model (E2).

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, macro_f1};
use super::tree::{DecisionTree, TreeParams};
use crate::error::{Error, Result};
use crate::markers::{MarkerId, MarkerSet};
use crate::windowing::{LabelKind, LabeledDataset, Samples, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    /// Retrain without the group, report test accuracy.
    E1,
    /// Impute the group with training means, report macro F1.
    E2,
}

/// A named group of markers to remove.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalSet {
    pub name: String,
    pub markers: MarkerSet,
}

impl RemovalSet {
    pub fn new(name: impl Into<String>, markers: MarkerSet) -> Self {
        RemovalSet {
            name: name.into(),
            markers,
        }
    }

    pub fn single(m: MarkerId) -> Self {
        RemovalSet::new(format!("{{{m}}}"), MarkerSet::from_ids([m]))
    }
}

/// The markers of a shepherd-centric "centre of interest" group.
pub fn coi_set() -> MarkerSet {
    MarkerSet::from_ids([7, 8, 9, 10, 21, 22].map(MarkerId::m))
}

/// Every singleton of `markers`, then the MI-bottom group and the COI group.
pub fn standard_removals(markers: &MarkerSet, mi_bottom: &MarkerSet) -> Vec<RemovalSet> {
    let mut sets: Vec<RemovalSet> = markers.ids().iter().map(|&m| RemovalSet::single(m)).collect();
    sets.push(RemovalSet::new("MI-5%", mi_bottom.clone()));
    sets.push(RemovalSet::new("COI", coi_set()));
    sets
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub removed: MarkerSet,
    pub score: f64,
    /// `score - baseline`, in percentage points.
    pub delta_points: f64,
    /// `(score - baseline) / baseline`, in percent.
    pub percent_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub protocol: Protocol,
    pub baseline: f64,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    fn new(protocol: Protocol, baseline: f64, scored: Vec<(RemovalSet, f64)>) -> Self {
        let rows = scored
            .into_iter()
            .map(|(set, score)| AblationRow {
                name: set.name,
                removed: set.markers,
                score,
                delta_points: 100.0 * (score - baseline),
                percent_change: if baseline > 0.0 {
                    100.0 * (score - baseline) / baseline
                } else {
                    0.0
                },
            })
            .collect();
        AblationReport {
            protocol,
            baseline,
            rows,
        }
    }

    pub fn row(&self, name: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// CSV with the baseline first, scores as percentages.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let metric = match self.protocol {
            Protocol::E1 => "accuracy",
            Protocol::E2 => "macro_f1",
        };
        writeln!(w, "removed,{metric},delta_points,percent_change")?;
        writeln!(w, "baseline,{:.1},0.0,0.0", 100.0 * self.baseline)?;
        for r in &self.rows {
            writeln!(
                w,
                "\"{}\",{:.1},{:.1},{:.1}",
                r.name,
                100.0 * r.score,
                r.delta_points,
                r.percent_change
            )?;
        }
        Ok(())
    }
}

fn columns_without(markers: &MarkerSet, removed: &MarkerSet) -> Vec<usize> {
    (0..markers.len())
        .filter(|&c| !removed.contains(markers.ids()[c]))
        .collect()
}

/// E1: retrains with fixed hyperparameters on every reduced marker set and
/// reports held-out accuracy against the full-set baseline.
pub fn ablate_retrain(
    data: &LabeledDataset,
    kind: LabelKind,
    params: TreeParams,
    sets: &[RemovalSet],
) -> Result<AblationReport> {
    let train = data.samples(kind, Split::Train);
    let test = data.samples(kind, Split::Test);
    let score = |cols: &[usize]| -> Result<f64> {
        if cols.is_empty() {
            return Err(Error::config("ablation", "removal leaves no markers"));
        }
        let tree = DecisionTree::fit(&train.select_features(cols), params)?;
        let held = test.select_features(cols);
        Ok(accuracy(&tree.predict_all(&held), &held.y))
    };
    let all: Vec<usize> = (0..data.n_features()).collect();
    let baseline = score(&all)?;
    let scored = sets
        .par_iter()
        .map(|s| Ok((s.clone(), score(&columns_without(&data.markers, &s.markers))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationReport::new(Protocol::E1, baseline, scored))
}

/// Training-split mean of every column, ignoring missing values.
pub fn column_means(train: &Samples) -> Vec<f64> {
    (0..train.n_features)
        .map(|f| {
            let (sum, n) = (0..train.len())
                .map(|i| train.value(i, f))
                .filter(|v| !v.is_nan())
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            if n == 0 {
                f64::NAN
            } else {
                sum / n as f64
            }
        })
        .collect()
}

/// Copy of `data` with the given columns replaced by `means`.
pub fn impute(data: &Samples, cols: &[usize], means: &[f64]) -> Samples {
    let mut out = data.clone();
    for i in 0..out.len() {
        for &c in cols {
            out.x[i * out.n_features + c] = means[c];
        }
    }
    out
}

/// E2: keeps `model` (trained on the full set) fixed, imputes each group
/// with its training mean in the test split and reports macro F1.
pub fn ablate_impute(
    model: &DecisionTree,
    data: &LabeledDataset,
    kind: LabelKind,
    sets: &[RemovalSet],
) -> Result<AblationReport> {
    if model.n_features != data.n_features() {
        return Err(Error::Schema(format!(
            "model expects {} features, dataset has {}",
            model.n_features,
            data.n_features()
        )));
    }
    let means = column_means(&data.samples(kind, Split::Train));
    let test = data.samples(kind, Split::Test);
    let f1 = |held: &Samples| macro_f1(&model.predict_all(held), &held.y, held.n_classes);
    let baseline = f1(&test);
    let scored = sets
        .par_iter()
        .map(|s| {
            let cols: Vec<usize> = s
                .markers
                .ids()
                .iter()
                .filter_map(|&m| data.markers.position(m))
                .collect();
            (s.clone(), f1(&impute(&test, &cols, &means)))
        })
        .collect();
    Ok(AblationReport::new(Protocol::E2, baseline, scored))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{ProfileLabel, ScenarioId};
    use crate::windowing::{build_labeled_dataset, MarkerMatrix, WindowPlan};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Homogeneous scenarios whose M1 separates the swarms, M2 is noise and
    /// M3 is constant.
    fn dataset() -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let set = MarkerSet::from_ids([1, 2, 3].map(MarkerId::m));
        let mut ms = Vec::new();
        for (k, &s) in [ScenarioId::S5, ScenarioId::S6, ScenarioId::S7].iter().enumerate() {
            let label = ProfileLabel::ALL[(k + 6) % 7];
            for seed in 0..4 {
                let values = (0..25)
                    .map(|_| {
                        (0..5)
                            .map(|_| vec![k as f64 + rng.gen::<f64>() * 0.8, rng.gen(), 1.0])
                            .collect()
                    })
                    .collect();
                ms.push(
                    MarkerMatrix::from_values(
                        s,
                        seed,
                        WindowPlan::new(20, 0.5).unwrap(),
                        set.clone(),
                        vec![label; 5],
                        values,
                    )
                    .unwrap(),
                );
            }
        }
        build_labeled_dataset(&ms, 1).unwrap()
    }

    #[test]
    fn e1_uninformative_removal_is_harmless() {
        let d = dataset();
        let sets = vec![
            RemovalSet::single(MarkerId::m(3)),
            RemovalSet::single(MarkerId::m(1)),
        ];
        let r = ablate_retrain(&d, LabelKind::Swarm11, TreeParams { max_depth: 4, min_leaf: 5 }, &sets)
            .unwrap();
        assert_eq!(r.baseline, 1.0);
        assert_eq!(r.row("{M3}").unwrap().delta_points, 0.0);
        assert!(r.row("{M1}").unwrap().delta_points < -30.0);
    }

    #[test]
    fn e2_empty_and_unused_groups_keep_baseline() {
        let d = dataset();
        let train = d.samples(LabelKind::Swarm11, Split::Train);
        let model = DecisionTree::fit(&train, TreeParams { max_depth: 4, min_leaf: 5 }).unwrap();
        assert_eq!(model.used_features(), vec![0]);
        let sets = vec![
            RemovalSet::new("none", MarkerSet::from_ids([])),
            RemovalSet::single(MarkerId::m(2)),
            RemovalSet::single(MarkerId::m(1)),
        ];
        let r = ablate_impute(&model, &d, LabelKind::Swarm11, &sets).unwrap();
        assert_eq!(r.row("none").unwrap().score, r.baseline);
        assert_eq!(r.row("{M2}").unwrap().score, r.baseline);
        assert!(r.row("{M1}").unwrap().percent_change < -50.0);
    }

    #[test]
    fn report_csv() {
        let report = AblationReport::new(
            Protocol::E1,
            0.8,
            vec![(RemovalSet::single(MarkerId::m(4)), 0.6)],
        );
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "removed,accuracy,delta_points,percent_change\nbaseline,80.0,0.0,0.0\n\"{M4}\",60.0,-20.0,-25.0\n"
        );
    }

    #[test]
    fn standard_groups() {
        let sets = standard_removals(&MarkerSet::core23(), &MarkerSet::from_ids([MarkerId::m(2)]));
        assert_eq!(sets.len(), 25);
        assert_eq!(sets[24].markers.len(), 6);
    }
}
