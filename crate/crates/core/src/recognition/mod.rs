//! Decision-tree recognition of agent and swarm profiles.

pub mod ablation;
pub mod metrics;
pub mod search;
pub mod select;
pub mod sweep;
pub mod tree;

pub use ablation::{ablate_impute, ablate_retrain, standard_removals, AblationReport, RemovalSet};
pub use search::{cross_validate, tune, SearchConfig, SearchOutcome, SearchStrategy};
pub use select::{mi_rank, mi_select, MiRanking};
pub use sweep::{sweep, SweepCell, SweepResult};
pub use tree::{DecisionTree, TreeParams};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::markers::MarkerSet;
use crate::windowing::{LabelKind, LabeledDataset, Split};

/// A tuned tree with its validation and held-out scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub target: LabelKind,
    pub markers: MarkerSet,
    pub tree: DecisionTree,
    /// Mean cross-validated accuracy of the chosen hyperparameters.
    pub cv_accuracy: f64,
    pub test_accuracy: f64,
    pub search: SearchOutcome,
}

/// Tunes hyperparameters on the training split, refits on all of it and
/// scores the test split.
pub fn train_tree(data: &LabeledDataset, target: LabelKind, cfg: &SearchConfig) -> Result<TrainedModel> {
    let train = data.samples(target, Split::Train);
    let test = data.samples(target, Split::Test);
    let search = tune(&train, cfg)?;
    let tree = DecisionTree::fit(&train, search.best)?;
    let test_accuracy = metrics::accuracy(&tree.predict_all(&test), &test.y);
    Ok(TrainedModel {
        target,
        markers: data.markers.clone(),
        tree,
        cv_accuracy: search.cv_accuracy,
        test_accuracy,
        search,
    })
}

/// Markers of the minimal MI-ranked prefix reaching `coverage`, ranked on
/// the training split.
pub fn mi_select_markers(data: &LabeledDataset, target: LabelKind, coverage: f64) -> Result<MarkerSet> {
    let cols = mi_select(&data.samples(target, Split::Train), coverage)?;
    Ok(MarkerSet::from_ids(cols.into_iter().map(|c| data.markers.ids()[c])))
}

/// The markers left out of the `coverage` selection: the group carrying
/// the last few percent of unique information.
pub fn mi_bottom_markers(data: &LabeledDataset, target: LabelKind, coverage: f64) -> Result<MarkerSet> {
    let top = mi_select_markers(data, target, coverage)?;
    Ok(data.markers.without(&top))
}
