//! CART classification trees with Gini impurity.
//!
//! Columns are presorted once; each split partitions the sorted index
//! lists stably, so a level of the tree costs `O(rows * features)`.
//! Missing values (NaN) always go to the left child.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::windowing::Samples;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 12,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<usize>,
    },
}

/// A fitted tree. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub params: TreeParams,
    pub n_features: usize,
    pub n_classes: usize,
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn fit(data: &Samples, params: TreeParams) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InsufficientData("no training rows".into()));
        }
        if params.max_depth == 0 || params.min_leaf == 0 {
            return Err(Error::config("tree", "max_depth and min_leaf must be positive"));
        }
        let counts = data.class_counts();
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::DegenerateModel("training data has a single class".into()));
        }
        let mut builder = Builder::new(data, params);
        let sorted = builder.presort();
        builder.grow(sorted, 0);
        Ok(DecisionTree {
            params,
            n_features: data.n_features,
            n_classes: data.n_classes,
            nodes: builder.nodes,
        })
    }

    fn leaf(&self, row: &[f64]) -> &[usize] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] > *threshold { *right } else { *left };
                }
            }
        }
    }

    /// Majority class of the reached leaf; ties go to the lower class.
    pub fn predict(&self, row: &[f64]) -> usize {
        let counts = self.leaf(row);
        let mut best = 0;
        for (c, &n) in counts.iter().enumerate() {
            if n > counts[best] {
                best = c;
            }
        }
        best
    }

    pub fn predict_all(&self, data: &Samples) -> Vec<usize> {
        (0..data.len()).map(|i| self.predict(data.row(i))).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Features used by at least one split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }
}

struct Builder<'a> {
    columns: Vec<Vec<f64>>,
    y: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    nodes: Vec<Node>,
    goes_left: Vec<bool>,
}

struct Best {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<'a> Builder<'a> {
    fn new(data: &'a Samples, params: TreeParams) -> Self {
        let columns = (0..data.n_features)
            .map(|f| (0..data.len()).map(|i| data.value(i, f)).collect())
            .collect();
        Builder {
            columns,
            y: &data.y,
            n_classes: data.n_classes,
            params,
            nodes: Vec::new(),
            goes_left: vec![false; data.len()],
        }
    }

    /// Row indices per feature in ascending value order, NaN first.
    fn presort(&self) -> Vec<Vec<u32>> {
        self.columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| {
                    let (x, y) = (col[a as usize], col[b as usize]);
                    match (x.is_nan(), y.is_nan()) {
                        (true, true) => std::cmp::Ordering::Equal,
                        (true, false) => std::cmp::Ordering::Less,
                        (false, true) => std::cmp::Ordering::Greater,
                        (false, false) => x.total_cmp(&y),
                    }
                });
                idx
            })
            .collect()
    }

    fn counts(&self, rows: &[u32]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &r in rows {
            c[self.y[r as usize]] += 1;
        }
        c
    }

    fn grow(&mut self, sorted: Vec<Vec<u32>>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(&sorted[0]);
        self.nodes.push(Node::Leaf {
            counts: counts.clone(),
        });
        let n = sorted[0].len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || n < 2 * self.params.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(&sorted, &counts) else {
            return id;
        };

        let col = &self.columns[best.feature];
        for &r in &sorted[0] {
            self.goes_left[r as usize] = !(col[r as usize] > best.threshold);
        }
        let mut left = Vec::with_capacity(sorted.len());
        let mut right = Vec::with_capacity(sorted.len());
        for list in sorted {
            let (l, r): (Vec<u32>, Vec<u32>) =
                list.into_iter().partition(|&i| self.goes_left[i as usize]);
            left.push(l);
            right.push(r);
        }
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        id
    }

    /// Split minimising weighted child Gini impurity, first feature and
    /// lowest threshold winning ties. `None` if nothing reduces impurity.
    fn best_split(&self, sorted: &[Vec<u32>], counts: &[usize]) -> Option<Best> {
        let n = sorted[0].len();
        let total_sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
        let parent = n as f64 - total_sq / n as f64; // n * gini
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Best> = None;
        let mut left = vec![0usize; self.n_classes];
        for (f, list) in sorted.iter().enumerate() {
            let col = &self.columns[f];
            left.iter_mut().for_each(|c| *c = 0);
            let (mut left_sq, mut right_sq) = (0.0, total_sq);
            for (pos, &r) in list.iter().enumerate() {
                let c = self.y[r as usize];
                let (lc, rc) = (left[c] as f64, (counts[c] - left[c]) as f64);
                left_sq += 2.0 * lc + 1.0;
                right_sq -= 2.0 * rc - 1.0;
                left[c] += 1;

                let n_left = pos + 1;
                if n_left < min_leaf || n - n_left < min_leaf || n_left == n {
                    continue;
                }
                let x = col[r as usize];
                let next = col[list[pos + 1] as usize];
                if x.is_nan() || !(next > x) {
                    continue;
                }
                let (nl, nr) = (n_left as f64, (n - n_left) as f64);
                // n * weighted child gini
                let score = (nl - left_sq / nl) + (nr - right_sq / nr);
                if score < parent - 1e-12 && best.as_ref().map_or(true, |b| score < b.score - 1e-12) {
                    let mid = x + (next - x) / 2.0;
                    best = Some(Best {
                        feature: f,
                        // adjacent floats have no midpoint strictly between them
                        threshold: if mid < next { mid } else { x },
                        score,
                    });
                }
            }
        }
        best
    }
}
