//! Single CART tree: Gini split search, recursive growth, and routing.
//!
//! Trees are grown on complete (NaN-free) column-major data. Split search is
//! exhaustive over candidate features and midpoints between consecutive
//! distinct sorted values; ties are broken toward the lower feature index and
//! lower threshold so growth is fully deterministic given the RNG that draws
//! the candidate set.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::Label;
use crate::matrix::FeatureMatrix;

use super::ForestParams;

/// Gini impurity of a two-class node: `1 − Σ (n_c/n)²`, in `[0, 0.5]`.
pub fn gini_impurity(class_counts: [usize; 2]) -> Result<f64> {
    let n = class_counts[0] + class_counts[1];
    if n == 0 {
        return Err(Error::InvalidInput(
            "impurity of an empty node is undefined".into(),
        ));
    }
    let n = n as f64;
    let p0 = class_counts[0] as f64 / n;
    let p1 = class_counts[1] as f64 / n;
    Ok(1.0 - (p0 * p0 + p1 * p1))
}

/// A chosen split: route a sample left when `value <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Impurity decrease within the node:
    /// `I(parent) − (n_L·I(left) + n_R·I(right)) / n`.
    pub decrease: f64,
}

/// Exhaustive best split over the candidate features.
///
/// Candidates are scanned in the given order, which callers keep ascending so
/// the tie rule (lower feature index, then lower threshold) is meaningful.
/// Returns `None` when no candidate threshold strictly decreases impurity —
/// including pure nodes and nodes whose candidate values are all identical.
pub fn best_split(
    x: &FeatureMatrix,
    y: &[Label],
    samples: &[u32],
    candidates: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    let mut parent_counts = [0usize; 2];
    for &i in samples {
        parent_counts[y[i as usize].index()] += 1;
    }
    if parent_counts[0] == 0 || parent_counts[1] == 0 {
        return None;
    }
    let parent_impurity = gini_impurity(parent_counts).expect("nonempty node");
    let mut best: Option<SplitChoice> = None;
    let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &feature in candidates {
        let column = x.column(feature);
        pairs.clear();
        pairs.extend(
            samples
                .iter()
                .map(|&i| (column[i as usize], y[i as usize].index() as u8)),
        );
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0usize; 2];
        for boundary in 1..n {
            left[pairs[boundary - 1].1 as usize] += 1;
            let (low, high) = (pairs[boundary - 1].0, pairs[boundary].0);
            if low == high {
                continue;
            }
            if boundary < min_samples_leaf || n - boundary < min_samples_leaf {
                continue;
            }
            let threshold = low + (high - low) / 2.0;
            if threshold >= high {
                // Adjacent representable values: the midpoint rounded onto the
                // right value would leak it into the left child. Treat the
                // pair as indistinguishable.
                continue;
            }
            let right = [parent_counts[0] - left[0], parent_counts[1] - left[1]];
            let i_left = gini_impurity(left).expect("left child nonempty");
            let i_right = gini_impurity(right).expect("right child nonempty");
            let weighted = (boundary as f64 * i_left + (n - boundary) as f64 * i_right) / n as f64;
            let decrease = parent_impurity - weighted;
            if decrease > 0.0 && best.map_or(true, |b| decrease > b.decrease) {
                best = Some(SplitChoice {
                    feature,
                    threshold,
                    decrease,
                });
            }
        }
    }
    best
}

/// One tree node in the flat array representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Internal {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Training samples per class that reached this leaf.
        counts: [u32; 2],
    },
}

/// A grown decision tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Leaf class counts for one feature row.
    pub fn leaf_counts(&self, row: &[f64]) -> [u32; 2] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return *counts,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// Majority vote of one tree; a tied leaf votes low.
    pub fn vote(&self, row: &[f64]) -> Label {
        let counts = self.leaf_counts(row);
        if counts[1] > counts[0] {
            Label::High
        } else {
            Label::Low
        }
    }

    /// Number of internal (splitting) nodes.
    pub fn n_splits(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Internal { .. }))
            .count()
    }

    /// Distinct feature indices the tree splits on.
    pub fn features_used(&self) -> alloc::collections::BTreeSet<u32> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Internal { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    /// Depth of the tree (a lone leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Grow one CART tree on the in-bag samples.
///
/// Candidate features (`mtry` of them, without replacement) are drawn from
/// `rng` at every splittable node, in depth-first left-first build order, so
/// the tree is a deterministic function of (data, in-bag set, params, RNG
/// state).
pub fn grow_tree(
    x: &FeatureMatrix,
    y: &[Label],
    in_bag: &[u32],
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let mtry = params.resolved_mtry(x.n_cols());
    let mut nodes = Vec::new();
    build_node(x, y, in_bag, params, mtry, rng, 0, &mut nodes);
    DecisionTree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn build_node(
    x: &FeatureMatrix,
    y: &[Label],
    samples: &[u32],
    params: &ForestParams,
    mtry: usize,
    rng: &mut ChaCha8Rng,
    depth: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let mut counts = [0u32; 2];
    for &i in samples {
        counts[y[i as usize].index()] += 1;
    }
    let splittable = counts[0] > 0
        && counts[1] > 0
        && samples.len() >= 2 * params.min_samples_leaf.max(1)
        && params.max_depth.map_or(true, |limit| depth < limit);
    if !splittable {
        let id = nodes.len() as u32;
        nodes.push(Node::Leaf { counts });
        return id;
    }
    let mut candidates = rand::seq::index::sample(rng, x.n_cols(), mtry).into_vec();
    candidates.sort_unstable();
    let Some(split) = best_split(x, y, samples, &candidates, params.min_samples_leaf.max(1))
    else {
        let id = nodes.len() as u32;
        nodes.push(Node::Leaf { counts });
        return id;
    };
    let column = x.column(split.feature);
    let (left_samples, right_samples): (Vec<u32>, Vec<u32>) = samples
        .iter()
        .partition(|&&i| column[i as usize] <= split.threshold);
    debug_assert!(!left_samples.is_empty() && !right_samples.is_empty());
    let id = nodes.len() as u32;
    nodes.push(Node::Internal {
        feature: split.feature as u32,
        threshold: split.threshold,
        left: 0,
        right: 0,
    });
    let left = build_node(x, y, &left_samples, params, mtry, rng, depth + 1, nodes);
    let right = build_node(x, y, &right_samples, params, mtry, rng, depth + 1, nodes);
    if let Node::Internal {
        left: l, right: r, ..
    } = &mut nodes[id as usize]
    {
        *l = left;
        *r = right;
    }
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::CellId;
    use crate::rng::stream_rng;
    use alloc::vec;

    fn matrix(columns: Vec<Vec<f64>>) -> FeatureMatrix {
        let n = columns[0].len();
        let ids = (0..n as u64).map(CellId).collect();
        let names = (0..columns.len()).map(|j| alloc::format!("f{j}")).collect();
        FeatureMatrix::new(ids, names, columns).unwrap()
    }

    fn labels(bits: &[u8]) -> Vec<Label> {
        bits.iter()
            .map(|&b| if b == 1 { Label::High } else { Label::Low })
            .collect()
    }

    fn all(n: usize) -> Vec<u32> {
        (0..n as u32).collect()
    }

    #[test]
    fn gini_oracle_values() {
        assert_eq!(gini_impurity([10, 10]).unwrap(), 0.5);
        assert_eq!(gini_impurity([7, 0]).unwrap(), 0.0);
        assert_eq!(gini_impurity([3, 1]).unwrap(), 0.375);
        assert!(gini_impurity([0, 0]).is_err());
    }

    #[test]
    fn best_split_separable_oracle() {
        let x = matrix(vec![vec![1.0, 2.0, 9.0, 10.0]]);
        let y = labels(&[0, 0, 1, 1]);
        let split = best_split(&x, &y, &all(4), &[0], 1).unwrap();
        assert_eq!(split.feature, 0);
        assert_eq!(split.threshold, 5.5);
        assert_eq!(split.decrease, 0.5);
    }

    #[test]
    fn pure_node_has_no_split() {
        let x = matrix(vec![vec![1.0, 2.0, 3.0]]);
        assert_eq!(best_split(&x, &labels(&[1, 1, 1]), &all(3), &[0], 1), None);
    }

    #[test]
    fn identical_values_have_no_split() {
        let x = matrix(vec![vec![4.0, 4.0]]);
        assert_eq!(best_split(&x, &labels(&[0, 1]), &all(2), &[0], 1), None);
    }

    #[test]
    fn ties_resolve_to_the_lower_feature() {
        // Two identical perfectly-separating columns.
        let col = vec![0.0, 0.0, 1.0, 1.0];
        let x = matrix(vec![col.clone(), col]);
        let y = labels(&[0, 0, 1, 1]);
        let split = best_split(&x, &y, &all(4), &[0, 1], 1).unwrap();
        assert_eq!(split.feature, 0);
    }

    #[test]
    fn min_samples_leaf_restricts_boundaries() {
        // Splitting off the lone 0-label would need a left leaf of size 1.
        let x = matrix(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let y = labels(&[0, 1, 1, 1]);
        let unrestricted = best_split(&x, &y, &all(4), &[0], 1).unwrap();
        assert_eq!(unrestricted.threshold, 1.5);
        let restricted = best_split(&x, &y, &all(4), &[0], 2).unwrap();
        assert_eq!(restricted.threshold, 2.5);
    }

    /// Independent enumeration: partition by scanning every sample for every
    /// (feature, midpoint) pair.
    fn brute_force(
        x: &FeatureMatrix,
        y: &[Label],
        samples: &[u32],
        candidates: &[usize],
        min_leaf: usize,
    ) -> Option<SplitChoice> {
        let n = samples.len();
        let mut counts = [0usize; 2];
        for &i in samples {
            counts[y[i as usize].index()] += 1;
        }
        if n < 2 || counts[0] == 0 || counts[1] == 0 {
            return None;
        }
        let parent = gini_impurity(counts).unwrap();
        let mut best: Option<SplitChoice> = None;
        for &f in candidates {
            let mut values: Vec<f64> = samples.iter().map(|&i| x.column(f)[i as usize]).collect();
            values.sort_unstable_by(f64::total_cmp);
            values.dedup();
            for w in values.windows(2) {
                let threshold = w[0] + (w[1] - w[0]) / 2.0;
                if threshold >= w[1] {
                    continue;
                }
                let mut left = [0usize; 2];
                let mut right = [0usize; 2];
                for &i in samples {
                    let side = if x.column(f)[i as usize] <= threshold {
                        &mut left
                    } else {
                        &mut right
                    };
                    side[y[i as usize].index()] += 1;
                }
                let nl = left[0] + left[1];
                let nr = right[0] + right[1];
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let weighted = (nl as f64 * gini_impurity(left).unwrap()
                    + nr as f64 * gini_impurity(right).unwrap())
                    / n as f64;
                let decrease = parent - weighted;
                if decrease > 0.0 && best.map_or(true, |b| decrease > b.decrease) {
                    best = Some(SplitChoice {
                        feature: f,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best
    }

    #[test]
    fn best_split_matches_brute_force_enumeration() {
        use rand::Rng;
        let mut rng = stream_rng(21, 0);
        for _ in 0..60 {
            let n = rng.random_range(2..=20);
            let p = rng.random_range(1..=4);
            let columns: Vec<Vec<f64>> = (0..p)
                .map(|_| (0..n).map(|_| (rng.random_range(0..6) as f64) / 2.0).collect())
                .collect();
            let x = matrix(columns);
            let y: Vec<Label> = (0..n)
                .map(|_| {
                    if rng.random_range(0..2) == 1 {
                        Label::High
                    } else {
                        Label::Low
                    }
                })
                .collect();
            let candidates: Vec<usize> = (0..p).collect();
            let fast = best_split(&x, &y, &all(n), &candidates, 1);
            let slow = brute_force(&x, &y, &all(n), &candidates, 1);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn grow_on_single_class_is_one_leaf() {
        let x = matrix(vec![vec![1.0, 2.0, 3.0]]);
        let y = labels(&[1, 1, 1]);
        let params = ForestParams::default();
        let tree = grow_tree(&x, &y, &all(3), &params, &mut stream_rng(0, 0));
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.vote(&[2.0]), Label::High);
    }

    #[test]
    fn depth_limit_one_gives_a_stump() {
        let x = matrix(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let y = labels(&[0, 1, 0, 1]);
        let params = ForestParams {
            max_depth: Some(1),
            ..ForestParams::default()
        };
        let tree = grow_tree(&x, &y, &all(4), &params, &mut stream_rng(0, 0));
        assert!(tree.nodes.len() <= 3);
        assert!(tree.depth() <= 1);
    }

    #[test]
    fn separable_data_is_interpolated() {
        let x = matrix(vec![
            vec![0.1, 0.3, 0.8, 0.9, 0.2, 0.7],
            vec![5.0, 4.0, 1.0, 2.0, 6.0, 1.5],
        ]);
        let y = labels(&[0, 0, 1, 1, 0, 1]);
        let params = ForestParams::default();
        let tree = grow_tree(&x, &y, &all(6), &params, &mut stream_rng(3, 0));
        for i in 0..6 {
            assert_eq!(tree.vote(&x.row(i)), y[i]);
        }
    }

    #[test]
    fn leaf_counts_sum_to_reaching_samples() {
        let x = matrix(vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]);
        let y = labels(&[0, 1, 0, 1, 0, 1]);
        let params = ForestParams::default();
        let tree = grow_tree(&x, &y, &all(6), &params, &mut stream_rng(7, 0));
        let total: u32 = tree
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { counts } => Some(counts[0] + counts[1]),
                _ => None,
            })
            .sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn tied_leaf_votes_low() {
        let tree = DecisionTree {
            nodes: vec![Node::Leaf { counts: [3, 3] }],
        };
        assert_eq!(tree.vote(&[]), Label::Low);
    }

    #[test]
    fn serialization_round_trips() {
        let x = matrix(vec![vec![1.0, 2.0, 9.0, 10.0]]);
        let y = labels(&[0, 0, 1, 1]);
        let tree = grow_tree(&x, &y, &all(4), &ForestParams::default(), &mut stream_rng(1, 0));
        let json = serde_json::to_string(&tree).unwrap();
        let back: DecisionTree = serde_json::from_str(&json).unwrap();
        assert_eq!(tree, back);
    }
}
