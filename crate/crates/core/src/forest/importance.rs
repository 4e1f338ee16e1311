//! Feature importance for trained forests.
//!
//! Two measures: mean decrease in Gini impurity (recomputed from stored tree
//! structure alone) and permutation accuracy drop (out-of-bag rows are
//! re-predicted with one feature column shuffled; the accuracy loss is the
//! importance). Permutation shuffles draw from the RNG stream
//! `(seed, tree·p + feature)`, so results do not depend on evaluation order.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::forest::tree::{gini_impurity, Node};
use crate::forest::ForestModel;
use crate::labeling::Label;
use crate::matrix::FeatureMatrix;
use crate::rng::stream_rng;

/// Per-feature importance scores, aligned with the model's feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceTable {
    pub feature_names: Vec<String>,
    /// Mean over trees of the total Gini decrease attributed to the feature,
    /// each tree normalised by its in-bag sample count.
    pub mean_decrease_gini: Vec<f64>,
}

/// Permutation (accuracy-drop) importances, overall and per true class.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationScores {
    pub feature_names: Vec<String>,
    /// Mean accuracy drop over all out-of-bag rows.
    pub overall: Vec<f64>,
    /// Mean accuracy drop among rows whose true label is low.
    pub class_low: Vec<f64>,
    /// Mean accuracy drop among rows whose true label is high.
    pub class_high: Vec<f64>,
}

/// Class counts reaching every node, reconstructed from the leaf counts.
fn node_counts(nodes: &[Node]) -> Vec<[u32; 2]> {
    let mut counts = vec![[0u32; 2]; nodes.len()];
    // Children always follow their parent, so one reverse pass suffices.
    for i in (0..nodes.len()).rev() {
        match nodes[i] {
            Node::Leaf { counts: c } => counts[i] = c,
            Node::Internal { left, right, .. } => {
                let l = counts[left as usize];
                let r = counts[right as usize];
                counts[i] = [l[0] + r[0], l[1] + r[1]];
            }
        }
    }
    counts
}

/// Mean decrease in Gini impurity per feature.
///
/// Every split contributes `(n·I(parent) − n_l·I(left) − n_r·I(right))`
/// weighted by the tree's in-bag size; contributions are summed per feature
/// and averaged over all trees. Needs only the stored model.
pub fn importance_gini(model: &ForestModel) -> ImportanceTable {
    let p = model.n_features();
    let mut totals = vec![0.0f64; p];
    for tree in &model.trees {
        let counts = node_counts(&tree.nodes);
        let root_n = (counts[0][0] + counts[0][1]) as f64;
        if root_n == 0.0 {
            continue;
        }
        for (i, node) in tree.nodes.iter().enumerate() {
            if let Node::Internal { feature, left, right, .. } = *node {
                let c = counts[i];
                let cl = counts[left as usize];
                let cr = counts[right as usize];
                let widen = |c: [u32; 2]| [c[0] as usize, c[1] as usize];
                let n = (c[0] + c[1]) as f64;
                let nl = (cl[0] + cl[1]) as f64;
                let nr = (cr[0] + cr[1]) as f64;
                let decrease = n * gini_impurity(widen(c)).unwrap_or(0.0)
                    - nl * gini_impurity(widen(cl)).unwrap_or(0.0)
                    - nr * gini_impurity(widen(cr)).unwrap_or(0.0);
                totals[feature as usize] += decrease / root_n;
            }
        }
    }
    let n_trees = model.trees.len() as f64;
    ImportanceTable {
        feature_names: model.feature_names.clone(),
        mean_decrease_gini: totals.iter().map(|t| t / n_trees).collect(),
    }
}

/// Fraction of `rows` a single tree classifies correctly.
fn tree_accuracy(
    tree: &crate::forest::DecisionTree,
    rows: &[Vec<f64>],
    truth: &[Label],
    class: Option<Label>,
) -> Option<f64> {
    let mut n = 0usize;
    let mut correct = 0usize;
    for (row, &label) in rows.iter().zip(truth) {
        if class.is_some_and(|c| c != label) {
            continue;
        }
        n += 1;
        if tree.vote(row) == label {
            correct += 1;
        }
    }
    (n > 0).then(|| correct as f64 / n as f64)
}

/// Permutation importance over the training data the model was fit to.
///
/// For every tree, its out-of-bag rows are predicted as-is (baseline) and
/// once per feature with that feature's out-of-bag values shuffled; the
/// importance is the mean accuracy drop. Trees without out-of-bag rows are
/// skipped; per-class averages skip trees with no out-of-bag row of that
/// class. Features a tree never splits on contribute a drop of exactly zero.
pub fn importance_permutation(
    model: &ForestModel,
    x: &FeatureMatrix,
    y: &[Label],
    seed: u64,
) -> Result<PermutationScores> {
    if x.n_rows() != model.n_samples as usize || x.names() != model.feature_names.as_slice() {
        return Err(Error::Schema(
            "permutation importance needs the matrix the model was trained on".into(),
        ));
    }
    if y.len() != x.n_rows() {
        return Err(Error::InvalidInput(alloc::format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    let p = model.n_features();
    let mut sums = vec![0.0f64; p];
    let mut sums_low = vec![0.0f64; p];
    let mut sums_high = vec![0.0f64; p];
    let mut trees_overall = 0usize;
    let mut trees_low = 0usize;
    let mut trees_high = 0usize;

    let oob_masks = model.oob_masks();
    for (t, (tree, mask)) in model.trees.iter().zip(&oob_masks).enumerate() {
        let oob_rows: Vec<usize> = (0..x.n_rows()).filter(|&i| mask[i]).collect();
        if oob_rows.is_empty() {
            continue;
        }
        let mut rows: Vec<Vec<f64>> = oob_rows.iter().map(|&i| x.row(i)).collect();
        let truth: Vec<Label> = oob_rows.iter().map(|&i| y[i]).collect();

        let base = tree_accuracy(tree, &rows, &truth, None).expect("non-empty oob");
        let base_low = tree_accuracy(tree, &rows, &truth, Some(Label::Low));
        let base_high = tree_accuracy(tree, &rows, &truth, Some(Label::High));
        trees_overall += 1;
        trees_low += base_low.is_some() as usize;
        trees_high += base_high.is_some() as usize;

        let used = tree.features_used();
        for f in 0..p {
            if !used.contains(&(f as u32)) {
                continue; // drop is identically zero
            }
            let mut rng = stream_rng(seed, (t * p + f) as u64);
            let original: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            let mut shuffled = original.clone();
            shuffled.shuffle(&mut rng);
            for (row, &v) in rows.iter_mut().zip(&shuffled) {
                row[f] = v;
            }
            sums[f] += base - tree_accuracy(tree, &rows, &truth, None).expect("non-empty oob");
            if let Some(b) = base_low {
                sums_low[f] +=
                    b - tree_accuracy(tree, &rows, &truth, Some(Label::Low)).expect("class seen");
            }
            if let Some(b) = base_high {
                sums_high[f] +=
                    b - tree_accuracy(tree, &rows, &truth, Some(Label::High)).expect("class seen");
            }
            for (row, &v) in rows.iter_mut().zip(&original) {
                row[f] = v;
            }
        }
    }
    if trees_overall == 0 {
        return Err(Error::Coverage(
            "no tree has out-of-bag rows; cannot measure permutation importance".into(),
        ));
    }
    let mean = |sums: Vec<f64>, n: usize| -> Vec<f64> {
        sums.iter()
            .map(|s| if n == 0 { 0.0 } else { s / n as f64 })
            .collect()
    };
    Ok(PermutationScores {
        feature_names: model.feature_names.clone(),
        overall: mean(sums, trees_overall),
        class_low: mean(sums_low, trees_low),
        class_high: mean(sums_high, trees_high),
    })
}
