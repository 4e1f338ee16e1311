//! From-scratch Random Forest binary classifier.
//!
//! Each tree is grown on an independent in-bag subsample (without replacement
//! by default) with a per-node random feature draw, using an RNG stream
//! derived from `(seed, tree index)`. Trees are therefore independent units
//! of work: they can be grown in any order or in parallel and still produce
//! the same forest. Votes aggregate by majority with the exact-tie going to
//! the low class; scores are the fraction of trees voting high.

mod importance;
mod tree;

pub use importance::{importance_gini, importance_permutation, ImportanceTable, PermutationScores};
pub use tree::{best_split, gini_impurity, grow_tree, DecisionTree, Node, SplitChoice};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::Label;
use crate::math;
use crate::matrix::FeatureMatrix;
use crate::rng::stream_rng;

/// Forest hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    /// Number of trees (default 500).
    pub n_trees: usize,
    /// Features drawn per split; `None` means `⌊√p⌋`.
    pub mtry: Option<usize>,
    /// In-bag fraction of the training rows (default 0.632, the expected
    /// unique coverage of a classical bootstrap).
    pub subsample_fraction: f64,
    /// Draw the in-bag set with replacement (classical bootstrap) instead of
    /// the default without-replacement subsample.
    pub sample_with_replacement: bool,
    /// Optional depth cap; `None` grows to purity.
    pub max_depth: Option<usize>,
    /// Minimum samples in each child of a split (default 1).
    pub min_samples_leaf: usize,
    /// Seed of the per-tree RNG streams.
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            mtry: None,
            subsample_fraction: 0.632,
            sample_with_replacement: false,
            max_depth: None,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl ForestParams {
    /// Check bounds that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be >= 1".into()));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::Config(alloc::format!(
                "subsample_fraction {} outside (0, 1]",
                self.subsample_fraction
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be >= 1".into()));
        }
        if self.mtry == Some(0) {
            return Err(Error::Config("mtry must be >= 1".into()));
        }
        Ok(())
    }

    /// Features drawn per split for a matrix with `p` columns.
    pub fn resolved_mtry(&self, p: usize) -> usize {
        match self.mtry {
            Some(m) => m.min(p).max(1),
            None => (math::sqrt(p as f64) as usize).clamp(1, p),
        }
    }

    /// In-bag sample count for `n` training rows: `⌈subsample_fraction·n⌉`.
    pub fn in_bag_size(&self, n: usize) -> usize {
        let m = math::ceil(self.subsample_fraction * n as f64) as usize;
        m.clamp(1, n)
    }
}

/// A trained forest: trees, their in-bag index sets, and the feature schema
/// the trees were grown against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub feature_names: Vec<String>,
    pub trees: Vec<DecisionTree>,
    /// Sorted, deduplicated in-bag row indices per tree.
    pub in_bag: Vec<Vec<u32>>,
    pub n_samples: u32,
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Per-tree flags marking which training rows are out-of-bag.
    pub(crate) fn oob_masks(&self) -> Vec<Vec<bool>> {
        self.in_bag
            .iter()
            .map(|bag| {
                let mut in_bag = alloc::vec![false; self.n_samples as usize];
                for &i in bag {
                    in_bag[i as usize] = true;
                }
                in_bag.iter().map(|&b| !b).collect()
            })
            .collect()
    }
}

/// Check that (matrix, labels, params) form a trainable problem.
pub fn validate_training_inputs(
    x: &FeatureMatrix,
    y: &[Label],
    params: &ForestParams,
) -> Result<()> {
    params.validate()?;
    if y.len() != x.n_rows() {
        return Err(Error::InvalidInput(alloc::format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    if x.n_rows() < 2 {
        return Err(Error::Training("need at least two training rows".into()));
    }
    if x.n_cols() == 0 {
        return Err(Error::Training("need at least one feature".into()));
    }
    if let Some(m) = params.mtry {
        if m > x.n_cols() {
            return Err(Error::Config(alloc::format!(
                "mtry {m} exceeds feature count {}",
                x.n_cols()
            )));
        }
    }
    if !x.is_complete() {
        return Err(Error::Training(
            "training matrix contains missing values; impute before fitting".into(),
        ));
    }
    let highs = y.iter().filter(|l| l.is_high()).count();
    if highs == 0 || highs == y.len() {
        return Err(Error::Training(
            "labels contain a single class; nothing to separate".into(),
        ));
    }
    Ok(())
}

/// Grow tree `tree_index` of the forest described by `params`.
///
/// The tree RNG is the ChaCha stream `(params.seed, tree_index)`: in-bag
/// sampling and per-node feature draws consume from it sequentially, so the
/// result depends only on (data, params, tree_index) — never on which other
/// trees exist or on scheduling. Inputs must already satisfy
/// [`validate_training_inputs`].
pub fn grow_forest_tree(
    x: &FeatureMatrix,
    y: &[Label],
    params: &ForestParams,
    tree_index: usize,
) -> (DecisionTree, Vec<u32>) {
    let mut rng = stream_rng(params.seed, tree_index as u64);
    let n = x.n_rows();
    let m = params.in_bag_size(n);
    let mut bag: Vec<u32> = if params.sample_with_replacement {
        use rand::Rng;
        (0..m).map(|_| rng.random_range(0..n) as u32).collect()
    } else {
        rand::seq::index::sample(&mut rng, n, m)
            .into_iter()
            .map(|i| i as u32)
            .collect()
    };
    bag.sort_unstable();
    let tree = grow_tree(x, y, &bag, params, &mut rng);
    bag.dedup();
    (tree, bag)
}

/// Train a forest. Deterministic in (data, params).
pub fn fit(x: &FeatureMatrix, y: &[Label], params: &ForestParams) -> Result<ForestModel> {
    validate_training_inputs(x, y, params)?;
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut in_bag = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let (tree, bag) = grow_forest_tree(x, y, params, t);
        trees.push(tree);
        in_bag.push(bag);
    }
    Ok(ForestModel {
        params: params.clone(),
        feature_names: x.names().to_vec(),
        trees,
        in_bag,
        n_samples: x.n_rows() as u32,
    })
}

/// Predict one row (values in model feature order): majority vote and the
/// fraction of trees voting high. An exact half-split votes low.
pub fn predict_row(model: &ForestModel, row: &[f64]) -> Result<(Label, f64)> {
    if row.len() != model.n_features() {
        return Err(Error::Schema(alloc::format!(
            "row has {} values, model expects {}",
            row.len(),
            model.n_features()
        )));
    }
    let high_votes = model
        .trees
        .iter()
        .filter(|t| t.vote(row).is_high())
        .count();
    let score = high_votes as f64 / model.trees.len() as f64;
    let label = if score > 0.5 { Label::High } else { Label::Low };
    Ok((label, score))
}

/// Predict every row of a matrix whose columns match the model schema
/// (same names, same order).
pub fn predict_matrix(model: &ForestModel, x: &FeatureMatrix) -> Result<Vec<(Label, f64)>> {
    if x.names() != model.feature_names.as_slice() {
        return Err(Error::Schema(
            "matrix feature names do not match the model".into(),
        ));
    }
    (0..x.n_rows()).map(|i| predict_row(model, &x.row(i))).collect()
}

/// Out-of-bag evaluation summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OobReport {
    /// Misclassification rate over the evaluated samples.
    pub error: f64,
    /// Samples with at least one out-of-bag tree.
    pub n_evaluated: usize,
    /// Samples in-bag for every tree, excluded from the rate.
    pub n_skipped: usize,
}

/// Out-of-bag error on the training data the model was fit to.
///
/// Every sample is voted on only by trees that did not train on it. Fails
/// when no sample has out-of-bag coverage at all.
pub fn oob_error(model: &ForestModel, x: &FeatureMatrix, y: &[Label]) -> Result<OobReport> {
    if x.n_rows() != model.n_samples as usize || x.names() != model.feature_names.as_slice() {
        return Err(Error::Schema(
            "out-of-bag evaluation needs the matrix the model was trained on".into(),
        ));
    }
    if y.len() != x.n_rows() {
        return Err(Error::InvalidInput(alloc::format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    let oob_masks = model.oob_masks();
    let mut n_evaluated = 0usize;
    let mut n_wrong = 0usize;
    let mut n_skipped = 0usize;
    for i in 0..x.n_rows() {
        let row = x.row(i);
        let mut votes = [0usize; 2];
        for (tree, mask) in model.trees.iter().zip(&oob_masks) {
            if mask[i] {
                votes[tree.vote(&row).index()] += 1;
            }
        }
        if votes[0] + votes[1] == 0 {
            n_skipped += 1;
            continue;
        }
        let predicted = if votes[1] > votes[0] {
            Label::High
        } else {
            Label::Low
        };
        n_evaluated += 1;
        if predicted != y[i] {
            n_wrong += 1;
        }
    }
    if n_evaluated == 0 {
        return Err(Error::Coverage(
            "no sample is out-of-bag for any tree".into(),
        ));
    }
    Ok(OobReport {
        error: n_wrong as f64 / n_evaluated as f64,
        n_evaluated,
        n_skipped,
    })
}
