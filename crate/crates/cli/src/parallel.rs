//! Thread-pool drivers for the two expensive stages.
//!
//! Both stages parallelize over units that are deterministic in isolation —
//! cells for feature extraction, tree indices for forest growth — and
//! reassemble results in unit order, so output is byte-identical for any
//! thread count, including 1.

use anyhow::Result;
use hotspot_core::data::{BoroughProfile, HourlyObservation};
use hotspot_core::features::{cell_feature_row, full_feature_names, group_by_cell, observation_span};
use hotspot_core::forest::{grow_forest_tree, validate_training_inputs, ForestModel, ForestParams};
use hotspot_core::geo::georeference_profiles;
use hotspot_core::labeling::Label;
use hotspot_core::matrix::FeatureMatrix;
use hotspot_core::CellUniverse;
use rayon::prelude::*;

/// A pool with the requested worker count; 0 means one per logical core.
pub fn make_pool(threads: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?)
}

/// Per-cell feature extraction fanned out over the pool. Produces exactly
/// the matrix `hotspot_core::features::featurize` would.
pub fn featurize(
    pool: &rayon::ThreadPool,
    observations: &[HourlyObservation],
    universe: &CellUniverse,
    profiles: &[BoroughProfile],
) -> Result<FeatureMatrix> {
    let span = observation_span(observations)?;
    let groups = group_by_cell(observations, universe)?;
    let assignment = georeference_profiles(profiles, universe)?;
    let cells: Vec<_> = groups.iter().collect();
    let rows: Vec<Vec<f64>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(cell, indices)| {
                let metrics = &profiles[assignment[cell]].metrics;
                cell_feature_row(span, observations, indices, metrics)
            })
            .collect::<hotspot_core::Result<_>>()
    })?;
    let ids = cells.iter().map(|(cell, _)| **cell).collect();
    let names = full_feature_names();
    let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
    for row in &rows {
        for (column, &v) in columns.iter_mut().zip(row) {
            column.push(v);
        }
    }
    Ok(FeatureMatrix::new(ids, names, columns)?)
}

/// Forest training with trees grown in parallel. Produces exactly the model
/// `hotspot_core::forest::fit` would: each tree depends only on
/// `(data, params, tree index)`, never on scheduling.
pub fn fit(
    pool: &rayon::ThreadPool,
    x: &FeatureMatrix,
    y: &[Label],
    params: &ForestParams,
) -> Result<ForestModel> {
    validate_training_inputs(x, y, params)?;
    let grown: Vec<_> = pool.install(|| {
        (0..params.n_trees)
            .into_par_iter()
            .map(|t| grow_forest_tree(x, y, params, t))
            .collect()
    });
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut in_bag = Vec::with_capacity(params.n_trees);
    for (tree, bag) in grown {
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
