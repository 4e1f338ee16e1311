//! Core algorithms and data model for cell-level crime hotspot forecasting.
//!
//! The pipeline turns hourly aggregated per-cell demographic observations and
//! geo-located crime events into a binary "low/high crime next month"
//! prediction per geographic cell:
//!
//! 1. [`geo`] — cell universe, great-circle distance, nearest-cell joins.
//! 2. [`features`] — per-cell window statistics (mean/median/sd/min/max and
//!    empirical Shannon entropy) over derived hourly variables, second-order
//!    statistics across windows, plus borough profile metrics.
//! 3. [`labeling`] — per-cell monthly crime counts and median-split labels.
//! 4. [`selection`] — train-set imputation/normalization, Pearson correlation
//!    reports, Gini-importance feature ranking and top-k selection.
//! 5. [`forest`] — from-scratch random forest (CART trees, Gini impurity,
//!    subsampling without replacement, OOB error, Gini and permutation
//!    importances).
//! 6. [`eval`] — splits, k-fold plans, accuracy with exact binomial CI, F1,
//!    rank-based AUC, and the majority-class baseline.
//! 7. [`synth`] — seeded synthetic datasets with an optional planted crime
//!    signal, for end-to-end validation without the original data.
//!
//! Everything here is deterministic: results are pure functions of inputs,
//! parameters and seeds, independent of iteration order or worker count.
//! Per-unit entry points (one tree, one cell row) are exposed so callers can
//! parallelize without changing results.
//!
//! The crate is `no_std`-compatible (requires `alloc`); file formats, CSV/CLI
//! handling and parallel drivers live in the companion `hotspot-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod calendar;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod geo;
pub mod labeling;
mod math;
pub mod matrix;
pub mod rng;
pub mod selection;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use geo::{Cell, CellId, CellUniverse, GeoPoint};
pub use matrix::FeatureMatrix;
