//! End-to-end run of the whole library on a generated city: observations and
//! crime events in, a trained forest and its evaluation out. The dataset is
//! small to keep the test fast, so the assertions check direction and sanity
//! (beats the baseline, planted signal surfaces) rather than tight margins.

use hotspot_core::eval::{evaluate, majority_baseline, split};
use hotspot_core::features::featurize;
use hotspot_core::forest::{fit, oob_error, ForestParams};
use hotspot_core::labeling::{count_crimes, median_split, Label};
use hotspot_core::selection::{apply_normalizer, fit_normalizer, rank_by_gini, select_top_k};
use hotspot_core::synth::{generate, SyntheticConfig, PLANTED_FEATURES};

#[test]
fn generated_city_trains_to_a_useful_model() {
    let config = SyntheticConfig {
        seed: 42,
        n_cells: 120,
        n_hours: 14 * 24,
        n_profiles: 4,
        ..SyntheticConfig::default()
    };
    let data = generate(&config).unwrap();
    assert_eq!(data.observations.len(), 120 * 14 * 24);

    // Features and labels, aligned on the universe's cell order.
    let mut matrix = featurize(&data.observations, &data.universe, &data.profiles).unwrap();
    let counts = count_crimes(&data.events, &data.universe, data.crime_month)
        .including_zero_cells(&data.universe);
    let labels = median_split(&counts).unwrap();
    assert!(!labels.is_degenerate(), "median split found no high cells");
    let y = labels.aligned_to(matrix.row_ids()).unwrap();

    let plan = split(matrix.n_rows(), 0.8, config.seed).unwrap();
    assert_eq!(plan.train.len(), 96);
    assert_eq!(plan.test.len(), 24);

    // Impute from training medians only, then normalize the same way.
    let fills = matrix.select_rows(&plan.train).unwrap().column_medians();
    matrix.fill_missing(&fills).unwrap();
    assert!(matrix.is_complete(), "imputation left missing values");
    let norm = fit_normalizer(&matrix.select_rows(&plan.train).unwrap()).unwrap();
    let matrix = apply_normalizer(&matrix, &norm).unwrap();

    let train = matrix.select_rows(&plan.train).unwrap();
    let train_y: Vec<Label> = plan.train.iter().map(|&i| y[i]).collect();

    // Rank everything, keep the strongest slice, retrain on it.
    let rank_params = ForestParams {
        n_trees: 60,
        seed: 7,
        ..ForestParams::default()
    };
    let ranking = rank_by_gini(&train, &train_y, &rank_params).unwrap();
    assert!(
        PLANTED_FEATURES
            .iter()
            .any(|f| ranking.rank_of(f).is_some_and(|r| r < 25)),
        "no planted feature in the top 25: leaders are {:?}",
        (0..5).map(|r| ranking.entry(r).0).collect::<Vec<_>>()
    );

    let kept = select_top_k(&ranking, 40).unwrap();
    let keep_cols: Vec<usize> = kept
        .iter()
        .map(|n| matrix.column_index(n).unwrap())
        .collect();
    let train_kept = train.select_columns(&keep_cols).unwrap();
    let full_kept = matrix.select_columns(&keep_cols).unwrap();

    let params = ForestParams {
        n_trees: 100,
        seed: 11,
        ..ForestParams::default()
    };
    let model = fit(&train_kept, &train_y, &params).unwrap();
    let oob = oob_error(&model, &train_kept, &train_y).unwrap();
    assert!(oob.error < 0.5, "out-of-bag error {} is no better than chance", oob.error);

    let report = evaluate(&model, &full_kept, &y, &plan, 0.95).unwrap();
    let test_y: Vec<Label> = plan.test.iter().map(|&i| y[i]).collect();
    let baseline = majority_baseline(&train_y, &test_y, 0.95).unwrap();

    assert_eq!(report.n_test, 24);
    assert!(
        report.accuracy > baseline.accuracy,
        "model accuracy {} does not beat the baseline {}",
        report.accuracy,
        baseline.accuracy
    );
    assert!(report.auc > 0.6, "AUC {} barely above chance", report.auc);
    assert!(report.ci.0 <= report.accuracy && report.accuracy <= report.ci.1);
    assert_eq!(baseline.auc, 0.5);
}

#[test]
fn zero_signal_city_gives_a_chance_level_model() {
    let config = SyntheticConfig {
        seed: 43,
        n_cells: 120,
        n_hours: 14 * 24,
        n_profiles: 4,
        signal_strength: 0.0,
        ..SyntheticConfig::default()
    };
    let data = generate(&config).unwrap();
    let mut matrix = featurize(&data.observations, &data.universe, &data.profiles).unwrap();
    let counts = count_crimes(&data.events, &data.universe, data.crime_month)
        .including_zero_cells(&data.universe);
    let y = median_split(&counts)
        .unwrap()
        .aligned_to(matrix.row_ids())
        .unwrap();

    let fills = matrix.column_medians();
    matrix.fill_missing(&fills).unwrap();

    let plan = split(matrix.n_rows(), 0.8, config.seed).unwrap();
    let train = matrix.select_rows(&plan.train).unwrap();
    let train_y: Vec<Label> = plan.train.iter().map(|&i| y[i]).collect();
    let params = ForestParams {
        n_trees: 100,
        seed: 11,
        ..ForestParams::default()
    };
    let model = fit(&train, &train_y, &params).unwrap();
    let report = evaluate(&model, &matrix, &y, &plan, 0.95).unwrap();
    // 24 test rows of coin-flip data: anything outside this band would mean
    // the generator leaks label information it claims not to carry.
    assert!(
        report.accuracy < 0.85,
        "accuracy {} with the signal switched off",
        report.accuracy
    );
}
