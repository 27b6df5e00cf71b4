// The three base learners on a small synthetic UNSW-NB15-shaped sample:
// Hellinger random forest, balanced bagging and the softmax booster.

use nids_ensemble::data::{
    apply_feature_subset, apply_minmax, fit_minmax, ingest_reader, preprocess, stratified_split, FeatureSchema,
    FeatureSubset,
};
use nids_ensemble::ensemble::{
    fit_balanced_bagging, fit_gradient_booster_traced, fit_random_forest, predict_proba, BalancedBaggingParams,
    BoosterParams, ProbabilityScoreMatrix, RandomForestParams,
};
use nids_ensemble::synthetic::{synthetic_unsw_csv, SyntheticConfig, OFFICIAL_TRAIN_COUNTS};
use nids_ensemble::Result;

fn accuracy(ps: &ProbabilityScoreMatrix, labels: &[usize]) -> f64 {
    let hits = ps.predicted_labels().iter().zip(labels).filter(|(p, y)| p == y).count();
    hits as f64 / labels.len() as f64
}

/// Returns validation accuracies of (forest, bagging, booster).
pub fn run_example() -> Result<[f64; 3]> {
    let csv = synthetic_unsw_csv(&SyntheticConfig {
        class_counts: SyntheticConfig::scaled(OFFICIAL_TRAIN_COUNTS, 3000, 20),
        separation: 3.0,
        layout_seed: 11,
        sample_seed: 12,
    })?;
    let mut schema = FeatureSchema::unsw_nb15();
    let raw = ingest_reader(csv.as_bytes(), &schema)?;
    schema.fit_nominal_maps(&raw)?;
    let (fit, val) = stratified_split(&preprocess(&raw, &schema)?, 0.8, 7)?;
    let scaler = fit_minmax(&fit)?;
    let (fit, val) = (apply_minmax(&scaler, &fit)?, apply_minmax(&scaler, &val)?);

    let (fit8, val8) = (apply_feature_subset(&fit, &FeatureSubset::sfs_8())?, apply_feature_subset(&val, &FeatureSubset::sfs_8())?);
    let subset24 = FeatureSubset::elastic_net_24();
    let (fit24, val24) = (apply_feature_subset(&fit, &subset24)?, apply_feature_subset(&val, &subset24)?);

    let rf = fit_random_forest(&fit8, &RandomForestParams { n_trees: 30, ..Default::default() })?;
    let bb = fit_balanced_bagging(&fit24, &BalancedBaggingParams { n_estimators: 30, ..Default::default() })?;
    let (booster, losses) = fit_gradient_booster_traced(&fit24, &BoosterParams { n_rounds: 20, ..Default::default() })?;

    let bag_counts = &bb.sample_class_counts[0];
    println!("bagging sample per class: {bag_counts:?}");
    println!("booster training loss: {:.4} → {:.4}", losses[0], losses[losses.len() - 1]);

    let scores = [predict_proba(&rf, &val8)?, predict_proba(&bb, &val24)?, predict_proba(&booster, &val24)?];
    let mut acc = [0.0; 3];
    for (i, (name, ps)) in ["RF-HDDT", "balanced bagging", "booster"].iter().zip(&scores).enumerate() {
        acc[i] = accuracy(ps, val.labels());
        println!(
            "{name:<17} accuracy {:.3}, rows sum to one: {}",
            acc[i],
            ps.is_row_stochastic(1e-9)
        );
    }
    Ok(acc)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
