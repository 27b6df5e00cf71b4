// Greedy forward feature selection scored by a random forest's macro F1 on
// a held-out quarter.

use nids_ensemble::data::{
    apply_feature_subset, ingest_reader, preprocess, sfs_forward_select, FeatureSchema, FeatureSubset,
    HoldoutF1Scorer, SelectionResult,
};
use nids_ensemble::ensemble::RandomForestParams;
use nids_ensemble::synthetic::{synthetic_unsw_csv, SyntheticConfig, OFFICIAL_TRAIN_COUNTS};
use nids_ensemble::Result;

pub fn run_example() -> Result<SelectionResult> {
    let csv = synthetic_unsw_csv(&SyntheticConfig {
        class_counts: SyntheticConfig::scaled(OFFICIAL_TRAIN_COUNTS, 1200, 12),
        separation: 1.5,
        layout_seed: 21,
        sample_seed: 22,
    })?;
    let mut schema = FeatureSchema::unsw_nb15();
    let raw = ingest_reader(csv.as_bytes(), &schema)?;
    schema.fit_nominal_maps(&raw)?;
    // search within the 24 pre-screened features
    let m = apply_feature_subset(&preprocess(&raw, &schema)?, &FeatureSubset::elastic_net_24())?;

    let scorer = HoldoutF1Scorer::new(
        RandomForestParams {
            n_trees: 10,
            ..Default::default()
        },
        1,
    );
    let result = sfs_forward_select(&scorer, &m, 5)?;
    for (k, step) in result.trace.iter().enumerate() {
        println!("{:>2} + {:<8} macro F1 {:.4}", k + 1, step.added, step.score);
    }
    println!("kept: {}", result.subset.names().join(", "));
    Ok(result)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
