// Train on a synthetic UNSW-NB15-shaped file, save and reload the artifact,
// then evaluate the held-out file with and without score correction.
//
// Pass `--rows N` to change the training size (default 4000).

use nids_ensemble::classes::NORMAL;
use nids_ensemble::data::{ingest_reader, preprocess, FeatureSchema};
use nids_ensemble::metrics::percent;
use nids_ensemble::pipeline::{
    evaluate_artifact, load_artifact, save_artifact, train_full_ensemble, EnsembleConfig, EvaluationOptions,
};
use nids_ensemble::synthetic::{synthetic_unsw_csv, SyntheticConfig, OFFICIAL_TEST_COUNTS, OFFICIAL_TRAIN_COUNTS};
use nids_ensemble::Result;

pub struct EndToEnd {
    pub attack_sensitivity: f64,
    pub false_alarm_rate: f64,
    pub missed_raw: u64,
    pub missed_corrected: u64,
    /// Score adjustments made across both corrected models.
    pub corrections: usize,
}

pub fn run_example(train_rows: usize, config: &EnsembleConfig) -> Result<EndToEnd> {
    let synth = |counts, rows, sample_seed| SyntheticConfig {
        class_counts: SyntheticConfig::scaled(counts, rows, 12),
        separation: 3.0,
        layout_seed: 5,
        sample_seed,
    };
    let train_csv = synthetic_unsw_csv(&synth(OFFICIAL_TRAIN_COUNTS, train_rows, 1))?;
    let test_csv = synthetic_unsw_csv(&synth(OFFICIAL_TEST_COUNTS, train_rows / 2, 2))?;

    let mut schema = FeatureSchema::unsw_nb15();
    let raw = ingest_reader(train_csv.as_bytes(), &schema)?;
    schema.fit_nominal_maps(&raw)?;
    let train = preprocess(&raw, &schema)?;
    let artifact = train_full_ensemble(&train, &schema, config)?;

    let path = std::env::temp_dir().join(format!("nids-example-{}.json", std::process::id()));
    save_artifact(&artifact, &path)?;
    let artifact = load_artifact(&path)?;
    std::fs::remove_file(&path)?;

    let test = preprocess(&ingest_reader(test_csv.as_bytes(), &artifact.schema)?, &artifact.schema)?;
    let plain = evaluate_artifact(&artifact, &test, EvaluationOptions { correction: false, ..Default::default() })?;
    let corrected = evaluate_artifact(&artifact, &test, EvaluationOptions::default())?;

    let attack_to_normal = |cm: &nids_ensemble::overlap::ConfusionMatrix| {
        (0..10).filter(|&c| c != NORMAL).map(|c| cm.get(c, NORMAL)).sum::<u64>()
    };
    let attack = corrected.binary.class("Attack").expect("binary view has Attack");
    println!("test records           {}", test.n_samples());
    println!("accuracy (10 classes)  {}%", percent(corrected.multiclass.overall_accuracy));
    println!("attack sensitivity     {}%", percent(attack.sensitivity));
    println!("false-alarm rate       {}%", percent(corrected.binary.false_alarm_rate));
    println!(
        "attack→Normal          {} without correction, {} with",
        attack_to_normal(&plain.multiclass_cm),
        attack_to_normal(&corrected.multiclass_cm)
    );
    println!(
        "rows corrected         bb {}, booster {}",
        corrected.scores.bb_corrections.len(),
        corrected.scores.booster_corrections.len()
    );
    Ok(EndToEnd {
        attack_sensitivity: attack.sensitivity,
        false_alarm_rate: corrected.binary.false_alarm_rate,
        missed_raw: attack_to_normal(&plain.multiclass_cm),
        missed_corrected: attack_to_normal(&corrected.multiclass_cm),
        corrections: corrected.scores.bb_corrections.len() + corrected.scores.booster_corrections.len(),
    })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let rows = args
        .iter()
        .position(|a| a == "--rows")
        .and_then(|i| args.get(i + 1))
        .and_then(|v| v.parse().ok())
        .unwrap_or(4000);
    run_example(rows, &EnsembleConfig::default()).map(|_| ())
}
