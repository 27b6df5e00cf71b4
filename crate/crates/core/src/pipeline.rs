//! End-to-end training and evaluation of the three-model ensemble, and the
//! on-disk artifact.
//!
//! Training splits the input 80/20 (stratified), fits min-max scaling on the
//! larger part, trains balanced bagging and the booster on the 24-feature
//! projection and the Hellinger forest on the 8-feature projection, then fits
//! one overlap model per corrected learner from its validation predictions.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classes::{ClassList, NUM_CLASSES};
use crate::data::{
    apply_feature_subset, apply_minmax, encode_features, fit_minmax, stratified_split, FeatureSchema,
    FeatureSubset, RawTable, SampleMatrix, ScalerParams,
};
use crate::ensemble::{
    derive_seed, fit_balanced_bagging, fit_gradient_booster, fit_random_forest, predict_proba,
    BalancedBaggingParams, BoosterModel, BoosterParams, ForestModel, ProbabilityScoreMatrix,
    RandomForestParams,
};
use crate::error::{Error, Result};
use crate::metrics::{collapse_confusion, compute_metrics, vote, MetricsReport, View, VoteMode};
use crate::overlap::{
    error_statistics, modify_membership_scores, resolve_range_overlaps, ConfusionMatrix, Correction,
    OverlapModel,
};

pub const DEFAULT_SEED: u64 = 42;
pub const FORMAT_VERSION: u32 = 1;

/// Training configuration. Loadable from TOML; every field is optional.
///
/// The `seed` fields inside the per-model sections are ignored: each model's
/// seed is derived from the top-level `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub seed: u64,
    /// Share of the training data used for fitting; the rest is validation.
    pub train_fraction: f64,
    pub subset_24: FeatureSubset,
    pub subset_8: FeatureSubset,
    pub balanced_bagging: BalancedBaggingParams,
    pub booster: BoosterParams,
    pub random_forest: RandomForestParams,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            train_fraction: 0.8,
            subset_24: FeatureSubset::elastic_net_24(),
            subset_8: FeatureSubset::sfs_8(),
            balanced_bagging: BalancedBaggingParams::default(),
            booster: BoosterParams::default(),
            random_forest: RandomForestParams::default(),
        }
    }
}

impl EnsembleConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train_fraction {} is outside (0, 1)",
                self.train_fraction
            )));
        }
        self.subset_24.validate_against(schema)?;
        self.subset_8.validate_against(schema)
    }
}

/// Everything needed to score new records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleArtifact {
    pub format_version: u32,
    pub class_list: ClassList,
    pub schema: FeatureSchema,
    pub config: EnsembleConfig,
    pub scaler: ScalerParams,
    pub subset_24: FeatureSubset,
    pub subset_8: FeatureSubset,
    pub bb_model: ForestModel,
    pub booster: BoosterModel,
    pub rf_hddt: ForestModel,
    pub bb_overlap: OverlapModel,
    pub booster_overlap: OverlapModel,
}

impl EnsembleArtifact {
    fn check(&self) -> Result<()> {
        if !self.bb_overlap.resolved || !self.booster_overlap.resolved {
            return Err(Error::CorruptArtifact("overlap models are not resolved".into()));
        }
        if !self.class_list.is_canonical() {
            return Err(Error::CorruptArtifact("unexpected class list".into()));
        }
        for subset in [&self.subset_24, &self.subset_8] {
            subset
                .validate_against(&self.schema)
                .map_err(|e| Error::CorruptArtifact(e.to_string()))?;
        }
        if self.scaler.features != self.schema.feature_names() {
            return Err(Error::CorruptArtifact("scaler does not match schema".into()));
        }
        Ok(())
    }
}

/// Facts about a training run, written next to the artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub seed: u64,
    pub fit_class_counts: [usize; NUM_CLASSES],
    pub validation_class_counts: [usize; NUM_CLASSES],
    pub bb_validation_accuracy: f64,
    pub booster_validation_accuracy: f64,
    /// Non-zero overlap entries before and after range resolution.
    pub bb_overlap_entries: (usize, usize),
    pub booster_overlap_entries: (usize, usize),
}

fn active_entries(m: &OverlapModel) -> usize {
    m.olm
        .iter()
        .zip(m.olsd.iter())
        .filter(|(a, b)| **a != 0.0 || **b != 0.0)
        .count()
}

fn check_features(expected: &[String], m: &SampleMatrix) -> Result<()> {
    if m.feature_names() != expected {
        return Err(Error::SchemaMismatch(format!(
            "expected {} features {:?}…, found {} features {:?}…",
            expected.len(),
            expected.iter().take(3).collect::<Vec<_>>(),
            m.n_features(),
            m.feature_names().iter().take(3).collect::<Vec<_>>()
        )));
    }
    Ok(())
}

fn fit_overlap(ps: &ProbabilityScoreMatrix, labels: &[usize]) -> Result<(OverlapModel, OverlapModel, f64)> {
    let predicted = ps.predicted_labels();
    let cm = ConfusionMatrix::from_labels(labels, &predicted, NUM_CLASSES)?;
    let raw = error_statistics(ps, labels, &predicted)?;
    let resolved = resolve_range_overlaps(&raw, &cm)?;
    let accuracy = (0..NUM_CLASSES).map(|c| cm.get(c, c)).sum::<u64>() as f64 / cm.total() as f64;
    Ok((raw, resolved, accuracy))
}

pub fn train_full_ensemble(
    train: &SampleMatrix,
    schema: &FeatureSchema,
    config: &EnsembleConfig,
) -> Result<EnsembleArtifact> {
    train_full_ensemble_logged(train, schema, config).map(|(a, _)| a)
}

pub fn train_full_ensemble_logged(
    train: &SampleMatrix,
    schema: &FeatureSchema,
    config: &EnsembleConfig,
) -> Result<(EnsembleArtifact, TrainingLog)> {
    config.validate(schema)?;
    check_features(&schema.feature_names(), train)?;

    let (fit_part, validation) = stratified_split(train, config.train_fraction, derive_seed(config.seed, 0))?;
    if fit_part.is_empty() || validation.is_empty() {
        return Err(Error::EmptyInput);
    }
    let scaler = fit_minmax(&fit_part)?;
    let fit_scaled = apply_minmax(&scaler, &fit_part)?;
    let val_scaled = apply_minmax(&scaler, &validation)?;
    let fit24 = apply_feature_subset(&fit_scaled, &config.subset_24)?;
    let fit8 = apply_feature_subset(&fit_scaled, &config.subset_8)?;

    let bb_params = BalancedBaggingParams {
        seed: derive_seed(config.seed, 1),
        ..config.balanced_bagging.clone()
    };
    let rf_params = RandomForestParams {
        seed: derive_seed(config.seed, 2),
        ..config.random_forest.clone()
    };
    let ((bb_model, booster), rf_hddt) = rayon::join(
        || {
            rayon::join(
                || fit_balanced_bagging(&fit24, &bb_params),
                || fit_gradient_booster(&fit24, &config.booster),
            )
        },
        || fit_random_forest(&fit8, &rf_params),
    );
    let (bb_model, booster, rf_hddt) = (bb_model?, booster?, rf_hddt?);

    let val24 = apply_feature_subset(&val_scaled, &config.subset_24)?;
    let (bb_raw, bb_overlap, bb_acc) = fit_overlap(&predict_proba(&bb_model, &val24)?, val24.labels())?;
    let (booster_raw, booster_overlap, booster_acc) =
        fit_overlap(&predict_proba(&booster, &val24)?, val24.labels())?;

    let log = TrainingLog {
        seed: config.seed,
        fit_class_counts: fit_part.class_counts(),
        validation_class_counts: validation.class_counts(),
        bb_validation_accuracy: bb_acc,
        booster_validation_accuracy: booster_acc,
        bb_overlap_entries: (active_entries(&bb_raw), active_entries(&bb_overlap)),
        booster_overlap_entries: (active_entries(&booster_raw), active_entries(&booster_overlap)),
    };
    let artifact = EnsembleArtifact {
        format_version: FORMAT_VERSION,
        class_list: ClassList::canonical(),
        schema: schema.clone(),
        config: config.clone(),
        scaler,
        subset_24: config.subset_24.clone(),
        subset_8: config.subset_8.clone(),
        bb_model,
        booster,
        rf_hddt,
        bb_overlap,
        booster_overlap,
    };
    Ok((artifact, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationOptions {
    /// Apply score modification to the bagging and booster scores.
    pub correction: bool,
    pub vote: VoteMode,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            correction: true,
            vote: VoteMode::Sum,
        }
    }
}

/// Per-model score matrices and the combined prediction for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleScores {
    pub bb_raw: ProbabilityScoreMatrix,
    pub booster_raw: ProbabilityScoreMatrix,
    /// Equal to the raw matrices when correction is off.
    pub bb_corrected: ProbabilityScoreMatrix,
    pub booster_corrected: ProbabilityScoreMatrix,
    pub rf_hddt: ProbabilityScoreMatrix,
    pub bb_corrections: Vec<Correction>,
    pub booster_corrections: Vec<Correction>,
    pub predicted: Vec<usize>,
}

/// Scores an already-encoded (unscaled) matrix. Labels are not read.
pub fn score_matrix(
    artifact: &EnsembleArtifact,
    m: &SampleMatrix,
    opts: EvaluationOptions,
) -> Result<EnsembleScores> {
    check_features(&artifact.scaler.features, m)?;
    let scaled = apply_minmax(&artifact.scaler, m)?;
    let x24 = apply_feature_subset(&scaled, &artifact.subset_24)?;
    let x8 = apply_feature_subset(&scaled, &artifact.subset_8)?;

    let bb_raw = predict_proba(&artifact.bb_model, &x24)?;
    let booster_raw = predict_proba(&artifact.booster, &x24)?;
    let rf_hddt = predict_proba(&artifact.rf_hddt, &x8)?;

    let ((bb_corrected, bb_corrections), (booster_corrected, booster_corrections)) = if opts.correction {
        (
            modify_membership_scores(&bb_raw, &artifact.bb_overlap)?,
            modify_membership_scores(&booster_raw, &artifact.booster_overlap)?,
        )
    } else {
        ((bb_raw.clone(), Vec::new()), (booster_raw.clone(), Vec::new()))
    };
    let predicted = vote(&[&bb_corrected, &booster_corrected, &rf_hddt], opts.vote)?;
    Ok(EnsembleScores {
        bb_raw,
        booster_raw,
        bb_corrected,
        booster_corrected,
        rf_hddt,
        bb_corrections,
        booster_corrections,
        predicted,
    })
}

/// Encodes a raw table with the artifact's schema and predicts class indices.
/// The table may omit the target columns.
pub fn predict_table(artifact: &EnsembleArtifact, raw: &RawTable, opts: EvaluationOptions) -> Result<Vec<usize>> {
    let (values, names) = encode_features(raw, &artifact.schema)?;
    let placeholder = vec![0; values.nrows()];
    let m = SampleMatrix::new(values, placeholder, names)?;
    Ok(score_matrix(artifact, &m, opts)?.predicted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub scores: EnsembleScores,
    pub multiclass_cm: ConfusionMatrix,
    pub multiclass: MetricsReport,
    pub binary_cm: ConfusionMatrix,
    pub binary: MetricsReport,
}

pub fn evaluate_artifact(
    artifact: &EnsembleArtifact,
    test: &SampleMatrix,
    opts: EvaluationOptions,
) -> Result<Evaluation> {
    let scores = score_matrix(artifact, test, opts)?;
    let multiclass_cm = ConfusionMatrix::from_labels(test.labels(), &scores.predicted, NUM_CLASSES)?;
    let binary_cm = collapse_confusion(&multiclass_cm)?;
    Ok(Evaluation {
        multiclass: compute_metrics(&multiclass_cm, View::Multiclass)?,
        binary: compute_metrics(&binary_cm, View::Binary)?,
        scores,
        multiclass_cm,
        binary_cm,
    })
}

pub fn artifact_to_json(artifact: &EnsembleArtifact) -> Result<String> {
    serde_json::to_string(artifact).map_err(|e| Error::CorruptArtifact(e.to_string()))
}

pub fn artifact_from_json(text: &str) -> Result<EnsembleArtifact> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::CorruptArtifact(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::CorruptArtifact("missing format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::UnsupportedVersion {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            supported: FORMAT_VERSION,
        });
    }
    let artifact: EnsembleArtifact =
        serde_json::from_value(value).map_err(|e| Error::CorruptArtifact(e.to_string()))?;
    artifact.check()?;
    Ok(artifact)
}

pub fn save_artifact(artifact: &EnsembleArtifact, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, artifact_to_json(artifact)?)?;
    Ok(())
}

pub fn load_artifact(path: impl AsRef<Path>) -> Result<EnsembleArtifact> {
    artifact_from_json(&fs::read_to_string(path)?)
}
