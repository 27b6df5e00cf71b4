//! CSV ingestion and preprocessing: identifier removal, nominal encoding,
//! min-max scaling, stratified splitting, feature-subset projection and
//! forward feature selection.

mod matrix;
mod scale;
mod schema;
mod selection;
mod split;
mod subset;
mod table;

pub use matrix::{encode_features, preprocess, SampleMatrix};
pub use scale::{apply_minmax, fit_minmax, ScalerParams};
pub use schema::{Column, ColumnKind, FeatureSchema};
pub use selection::{sfs_forward_select, HoldoutF1Scorer, SelectionResult, SelectionStep, SubsetScorer};
pub use split::{holdout_quota, stratified_split};
pub use subset::{apply_feature_subset, FeatureSubset};
pub use table::{ingest_csv, ingest_reader, Cell, RawTable};
