//! Data ingestion, preprocessing, splitting, synthetic data, persistence and
//! hyperparameter search.

mod labels;
pub mod persist;
pub mod preprocess;
pub mod split;
pub mod synth;
pub mod table;
pub mod tune;

pub use labels::LabelMap;
pub use persist::{load_model, save_model, ModelDocument, FORMAT_VERSION};
pub use preprocess::{Preprocessing, PreprocessingKind};
pub use split::{stratified_folds, stratified_split, SplitSpec};
pub use synth::{quadrant_label, synth_quadrants};
pub use table::{load_csv, read_csv, write_csv, Table};
pub use tune::{grid_search_cv, Candidate, Grid, TuneOptions, TuneReport};
