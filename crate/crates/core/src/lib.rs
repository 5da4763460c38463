//! Heuristic selection of RBF-SVM parameters.
//!
//! The crate bundles unsupervised estimators of the kernel width `gamma`
//! and the soft-margin penalty `C` ([`heuristics`]), a from-scratch SMO
//! kernel SVM with one-vs-one multiclass voting ([`svm`]), dataset handling
//! ([`data`]) and a nested cross-validation harness that compares the
//! estimators against grid search ([`eval`], [`report`]).

pub mod data;
pub mod error;
pub mod eval;
pub mod heuristics;
pub mod kernel;
pub mod report;
pub mod rng;
pub mod svm;

pub use data::{DataFormat, Dataset, FoldPlan, LabelColumn, LabeledSubset, RawTable, Scaler};
pub use error::{Error, Result};
pub use eval::{CvConfig, ExperimentReport, RunScores, Strategy, SubsampleConfig};
pub use heuristics::{HeuristicId, HeuristicInput, SvmParams};
pub use kernel::DistanceSample;
pub use svm::{BinaryModel, MulticlassModel, SolverConfig};
