//! Granular-ball twin support vector classification.
//!
//! The crate trains a K-class twin SVM over granular balls: training data
//! is compressed into purity-filtered balls by recursive k-means, every
//! ordered class pair gets two non-parallel separating planes from a pair
//! of small box-constrained QPs, and prediction tallies ternary votes
//! across the pairs. Zero-radius balls recover the point-based Twin-KSVC
//! formulation; a one-vs-rest twin SVM baseline and an evaluation harness
//! (stratified CV, grid search, paired significance tests) round out the
//! toolkit.

pub mod dataio;
pub mod error;
pub mod evaluation;
pub mod granulation;
pub mod kernels;
pub mod multiclass;
pub mod numerics;
pub mod twinpair;

pub use dataio::{load_csv, load_model, save_model, Dataset, DatasetSpec, LabelColumn};
pub use error::{Error, Result};
pub use evaluation::{
    accuracy, grid_search, kfold_cv, macro_ovr_auc, paired_t_test, stratified_folds,
    stratified_split, wilcoxon_signed_rank, ChosenParams, EvalReport, GridOutcome, GridSpec,
    TestKind, TestResult,
};
pub use granulation::{generate_balls, generate_balls_with_members, BallSet, GranularBall, LabeledDataset};
pub use kernels::KernelSpec;
pub use multiclass::{
    predict, train, GranulationSettings, ModelKind, TrainConfig, TrainedModel,
    MODEL_FORMAT_VERSION,
};
pub use numerics::{solve_box_qp, BoxQp, DualSolution, Matrix};
pub use twinpair::{HyperParams, PlanePair};
