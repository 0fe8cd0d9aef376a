//! Squared-hinge training, stratified cross-validation and evaluation.

mod kfold;
mod loss;
mod optim;
mod report;
mod trainer;

pub use kfold::{stratified_kfold, Split};
pub use loss::squared_hinge_loss;
pub use optim::Adam;
pub use report::{
    confusion_csv, CvSummary, DatasetInfo, FoldReport, ResultsDocument, SubjectResult, RESULTS_FORMAT, RESULTS_VERSION,
};
pub use trainer::{
    argmax, batch_tensor, cross_validate, derive_seed, evaluate, evaluate_scores, fit_input_norm, predict_scores,
    train_one_fold, CvOutcome, Evaluation, TrainConfig, TrainOutcome,
};
