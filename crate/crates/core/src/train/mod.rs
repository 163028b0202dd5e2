//! Training protocol: stratified folds, the optimization loop, and scoring.

pub mod kfold;
pub mod metrics;
pub mod trainer;

pub use kfold::{stratified_kfold, FoldSplit};
pub use metrics::{
    confusion_matrix, metrics_report, per_class_metrics, weighted_f1, ClassMetrics, MetricsReport,
};
pub use trainer::{
    cross_validate, evaluate, fit, label_set, train, CvReport, EmbeddingSource, EpochStats,
    FoldReport, ModelShape, TrainConfig,
};
