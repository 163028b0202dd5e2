//! Sequence classification for short social-media texts: a stacked
//! bidirectional LSTM with word-level contextual attention, trained by exact
//! backpropagation with Adam, plus the text pipeline, cross-validation
//! protocol, attention explanations, and model persistence behind it.
//!
//! Everything is deterministic given a seed: the same inputs and seed
//! reproduce training bit for bit.

pub mod error;
pub mod explain;
pub mod io;
pub mod model;
pub mod nn;
pub mod text;
pub mod train;

pub use error::{Error, Result};
pub use explain::{to_ansi, to_html, to_json, HeatmapDoc};
pub use io::{load_dataset, load_model, save_model, Dataset};
pub use model::{
    model_backward, model_forward, predict, AttentionNorm, AttentionResult, ModelBundle,
    ModelConfig, Prediction,
};
pub use nn::{adam_step, grad_check, AdamParams, AdamState, ParamStore, Rng, Tensor2};
pub use text::{
    build_vocab, encode, load_embeddings, tokenize, EmbeddingMatrix, EmbeddingStats,
    LabeledExample, TokenSequence, Vocab,
};
pub use train::{
    cross_validate, evaluate, fit, label_set, metrics_report, stratified_kfold, train,
    weighted_f1, CvReport, EmbeddingSource, EpochStats, FoldReport, FoldSplit, MetricsReport,
    ModelShape, TrainConfig,
};
