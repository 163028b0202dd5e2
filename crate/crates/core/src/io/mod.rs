//! Dataset files and the persisted model format.

pub mod bundle;
pub mod dataset;

pub use bundle::{load_model, save_model, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use dataset::{load_dataset, matches_known_corpus, Dataset};
