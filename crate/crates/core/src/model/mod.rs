//! Network architecture: LSTM layers, attention, and the assembled model.

pub mod attention;
pub mod lstm;
pub mod network;

pub use attention::{
    attention_backward, attention_forward, AttentionCache, AttentionGrads, AttentionNorm,
    AttentionParams, AttentionResult,
};
pub use lstm::{
    bilstm_backward, bilstm_forward, lstm_cell_backward, lstm_cell_forward,
    lstm_sequence_backward, lstm_sequence_forward, BiLstmCache, LstmCellCache, LstmCellGrads,
    LstmCellParams, LstmSeqCache,
};
pub use network::{
    init_params, model_backward, model_forward, predict, ModelBundle, ModelCache, ModelConfig,
    Prediction,
};
