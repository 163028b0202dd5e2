//! Text pipeline: tokenization, vocabulary, id encoding, word vectors.

pub mod embedding;
pub mod tokenize;
pub mod vocab;

pub use embedding::{
    detect_embedding_dim, load_embeddings, random_embeddings, EmbeddingMatrix, EmbeddingStats,
    OOV_INIT_BOUND,
};
pub use tokenize::{
    tokenize, ENTITY_MARKERS, HASHTAG_MARKER, NUMBER_MARKER, URL_MARKER, USER_MARKER,
};
pub use vocab::{
    build_vocab, encode, reserved_tokens, TokenSequence, Vocab, PAD_ID, PAD_TOKEN, UNK_ID,
    UNK_TOKEN,
};

/// One dataset record: raw message text and its class name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub text: String,
    pub label: String,
}
