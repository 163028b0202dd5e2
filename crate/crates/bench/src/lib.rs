//! Shared fixtures for the criterion benchmarks in `benches/`.

use caat_core::model::init_params;
use caat_core::text::TokenSequence;
use caat_core::{AttentionNorm, ModelConfig, ParamStore, Rng, Tensor2};

/// Mid-size configuration matching the shipped training defaults.
pub fn default_config(vocab_size: usize) -> (ModelConfig, ParamStore) {
    let config = ModelConfig {
        embed_dim: 64,
        hidden: 64,
        layers: 2,
        classes: 3,
        dropout: 0.2,
        max_len: 50,
        finetune_embeddings: true,
        attention_norm: AttentionNorm::Softmax,
    };
    let mut rng = Rng::new(7);
    let mut embedding = Tensor2::zeros(vocab_size, config.embed_dim);
    for r in 1..vocab_size {
        for c in 0..config.embed_dim {
            embedding.set(r, c, rng.uniform(-0.1, 0.1));
        }
    }
    let params = init_params(&config, embedding, &mut rng).expect("benchmark parameters");
    (config, params)
}

/// A full-length sequence of in-vocabulary ids.
pub fn full_sequence(vocab_size: usize, max_len: usize) -> TokenSequence {
    let mut rng = Rng::new(11);
    let ids: Vec<usize> = (0..max_len).map(|_| 1 + rng.below(vocab_size - 1)).collect();
    TokenSequence {
        tokens: ids.iter().map(|i| format!("w{i}")).collect(),
        t: ids.len(),
        ids,
    }
}
