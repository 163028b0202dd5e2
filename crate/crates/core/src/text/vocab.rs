//! Vocabulary construction and id-sequence encoding.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::text::tokenize::{tokenize, ENTITY_MARKERS};
use crate::text::LabeledExample;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Reserved tokens, always present at fixed ids: padding, unknown, then the
/// tokenizer's entity markers.
pub fn reserved_tokens() -> Vec<&'static str> {
    let mut reserved = vec![PAD_TOKEN, UNK_TOKEN];
    reserved.extend(ENTITY_MARKERS);
    reserved
}

/// Bidirectional token/id map with fixed reserved ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocab {
    /// Just the reserved tokens.
    pub fn reserved_only() -> Self {
        let tokens: Vec<String> = reserved_tokens().iter().map(|s| s.to_string()).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab { index, tokens }
    }

    /// Rebuild from an id-ordered token list (as persisted in model files).
    /// The list must start with the reserved tokens and contain no duplicates.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let reserved = reserved_tokens();
        if tokens.len() < reserved.len()
            || tokens[..reserved.len()]
                .iter()
                .zip(&reserved)
                .any(|(a, b)| a != b)
        {
            return Err(Error::State(
                "vocabulary does not start with the reserved tokens".into(),
            ));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::State(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocab { index, tokens })
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> usize {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Count tokens over the corpus and keep those seen at least `min_freq`
/// times, ordered by (frequency desc, token asc) after the reserved block.
pub fn build_vocab(examples: &[LabeledExample], min_freq: usize) -> Result<Vocab> {
    if min_freq < 1 {
        return Err(Error::Argument(format!(
            "min_freq must be at least 1, got {min_freq}"
        )));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for example in examples {
        for token in tokenize(&example.text) {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut vocab = Vocab::reserved_only();
    let mut kept: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(token, freq)| *freq >= min_freq && !vocab.index.contains_key(token))
        .collect();
    kept.sort_by(|(ta, fa), (tb, fb)| fb.cmp(fa).then_with(|| ta.cmp(tb)));
    for (token, _) in kept {
        let id = vocab.tokens.len();
        vocab.index.insert(token.clone(), id);
        vocab.tokens.push(token);
    }
    Ok(vocab)
}

/// Normalized tokens of one message plus their aligned vocabulary ids.
/// Both vectors are padded to the encoder's `max_len`; `t` is the true
/// (pre-padding) token count.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub ids: Vec<usize>,
    pub t: usize,
}

impl TokenSequence {
    /// Tokens without the padding tail.
    pub fn unpadded_tokens(&self) -> &[String] {
        &self.tokens[..self.t]
    }

    /// Ids without the padding tail.
    pub fn unpadded_ids(&self) -> &[usize] {
        &self.ids[..self.t]
    }
}

/// Map tokens to ids (unknowns to `<unk>`), truncate to `max_len` keeping
/// the head, and right-pad with `<pad>` up to `max_len`.
pub fn encode(tokens: &[String], vocab: &Vocab, max_len: usize) -> Result<TokenSequence> {
    if max_len < 1 {
        return Err(Error::Argument(format!(
            "max_len must be at least 1, got {max_len}"
        )));
    }
    let t = tokens.len().min(max_len);
    let mut out_tokens: Vec<String> = tokens[..t].to_vec();
    let mut ids: Vec<usize> = out_tokens.iter().map(|tok| vocab.id_or_unk(tok)).collect();
    out_tokens.resize(max_len, PAD_TOKEN.to_string());
    ids.resize(max_len, PAD_ID);
    Ok(TokenSequence {
        tokens: out_tokens,
        ids,
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(texts: &[&str]) -> Vec<LabeledExample> {
        texts
            .iter()
            .map(|t| LabeledExample {
                text: t.to_string(),
                label: "none".to_string(),
            })
            .collect()
    }

    #[test]
    fn reserved_ids_are_fixed() {
        let v = Vocab::reserved_only();
        assert_eq!(v.id(PAD_TOKEN), Some(0));
        assert_eq!(v.id(UNK_TOKEN), Some(1));
        assert_eq!(v.id("<url>"), Some(2));
        assert_eq!(v.id("<user>"), Some(3));
        assert_eq!(v.id("<number>"), Some(4));
        assert_eq!(v.id("<hashtag>"), Some(5));
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn min_freq_one_keeps_everything() {
        let v = build_vocab(&corpus(&["a b", "b"]), 1).unwrap();
        assert!(v.id("a").is_some());
        assert!(v.id("b").is_some());
        // b occurs twice, a once: frequency order puts b first.
        assert!(v.id("b").unwrap() < v.id("a").unwrap());
    }

    #[test]
    fn min_freq_two_filters_singletons() {
        let v = build_vocab(&corpus(&["a b", "b"]), 2).unwrap();
        assert!(v.id("a").is_none());
        assert!(v.id("b").is_some());
    }

    #[test]
    fn empty_corpus_is_reserved_only() {
        let v = build_vocab(&[], 1).unwrap();
        assert_eq!(v.len(), reserved_tokens().len());
    }

    #[test]
    fn ties_break_alphabetically() {
        let v = build_vocab(&corpus(&["zebra apple"]), 1).unwrap();
        assert!(v.id("apple").unwrap() < v.id("zebra").unwrap());
    }

    #[test]
    fn encode_pads_and_records_true_length() {
        let v = build_vocab(&corpus(&["hello world"]), 1).unwrap();
        let seq = encode(&tokenize("hello world"), &v, 5).unwrap();
        assert_eq!(seq.t, 2);
        assert_eq!(seq.ids.len(), 5);
        assert_eq!(seq.tokens.len(), 5);
        assert_eq!(&seq.ids[2..], &[PAD_ID, PAD_ID, PAD_ID]);
        assert_eq!(seq.unpadded_tokens(), &["hello", "world"]);
    }

    #[test]
    fn encode_maps_unknowns_to_unk() {
        let v = Vocab::reserved_only();
        let seq = encode(&tokenize("mystery"), &v, 3).unwrap();
        assert_eq!(seq.ids[0], UNK_ID);
    }

    #[test]
    fn encode_truncates_keeping_head() {
        let v = Vocab::reserved_only();
        let tokens: Vec<String> = (0..60).map(|i| format!("tok{i}")).collect();
        let seq = encode(&tokens, &v, 50).unwrap();
        assert_eq!(seq.t, 50);
        assert_eq!(seq.tokens[0], "tok0");
        assert_eq!(seq.tokens[49], "tok49");
    }

    #[test]
    fn encode_rejects_zero_max_len() {
        let v = Vocab::reserved_only();
        assert!(encode(&[], &v, 0).is_err());
    }

    #[test]
    fn vocab_roundtrips_through_token_list() {
        let v = build_vocab(&corpus(&["good bad good"]), 1).unwrap();
        let rebuilt = Vocab::from_tokens(v.tokens().to_vec()).unwrap();
        assert_eq!(v, rebuilt);
    }

    #[test]
    fn from_tokens_rejects_missing_reserved_prefix() {
        assert!(Vocab::from_tokens(vec!["a".into(), "b".into()]).is_err());
    }
}
