//! Pretrained word-vector loading with random fallback for missing rows.

use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::rng::Rng;
use crate::nn::tensor::Tensor2;
use crate::text::vocab::{Vocab, PAD_ID};

/// Bound of the uniform range used for rows absent from the vector file.
pub const OOV_INIT_BOUND: f64 = 0.05;

/// Vocabulary-by-dimension matrix of word vectors. Row i is the vector for
/// vocabulary id i; the PAD row is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub weights: Tensor2,
}

impl EmbeddingMatrix {
    pub fn vocab_size(&self) -> usize {
        self.weights.rows()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Coverage of the vocabulary by the vector file. PAD is counted in neither
/// bucket since its row is fixed at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingStats {
    pub found: usize,
    pub missing: usize,
}

/// Read the vector dimension from a file: the second field of a numeric
/// two-field header if present, otherwise the value count of the first record.
pub fn detect_embedding_dim(path: &Path) -> Result<usize> {
    let content = std::fs::read_to_string(path)?;
    let mut lines = content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (line_no, first) = lines
        .next()
        .ok_or_else(|| Error::State("embedding file is empty".into()))?;
    let fields: Vec<&str> = first.split_whitespace().collect();
    if let Some(dim) = header_dim(&fields) {
        return Ok(dim);
    }
    if fields.len() < 2 {
        return Err(Error::Format {
            line: line_no + 1,
            msg: "expected a token followed by at least one value".into(),
        });
    }
    Ok(fields.len() - 1)
}

/// A two-field all-numeric first line is a "count dim" header.
fn header_dim(fields: &[&str]) -> Option<usize> {
    if fields.len() == 2 && fields.iter().all(|f| f.parse::<f64>().is_ok()) {
        fields[1].parse::<usize>().ok()
    } else {
        None
    }
}

/// Load vectors for `vocab` from a whitespace-separated text file: one token
/// then `dim` reals per line. Rows found in the file are copied verbatim
/// (first occurrence wins); the PAD row is zero; every other row, UNK
/// included, is drawn uniform from [-0.05, 0.05]. Missing rows draw in
/// ascending id order, entries in row-major order, so coverage plus seed
/// fixes the matrix exactly.
pub fn load_embeddings(
    path: &Path,
    vocab: &Vocab,
    dim: usize,
    rng: &mut Rng,
) -> Result<(EmbeddingMatrix, EmbeddingStats)> {
    if dim == 0 {
        return Err(Error::Argument("embedding dim must be positive".into()));
    }
    let content = std::fs::read_to_string(path)?;
    let mut weights = Tensor2::zeros(vocab.len(), dim);
    let mut filled = vec![false; vocab.len()];
    let mut saw_record = false;
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !saw_record && header_dim(&fields).is_some() {
            saw_record = true;
            continue;
        }
        saw_record = true;
        if fields.len() != dim + 1 {
            return Err(Error::Format {
                line: line_no,
                msg: format!("expected {} values, found {}", dim, fields.len() - 1),
            });
        }
        let token = fields[0];
        let id = match vocab.id(token) {
            Some(id) if id != PAD_ID && !filled[id] => id,
            _ => continue,
        };
        for (j, field) in fields[1..].iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Format {
                line: line_no,
                msg: format!("bad value {field:?}"),
            })?;
            weights.set(id, j, value);
        }
        filled[id] = true;
    }
    let found = filled.iter().filter(|&&f| f).count();
    fill_missing(&mut weights, &filled, rng);
    let stats = EmbeddingStats {
        found,
        missing: vocab.len() - 1 - found,
    };
    Ok((EmbeddingMatrix { weights }, stats))
}

/// Embeddings with no pretrained file: every row except PAD drawn uniform
/// from [-0.05, 0.05] in the same order load_embeddings uses for misses.
pub fn random_embeddings(vocab: &Vocab, dim: usize, rng: &mut Rng) -> Result<EmbeddingMatrix> {
    if dim == 0 {
        return Err(Error::Argument("embedding dim must be positive".into()));
    }
    let mut weights = Tensor2::zeros(vocab.len(), dim);
    let filled = vec![false; vocab.len()];
    fill_missing(&mut weights, &filled, rng);
    Ok(EmbeddingMatrix { weights })
}

fn fill_missing(weights: &mut Tensor2, filled: &[bool], rng: &mut Rng) {
    for (id, &done) in filled.iter().enumerate() {
        if id == PAD_ID || done {
            continue;
        }
        for j in 0..weights.cols() {
            let v = rng.uniform(-OOV_INIT_BOUND, OOV_INIT_BOUND);
            weights.set(id, j, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::vocab::{build_vocab, UNK_ID};
    use crate::text::LabeledExample;
    use approx::assert_relative_eq;
    use std::io::Write;

    fn vocab_for(texts: &[&str]) -> Vocab {
        let examples: Vec<LabeledExample> = texts
            .iter()
            .map(|t| LabeledExample {
                text: t.to_string(),
                label: "none".to_string(),
            })
            .collect();
        build_vocab(&examples, 1).unwrap()
    }

    fn write_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn copies_file_rows_verbatim() {
        let vocab = vocab_for(&["the cat"]);
        let file = write_file("the 0.1 0.2 0.3\ncat -1.5 0 2.25\n");
        let mut rng = Rng::new(7);
        let (emb, stats) = load_embeddings(file.path(), &vocab, 3, &mut rng).unwrap();
        let the = vocab.id("the").unwrap();
        assert_eq!(emb.weights.row(the), &[0.1, 0.2, 0.3]);
        let cat = vocab.id("cat").unwrap();
        assert_eq!(emb.weights.row(cat), &[-1.5, 0.0, 2.25]);
        assert_eq!(stats.found, 2);
    }

    #[test]
    fn pad_row_is_zero() {
        let vocab = vocab_for(&["the"]);
        let file = write_file("the 0.1 0.2 0.3\n<pad> 9 9 9\n");
        let mut rng = Rng::new(7);
        let (emb, _) = load_embeddings(file.path(), &vocab, 3, &mut rng).unwrap();
        assert_eq!(emb.weights.row(PAD_ID), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn oov_rows_replay_the_generator_stream() {
        // Reserved-only vocab, nothing found in the file: ids 1..6 draw in
        // order, three values each. First six seed-7 draws are pinned.
        let vocab = Vocab::reserved_only();
        let file = write_file("absent 1 2 3\n");
        let mut rng = Rng::new(7);
        let (emb, stats) = load_embeddings(file.path(), &vocab, 3, &mut rng).unwrap();
        assert_eq!(stats.found, 0);
        assert_eq!(stats.missing, 5);
        let unk = emb.weights.row(UNK_ID);
        assert_relative_eq!(unk[0], -0.01101702516087285, max_relative = 1e-15);
        assert_relative_eq!(unk[1], -0.04832117054718439, max_relative = 1e-15);
        assert_relative_eq!(unk[2], 0.04007606806068835, max_relative = 1e-15);
        let url = emb.weights.row(2);
        assert_relative_eq!(url[0], 0.008293029302807807, max_relative = 1e-15);
        assert_relative_eq!(url[1], -0.004755810498853166, max_relative = 1e-15);
        assert_relative_eq!(url[2], -0.025056847771725666, max_relative = 1e-15);
    }

    #[test]
    fn wrong_value_count_reports_line_number() {
        let vocab = vocab_for(&["the cat"]);
        let file = write_file("the 0.1 0.2 0.3\ncat 0.1 0.2\n");
        let mut rng = Rng::new(7);
        let err = load_embeddings(file.path(), &vocab, 3, &mut rng).unwrap_err();
        match err {
            Error::Format { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("expected 3 values"));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_float_reports_line_number() {
        let vocab = vocab_for(&["the"]);
        let file = write_file("the 0.1 oops 0.3\n");
        let mut rng = Rng::new(7);
        let err = load_embeddings(file.path(), &vocab, 3, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
    }

    #[test]
    fn numeric_two_field_header_is_skipped() {
        let vocab = vocab_for(&["the"]);
        let file = write_file("1 3\nthe 0.1 0.2 0.3\n");
        let mut rng = Rng::new(7);
        let (emb, stats) = load_embeddings(file.path(), &vocab, 3, &mut rng).unwrap();
        assert_eq!(stats.found, 1);
        assert_eq!(emb.weights.row(vocab.id("the").unwrap()), &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn first_occurrence_wins_on_duplicates() {
        let vocab = vocab_for(&["the"]);
        let file = write_file("the 1 1 1\nthe 2 2 2\n");
        let mut rng = Rng::new(7);
        let (emb, _) = load_embeddings(file.path(), &vocab, 3, &mut rng).unwrap();
        assert_eq!(emb.weights.row(vocab.id("the").unwrap()), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn detect_dim_with_and_without_header() {
        let with = write_file("400000 300\nthe 0.1 0.2\n");
        assert_eq!(detect_embedding_dim(with.path()).unwrap(), 300);
        let without = write_file("the 0.1 0.2 0.3 0.4\n");
        assert_eq!(detect_embedding_dim(without.path()).unwrap(), 4);
    }

    #[test]
    fn missing_file_is_io_error() {
        let vocab = Vocab::reserved_only();
        let mut rng = Rng::new(7);
        let err = load_embeddings(Path::new("/no/such/file"), &vocab, 3, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn random_embeddings_match_all_missing_load() {
        let vocab = vocab_for(&["alpha beta"]);
        let file = write_file("unrelated 1 2 3 4\n");
        let mut rng_a = Rng::new(99);
        let (loaded, _) = load_embeddings(file.path(), &vocab, 4, &mut rng_a).unwrap();
        let mut rng_b = Rng::new(99);
        let random = random_embeddings(&vocab, 4, &mut rng_b).unwrap();
        assert_eq!(loaded, random);
    }
}
