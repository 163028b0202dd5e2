//! Mini-batch training loop and the cross-validation protocol around it.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::attention::AttentionNorm;
use crate::model::network::{model_backward, model_forward, predict, ModelBundle, ModelConfig};
use crate::nn::adam::{adam_step, AdamParams, AdamState};
use crate::nn::ops::{cross_entropy, cross_entropy_grad};
use crate::nn::rng::Rng;
use crate::text::{
    build_vocab, detect_embedding_dim, encode, load_embeddings, random_embeddings, tokenize,
    EmbeddingMatrix, EmbeddingStats, LabeledExample, TokenSequence, Vocab,
};
use crate::train::kfold::{stratified_kfold, FoldSplit};
use crate::train::metrics::{metrics_report, weighted_f1, MetricsReport};

/// Optimization schedule. `dropout` here is what training actually applies;
/// a bundle's own dropout field is inert outside training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub folds: usize,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            epochs: 10,
            dropout: 0.2,
            batch_size: 32,
            seed: 42,
            folds: 10,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::Argument(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.epochs < 1 {
            return Err(Error::Argument("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Argument("batch size must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Argument(format!("need at least 2 folds, got {}", self.folds)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Argument(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }
}

/// Mean cross-entropy over the examples visited in one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
}

/// Architecture and text-pipeline settings that, combined with quantities
/// read from the data (embedding width, class count), pin down a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelShape {
    pub hidden: usize,
    pub layers: usize,
    pub max_len: usize,
    pub min_freq: usize,
    pub finetune_embeddings: bool,
    pub attention_norm: AttentionNorm,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            hidden: 64,
            layers: 2,
            max_len: 50,
            min_freq: 2,
            finetune_embeddings: true,
            attention_norm: AttentionNorm::Softmax,
        }
    }
}

/// Where initial word vectors come from: a pretrained text file, or uniform
/// random vectors of a chosen width when no pretrained file is available.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingSource {
    File(PathBuf),
    Random { dim: usize },
}

fn build_embeddings(
    source: &EmbeddingSource,
    vocab: &Vocab,
    rng: &mut Rng,
) -> Result<(EmbeddingMatrix, EmbeddingStats)> {
    match source {
        EmbeddingSource::File(path) => {
            let dim = detect_embedding_dim(path)?;
            load_embeddings(path, vocab, dim, rng)
        }
        EmbeddingSource::Random { dim } => {
            let matrix = random_embeddings(vocab, *dim, rng)?;
            let stats = EmbeddingStats {
                found: 0,
                missing: vocab.len().saturating_sub(1),
            };
            Ok((matrix, stats))
        }
    }
}

fn label_index(labels: &[String]) -> HashMap<&str, usize> {
    labels
        .iter()
        .enumerate()
        .map(|(i, name)| (name.as_str(), i))
        .collect()
}

/// Distinct labels in ascending order. This is the canonical class order used
/// everywhere a label becomes an index.
pub fn label_set(examples: &[LabeledExample]) -> Vec<String> {
    let mut names: Vec<String> = examples.iter().map(|e| e.label.clone()).collect();
    names.sort();
    names.dedup();
    names
}

fn encode_examples(
    examples: &[LabeledExample],
    vocab: &Vocab,
    max_len: usize,
    labels: &HashMap<&str, usize>,
) -> Result<Vec<(TokenSequence, usize)>> {
    let mut out = Vec::with_capacity(examples.len());
    for (i, ex) in examples.iter().enumerate() {
        let tokens = tokenize(&ex.text);
        if tokens.is_empty() {
            return Err(Error::Argument(format!("example {i}: text produced no tokens")));
        }
        let class = *labels.get(ex.label.as_str()).ok_or_else(|| {
            Error::Argument(format!("example {i}: label {:?} not in the model's label set", ex.label))
        })?;
        out.push((encode(&tokens, vocab, max_len)?, class));
    }
    Ok(out)
}

/// Train `bundle` in place: `epochs` passes of seeded shuffle, mini-batches
/// with gradients averaged over the batch, and one Adam step per batch. All
/// randomness (example order, dropout masks) is drawn from `rng`, so a fixed
/// seed reproduces the run bit for bit. Returns the mean loss per epoch.
///
/// A non-finite loss aborts immediately, naming the epoch and batch.
pub fn train(
    bundle: &mut ModelBundle,
    examples: &[LabeledExample],
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<Vec<EpochStats>> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::Argument("cannot train on an empty example set".into()));
    }
    let labels = label_index(&bundle.label_names);
    let encoded = encode_examples(examples, &bundle.vocab, bundle.config.max_len, &labels)?;

    let mut run_cfg = bundle.config.clone();
    run_cfg.dropout = config.dropout;
    run_cfg.validate()?;

    let hp = AdamParams { lr: config.lr, ..Default::default() };
    let mut adam = AdamState::new(&bundle.params);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        if config.shuffle {
            rng.shuffle(&mut order);
        }
        let mut loss_sum = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            bundle.params.zero_grads();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (seq, class) = &encoded[i];
                let (probs, _, cache) =
                    model_forward(seq, &bundle.params, &run_cfg, rng, true).map_err(|e| {
                        match e {
                            Error::Numeric(msg) => Error::Numeric(format!(
                                "epoch {epoch}, batch {batch_idx}: {msg}"
                            )),
                            other => other,
                        }
                    })?;
                let loss = cross_entropy(&probs, *class)?;
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite loss {loss} at epoch {epoch}, batch {batch_idx}"
                    )));
                }
                loss_sum += loss;
                let mut grad = cross_entropy_grad(&probs, *class)?;
                for g in &mut grad {
                    *g *= scale;
                }
                model_backward(&cache, &mut bundle.params, &run_cfg, &grad)?;
            }
            adam_step(&mut bundle.params, &mut adam, &hp)?;
        }
        history.push(EpochStats {
            epoch,
            mean_loss: loss_sum / encoded.len() as f64,
        });
    }
    Ok(history)
}

/// Run the model over `examples` without dropout and score predictions
/// against the true labels.
pub fn evaluate(bundle: &ModelBundle, examples: &[LabeledExample]) -> Result<MetricsReport> {
    if examples.is_empty() {
        return Err(Error::Argument("cannot evaluate an empty example set".into()));
    }
    let labels = label_index(&bundle.label_names);
    let mut truth = Vec::with_capacity(examples.len());
    let mut predicted = Vec::with_capacity(examples.len());
    for (i, ex) in examples.iter().enumerate() {
        let class = *labels.get(ex.label.as_str()).ok_or_else(|| {
            Error::Argument(format!("example {i}: label {:?} not in the model's label set", ex.label))
        })?;
        truth.push(class);
        predicted.push(predict(&ex.text, bundle)?.label_index);
    }
    metrics_report(&truth, &predicted, &bundle.label_names)
}

/// Build a fresh model for `examples` (vocabulary, initial embeddings,
/// parameters) and train it. `label_names` is passed in rather than derived
/// so cross-validation can hold the class set fixed across folds.
pub fn fit(
    examples: &[LabeledExample],
    label_names: &[String],
    source: &EmbeddingSource,
    shape: &ModelShape,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<(ModelBundle, Vec<EpochStats>, EmbeddingStats)> {
    let vocab = build_vocab(examples, shape.min_freq)?;
    let (embeddings, stats) = build_embeddings(source, &vocab, rng)?;
    let model_cfg = ModelConfig {
        embed_dim: embeddings.dim(),
        hidden: shape.hidden,
        layers: shape.layers,
        classes: label_names.len(),
        dropout: config.dropout,
        max_len: shape.max_len,
        finetune_embeddings: shape.finetune_embeddings,
        attention_norm: shape.attention_norm,
    };
    let mut bundle = ModelBundle::new(model_cfg, vocab, label_names.to_vec(), &embeddings, rng)?;
    let history = train(&mut bundle, examples, config, rng)?;
    Ok((bundle, history, stats))
}

/// One held-out fold's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_examples: usize,
    pub test_examples: usize,
    pub weighted_f1: f64,
    pub metrics: MetricsReport,
}

/// Aggregate over all folds. `mean_weighted_f1` is the unweighted mean of
/// per-fold scores; `pooled_weighted_f1` rescores the summed confusion
/// matrix, which weights folds by their example counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub per_fold: Vec<FoldReport>,
    pub mean_weighted_f1: f64,
    pub pooled_weighted_f1: f64,
    pub confusion: Vec<Vec<usize>>,
}

fn run_fold(
    fold: usize,
    split: &FoldSplit,
    examples: &[LabeledExample],
    label_names: &[String],
    source: &EmbeddingSource,
    shape: &ModelShape,
    config: &TrainConfig,
) -> Result<FoldReport> {
    let train_set: Vec<LabeledExample> = split
        .train_indices(fold)
        .iter()
        .map(|&i| examples[i].clone())
        .collect();
    let test_set: Vec<LabeledExample> =
        split.folds[fold].iter().map(|&i| examples[i].clone()).collect();

    let mut rng = Rng::new(config.seed.wrapping_add(fold as u64));
    let (bundle, _history, _stats) =
        fit(&train_set, label_names, source, shape, config, &mut rng)?;
    let metrics = evaluate(&bundle, &test_set)?;
    Ok(FoldReport {
        fold,
        train_examples: train_set.len(),
        test_examples: test_set.len(),
        weighted_f1: metrics.weighted_f1,
        metrics,
    })
}

/// Stratified k-fold cross-validation: for each fold, rebuild the vocabulary
/// and embeddings from the training folds only, train a fresh model, and
/// score the held-out fold. The class set is fixed globally so fold reports
/// share one label order.
///
/// Folds run on up to `jobs` worker threads. Each fold draws from its own
/// generator seeded `seed + fold`, so the report does not depend on `jobs`.
pub fn cross_validate(
    examples: &[LabeledExample],
    source: &EmbeddingSource,
    shape: &ModelShape,
    config: &TrainConfig,
    jobs: usize,
) -> Result<CvReport> {
    config.validate()?;
    let label_names = label_set(examples);
    let labels = label_index(&label_names);
    let classes: Vec<usize> = examples
        .iter()
        .map(|e| labels[e.label.as_str()])
        .collect();
    let split = stratified_kfold(&classes, config.folds, config.seed)?;
    let k = split.k();

    let workers = jobs.clamp(1, k);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<FoldReport>>>> =
        Mutex::new((0..k).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let fold = next.fetch_add(1, Ordering::Relaxed);
                if fold >= k {
                    break;
                }
                let outcome = run_fold(
                    fold,
                    &split,
                    examples,
                    &label_names,
                    source,
                    shape,
                    config,
                )
                .map_err(|e| Error::Fold { fold, source: Box::new(e) });
                slots.lock().unwrap()[fold] = Some(outcome);
            });
        }
    });

    let mut per_fold = Vec::with_capacity(k);
    for slot in slots.into_inner().unwrap() {
        per_fold.push(slot.expect("every fold index was claimed by a worker")?);
    }

    let mean = per_fold.iter().map(|f| f.weighted_f1).sum::<f64>() / k as f64;
    let classes_n = label_names.len();
    let mut pooled = vec![vec![0usize; classes_n]; classes_n];
    for fold in &per_fold {
        for (t, row) in fold.metrics.confusion.iter().enumerate() {
            for (p, &count) in row.iter().enumerate() {
                pooled[t][p] += count;
            }
        }
    }
    let pooled_f1 = weighted_f1(&pooled)?;
    Ok(CvReport {
        per_fold,
        mean_weighted_f1: mean,
        pooled_weighted_f1: pooled_f1,
        confusion: pooled,
    })
}
