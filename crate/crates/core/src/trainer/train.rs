use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::checkpoint::save_checkpoint;
use super::data::load_prepared;
use super::kfold::kfold_split;
use super::metrics::Metrics;
use crate::error::{Error, Result};
use crate::featenc::EncoderConfig;
use crate::matgen::DatasetManifest;
use crate::nn::{
    argmax_rows, cross_entropy, AdamConfig, AdamState, BatchedGraphs, Mode, Model, PreparedGraph,
    Tape, DEFAULT_DROPOUT, DEFAULT_HIDDEN_DIM,
};
use crate::rng;

/// Which epoch's weights a fold keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSelection {
    BestValidation,
    LastEpoch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub manifest: PathBuf,
    pub encoder: EncoderConfig,
    pub batch_size: usize,
    pub lr: f64,
    pub folds: usize,
    pub epochs: usize,
    /// Stop after this many epochs without a new best validation loss.
    pub patience: Option<usize>,
    pub selection: ModelSelection,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub seed: u64,
    /// Where checkpoints, loss curves and reports go; nothing is written when unset.
    pub output_dir: Option<PathBuf>,
}

impl TrainConfig {
    pub fn new(manifest: impl Into<PathBuf>, encoder: EncoderConfig) -> Self {
        Self {
            manifest: manifest.into(),
            encoder,
            batch_size: 256,
            lr: 0.01,
            folds: 5,
            epochs: 50,
            patience: Some(10),
            selection: ModelSelection::BestValidation,
            hidden_dim: DEFAULT_HIDDEN_DIM,
            dropout: DEFAULT_DROPOUT,
            seed: 0,
            output_dir: None,
        }
    }

    /// Batch size actually used: one-hot features train one graph at a time.
    pub fn effective_batch_size(&self) -> usize {
        if self.encoder.is_onehot() {
            1
        } else {
            self.batch_size
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::invalid(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate {} must be positive", self.lr)));
        }
        self.encoder.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Epoch (0-based) whose weights were kept.
    pub selected_epoch: usize,
    /// Validation metrics of the kept weights.
    pub metrics: Metrics,
    /// Accuracy of the kept weights on the fold's training graphs.
    pub train_accuracy: f64,
    pub checkpoint: Option<PathBuf>,
}

impl FoldResult {
    pub fn epochs_run(&self) -> usize {
        self.train_loss.len()
    }

    /// `epoch\ttrain_loss\tval_loss` table.
    pub fn loss_curve_tsv(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tval_loss\n");
        for (e, (t, v)) in self.train_loss.iter().zip(&self.val_loss).enumerate() {
            let _ = writeln!(out, "{}\t{t:.8}\t{v:.8}", e + 1);
        }
        out
    }
}

pub fn mean_accuracy(folds: &[FoldResult]) -> f64 {
    folds.iter().map(|f| f.metrics.accuracy).sum::<f64>() / folds.len().max(1) as f64
}

/// Per-class accuracy averaged over folds.
pub fn mean_class_accuracy(folds: &[FoldResult]) -> Vec<f64> {
    let Some(first) = folds.first() else {
        return Vec::new();
    };
    (0..first.metrics.class_names.len())
        .map(|k| folds.iter().map(|f| f.metrics.per_class[k].accuracy).sum::<f64>() / folds.len() as f64)
        .collect()
}

/// Summary table over folds: per-fold accuracy and F1 plus the means.
pub fn summary_tsv(folds: &[FoldResult]) -> String {
    let mut out = String::from("fold\taccuracy\tf1\tselected_epoch\tepochs_run\n");
    for f in folds {
        let _ = writeln!(
            out,
            "{}\t{:.4}\t{:.4}\t{}\t{}",
            f.fold,
            f.metrics.accuracy,
            f.metrics.f1,
            f.selected_epoch + 1,
            f.epochs_run()
        );
    }
    let mean_f1 = folds.iter().map(|f| f.metrics.f1).sum::<f64>() / folds.len().max(1) as f64;
    let _ = writeln!(out, "mean\t{:.4}\t{:.4}\t\t", mean_accuracy(folds), mean_f1);
    if let Some(first) = folds.first() {
        for (name, acc) in first.metrics.class_names.iter().zip(mean_class_accuracy(folds)) {
            let _ = writeln!(out, "mean_class_accuracy\t{name}\t{acc:.4}");
        }
    }
    out
}

/// Loads the manifest and runs stratified k-fold training.
pub fn train(config: &TrainConfig) -> Result<Vec<FoldResult>> {
    config.validate()?;
    let manifest = DatasetManifest::read(&config.manifest)?;
    if manifest.is_empty() {
        return Err(Error::InvalidInput(format!(
            "manifest {} has no entries",
            config.manifest.display()
        )));
    }
    let samples = load_prepared(&manifest, &config.encoder, false)?;
    train_prepared(&samples, &manifest.class_names, config)
}

/// k-fold training over already encoded graphs.
pub fn train_prepared(
    samples: &[PreparedGraph],
    class_names: &[String],
    config: &TrainConfig,
) -> Result<Vec<FoldResult>> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidInput("no training samples".into()));
    }
    let width = config.encoder.width();
    if let Some(s) = samples.iter().find(|s| s.features.ncols() != width) {
        return Err(Error::Shape(format!(
            "sample features have width {}, {} encoder produces {width}",
            s.features.ncols(),
            config.encoder.name()
        )));
    }
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let splits = kfold_split(&labels, config.folds, config.seed)?;
    let mut results = Vec::with_capacity(splits.len());
    for (fold, (train_idx, val_idx)) in splits.iter().enumerate() {
        results.push(train_fold(samples, class_names, config, fold, train_idx, val_idx)?);
    }
    if let Some(dir) = &config.output_dir {
        let path = dir.join("summary.tsv");
        std::fs::write(&path, summary_tsv(&results)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(results)
}

/// Mean cross-entropy and predictions over `idx`, dropout off.
pub fn evaluate_indices(
    model: &Model,
    samples: &[PreparedGraph],
    idx: &[usize],
    batch_size: usize,
) -> Result<(f64, Vec<usize>)> {
    let mut total = 0.0;
    let mut preds = Vec::with_capacity(idx.len());
    for chunk in idx.chunks(batch_size.max(1)) {
        let refs: Vec<&PreparedGraph> = chunk.iter().map(|&i| &samples[i]).collect();
        let batch = BatchedGraphs::new(&refs)?;
        let logits = model.forward_eval(&batch)?;
        let (loss, _) = cross_entropy(logits.view(), batch.labels())?;
        total += loss * chunk.len() as f64;
        preds.extend(argmax_rows(logits.view()));
    }
    Ok((total / idx.len().max(1) as f64, preds))
}

/// One pass over `idx` in the given order with Adam updates; returns the
/// sample-weighted mean training loss.
pub fn train_epoch(
    model: &mut Model,
    adam: &mut AdamState,
    samples: &[PreparedGraph],
    idx: &[usize],
    batch_size: usize,
    dropout_rng: &mut rng::StreamRng,
) -> Result<f64> {
    let mut tape = Tape::new();
    let mut total = 0.0;
    for chunk in idx.chunks(batch_size.max(1)) {
        let refs: Vec<&PreparedGraph> = chunk.iter().map(|&i| &samples[i]).collect();
        let batch = BatchedGraphs::new(&refs)?;
        let logits = model.forward(&batch, Mode::Train(dropout_rng), &mut tape)?;
        let (loss, grad) = cross_entropy(logits.view(), batch.labels())?;
        if !loss.is_finite() {
            return Err(Error::InvalidInput(format!("training loss became {loss}")));
        }
        let grads = model.backward(&batch, &tape, grad.view())?;
        tape.clear();
        model.apply_adam(&grads, adam)?;
        total += loss * chunk.len() as f64;
    }
    Ok(total / idx.len().max(1) as f64)
}

fn train_fold(
    samples: &[PreparedGraph],
    class_names: &[String],
    config: &TrainConfig,
    fold: usize,
    train_idx: &[usize],
    val_idx: &[usize],
) -> Result<FoldResult> {
    let fold_seed = rng::derive_seed(config.seed, fold as u64 + 1);
    let mut model = Model::new(
        config.encoder,
        class_names.to_vec(),
        config.hidden_dim,
        config.dropout,
        fold_seed,
    )?;
    let adam_cfg = AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::new(adam_cfg, &model.param_sizes());
    let batch_size = config.effective_batch_size();
    let mut dropout_rng = rng::stream(fold_seed, 1);
    let mut order = train_idx.to_vec();

    let mut train_loss = Vec::new();
    let mut val_loss = Vec::new();
    let mut best: Option<(f64, usize, Model)> = None;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng::stream(fold_seed, 2 + epoch as u64));
        let tl = train_epoch(&mut model, &mut adam, samples, &order, batch_size, &mut dropout_rng)?;
        let (vl, _) = evaluate_indices(&model, samples, val_idx, config.batch_size)?;
        train_loss.push(tl);
        val_loss.push(vl);
        if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
            best = Some((vl, epoch, model.clone()));
        }
        let best_epoch = best.as_ref().map_or(epoch, |b| b.1);
        if config.patience.is_some_and(|p| epoch - best_epoch >= p) {
            break;
        }
    }
    let (selected_epoch, model) = match config.selection {
        ModelSelection::BestValidation => {
            let (_, e, m) = best.expect("at least one epoch ran");
            (e, m)
        }
        ModelSelection::LastEpoch => (train_loss.len() - 1, model),
    };

    let (_, val_pred) = evaluate_indices(&model, samples, val_idx, config.batch_size)?;
    let pairs: Vec<(usize, usize)> = val_idx.iter().map(|&i| samples[i].label).zip(val_pred).collect();
    let metrics = Metrics::from_pairs(class_names, &pairs)?;
    let (_, train_pred) = evaluate_indices(&model, samples, train_idx, config.batch_size)?;
    let train_correct = train_idx
        .iter()
        .zip(&train_pred)
        .filter(|(&i, &p)| samples[i].label == p)
        .count();
    let train_accuracy = train_correct as f64 / train_idx.len().max(1) as f64;

    let mut result = FoldResult {
        fold,
        train_loss,
        val_loss,
        selected_epoch,
        metrics,
        train_accuracy,
        checkpoint: None,
    };
    if let Some(dir) = &config.output_dir {
        result.checkpoint = Some(write_fold_outputs(dir, &result, &model)?);
    }
    Ok(result)
}

fn write_fold_outputs(dir: &Path, result: &FoldResult, model: &Model) -> Result<PathBuf> {
    let fold_dir = dir.join(format!("fold_{}", result.fold));
    std::fs::create_dir_all(&fold_dir).map_err(|e| Error::io(&fold_dir, e))?;
    let ckpt = fold_dir.join("model.json");
    save_checkpoint(model, &ckpt)?;
    for (name, body) in [
        ("loss.tsv", result.loss_curve_tsv()),
        ("metrics.tsv", result.metrics.report()),
        ("confusion.tsv", result.metrics.confusion_tsv()),
    ] {
        let p = fold_dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    Ok(ckpt)
}
