//! Mini-batch Adam training with early stopping on validation loss.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bench::config::ExperimentConfig;
use crate::bench::dataset::{load_dataset_split, Dataset};
use crate::bench::metrics::{ConfusionMatrix, MetricsRecord, MetricsWriter};
use crate::error::{Error, Result};
use crate::grad::{adam_step, AdamConfig, AdamState};
use crate::measure::predict;
use crate::models::{build_model, load_checkpoint, save_checkpoint, Model};
use crate::nn::Tensor;

/// Loss, accuracy and confusion matrix of a model on a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

impl Evaluation {
    pub fn macro_scores(&self) -> (f64, f64, f64) {
        self.confusion.macro_scores()
    }
}

pub fn evaluate(model: &Model, params: &[f64], data: &Dataset) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::shape("cannot evaluate on an empty dataset"));
    }
    let results: Vec<(f64, usize)> = data
        .images
        .par_iter()
        .zip(data.labels.par_iter())
        .map(|(img, &label)| {
            let scores = model.forward_with(params, img)?;
            let (loss, _) = model.loss(&scores, label)?;
            Ok((loss, predict(&scores)))
        })
        .collect::<Result<_>>()?;
    let k = model.config.class_count;
    let mut confusion = ConfusionMatrix::new(k);
    let mut loss = 0.0;
    for ((l, p), &t) in results.iter().zip(&data.labels) {
        loss += l;
        confusion.add(t, *p);
    }
    Ok(Evaluation {
        loss: loss / data.len() as f64,
        accuracy: confusion.accuracy(),
        confusion,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub records: Vec<MetricsRecord>,
    /// 1-based epoch with the lowest validation loss.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub best_val_acc: f64,
    pub param_count: usize,
    pub quantum_param_count: usize,
    /// Model holding the best parameters.
    pub model: Model,
}

/// Loads the configured dataset and trains on it.
pub fn train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (tr, va) = load_dataset_split(
        &cfg.dataset_path,
        cfg.model.image_shape,
        cfg.model.class_count,
        cfg.split_fraction,
        cfg.seed,
    )?;
    train_on(cfg, &tr, &va)
}

/// Trains on explicit splits, writing metrics and the best checkpoint.
pub fn train_on(cfg: &ExperimentConfig, train_set: &Dataset, val_set: &Dataset) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::shape("training and validation sets must be non-empty"));
    }
    let start = Instant::now();
    let mut model = build_model(&cfg.model)?;
    let adam = AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    };
    adam.validate()?;
    let mut state = AdamState::new(model.params.len());
    let mut params = model.params.clone();
    let mut writer = MetricsWriter::create(&cfg.metrics_out_path)?;
    let checkpoint = cfg.checkpoint();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut records = Vec::new();
    let mut best: Option<(usize, f64, f64)> = None;
    let mut best_params = params.clone();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut hits = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let images: Vec<&Tensor> = batch.iter().map(|&i| &train_set.images[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train_set.labels[i]).collect();
            let g = model.batch_gradient(&params, &images, &labels)?;
            loss_sum += g.loss * batch.len() as f64;
            hits += g.scores.iter().zip(&labels).filter(|(s, &l)| predict(s) == l).count();
            adam_step(&mut params, &g.grads, &mut state, &adam)?;
        }
        let val = evaluate(&model, &params, val_set)?;
        let (precision, recall, f1) = val.macro_scores();
        let record = MetricsRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_acc: hits as f64 / train_set.len() as f64,
            val_loss: val.loss,
            val_acc: val.accuracy,
            precision,
            recall,
            f1,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        writer.write(&record)?;
        records.push(record);

        if best.is_none_or(|(_, l, _)| val.loss < l) {
            best = Some((epoch, val.loss, val.accuracy));
            best_params.clone_from(&params);
            model.params.clone_from(&params);
            save_checkpoint(&model, &checkpoint)?;
        }
        let (best_epoch, _, _) = best.expect("set on first epoch");
        if epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    let (best_epoch, best_val_loss, best_val_acc) = best.expect("at least one epoch");
    model.params = best_params;
    Ok(TrainOutcome {
        records,
        best_epoch,
        best_val_loss,
        best_val_acc,
        param_count: model.param_count(),
        quantum_param_count: model.quantum_param_count(),
        model,
    })
}

/// Validation metrics of a checkpointed model.
pub fn eval_checkpoint(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<Evaluation> {
    let mut model = build_model(&cfg.model)?;
    load_checkpoint(&mut model, checkpoint)?;
    let (_, va) = load_dataset_split(
        &cfg.dataset_path,
        cfg.model.image_shape,
        cfg.model.class_count,
        cfg.split_fraction,
        cfg.seed,
    )?;
    evaluate(&model, &model.params, &va)
}
