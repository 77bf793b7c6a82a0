use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::augment::{random_crop, to_input};
use super::loss::{cross_entropy, mean_squared_error};
use super::optim::OptimizerState;
use super::{lr_at_epoch, save_checkpoint, softmax, Augment, Network, Tensor, TrainConfig, WetnessClass};
use crate::error::{Error, Result};
use crate::imaging::{BoundingBox, Image};

/// Side of the random crop relative to the shorter image side.
const CROP_FRACTION: f64 = 0.875;
const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: Image,
    pub label: WetnessClass,
}

#[derive(Debug, Clone, Default)]
pub struct DatasetSplits {
    pub train: Vec<LabeledImage>,
    pub val: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub lr: f64,
    pub train_loss: f64,
    pub train_top1: f64,
    pub val_top1: f64,
    pub epoch_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub config: String,
    pub epochs: Vec<EpochRecord>,
    /// Epoch with the highest validation Top-1 (earliest on ties).
    pub best_epoch: u32,
    pub best_val_top1: f64,
    /// Test Top-1 of the best-validation and the final model.
    pub best_test_top1: f64,
    pub last_test_top1: f64,
}

impl TrainingHistory {
    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epochs.is_empty() {
            return 0.0;
        }
        self.epochs.iter().map(|e| e.epoch_seconds).sum::<f64>() / self.epochs.len() as f64
    }

    /// Higher of the best-epoch and last-epoch test accuracies.
    pub fn best_of_best_and_last(&self) -> f64 {
        self.best_test_top1.max(self.last_test_top1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_top1,val_top1,epoch_seconds\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.train_loss, e.train_top1, e.val_top1, e.epoch_seconds
            ));
        }
        out
    }

    /// Same records with timing fields zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        let mut h = self.clone();
        for e in &mut h.epochs {
            e.epoch_seconds = 0.0;
        }
        h
    }
}

pub struct TrainOutcome {
    pub history: TrainingHistory,
    /// Snapshot taken at `history.best_epoch`.
    pub best: Network,
}

fn labels_of(set: &[LabeledImage]) -> Vec<usize> {
    set.iter().map(|s| s.label.code()).collect()
}

fn batch_tensor(rows: &[Vec<f32>], size: usize) -> Result<Tensor> {
    let mut data = Vec::with_capacity(rows.len() * size * size);
    for r in rows {
        data.extend_from_slice(r);
    }
    Tensor::new(vec![rows.len(), 1, size, size], data)
}

/// Top-1 accuracy (percent) of `model` on pre-processed inputs.
pub(crate) fn accuracy(model: &Network, inputs: &[Vec<f32>], labels: &[usize]) -> Result<f64> {
    if inputs.is_empty() {
        return Ok(0.0);
    }
    let size = model.input_size();
    let mut correct = 0usize;
    for (chunk, lab) in inputs.chunks(EVAL_BATCH).zip(labels.chunks(EVAL_BATCH)) {
        let probs = softmax(&model.forward(&batch_tensor(chunk, size)?)?);
        for (row, &y) in probs.data().chunks_exact(3).zip(lab) {
            if WetnessClass::argmax(row).code() == y {
                correct += 1;
            }
        }
    }
    Ok(100.0 * correct as f64 / inputs.len() as f64)
}

fn check_splits(data: &DatasetSplits) -> Result<()> {
    for (name, set) in [("train", &data.train), ("val", &data.val), ("test", &data.test)] {
        if set.is_empty() {
            return Err(Error::Dataset(format!("{name} split is empty")));
        }
    }
    for c in WetnessClass::ALL {
        if !data.train.iter().any(|s| s.label == c) {
            return Err(Error::Dataset(format!("class {c} is absent from the train split")));
        }
    }
    Ok(())
}

fn trainable_mask(model: &Network, freeze_prefix: usize) -> Vec<bool> {
    model
        .parameter_layers()
        .into_iter()
        .map(|l| l >= freeze_prefix)
        .collect()
}

/// Trains a classifier in place and returns its history and the best-validation snapshot.
///
/// When `checkpoint_dir` is given, `best.json`, `last.json` and `history.csv`
/// are written there.
pub fn train(
    model: &mut Network,
    data: &DatasetSplits,
    cfg: &TrainConfig,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_splits(data)?;
    if model.input_size() != cfg.input_size as usize {
        return Err(Error::Config(format!(
            "model input {} differs from config input {}",
            model.input_size(),
            cfg.input_size
        )));
    }
    let size = cfg.input_size;
    let side = size as usize;
    let prep = |set: &[LabeledImage]| set.iter().map(|s| to_input(&s.image, size)).collect::<Vec<_>>();
    let val_x = prep(&data.val);
    let val_y = labels_of(&data.val);
    let test_x = prep(&data.test);
    let test_y = labels_of(&data.test);
    let train_y = labels_of(&data.train);
    let fixed_train = (cfg.augment == Augment::None).then(|| prep(&data.train));

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut crop_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);
    let trainable = trainable_mask(model, cfg.freeze_prefix);
    let sizes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let mut opt = OptimizerState::new(cfg.optimizer, &sizes);

    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut records = Vec::with_capacity(cfg.epochs as usize);
    let mut best = model.clone();
    let mut best_epoch = 0;
    let mut best_val = f64::NEG_INFINITY;

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let lr = lr_at_epoch(cfg, epoch);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for idx in order.chunks(cfg.batch_size) {
            let rows: Vec<Vec<f32>> = match &fixed_train {
                Some(x) => idx.iter().map(|&i| x[i].clone()).collect(),
                None => idx
                    .iter()
                    .map(|&i| {
                        let img = &data.train[i].image;
                        let side = ((img.width().min(img.height()) as f64) * CROP_FRACTION) as u32;
                        random_crop(img, side.max(1), &mut crop_rng).map(|c| to_input(&c, size))
                    })
                    .collect::<Result<_>>()?,
            };
            let labels: Vec<usize> = idx.iter().map(|&i| train_y[i]).collect();
            let x = batch_tensor(&rows, side)?;
            let (logits, cache) = model.forward_cached(&x)?;
            let (loss, dlogits) = cross_entropy(&logits, &labels).map_err(|e| at_epoch(e, epoch))?;
            for (row, &y) in logits.data().chunks_exact(3).zip(&labels) {
                if WetnessClass::argmax(row).code() == y {
                    correct += 1;
                }
            }
            loss_sum += loss * idx.len() as f64;
            let grads = model.backward(&cache, &dlogits, cfg.freeze_prefix)?;
            opt.step(model.parameters_mut(), &grads, &trainable, lr);
            if model.parameters().iter().any(|p| p.iter().any(|v| !v.is_finite())) {
                return Err(Error::Numerical {
                    epoch: Some(epoch),
                    message: "parameters diverged".into(),
                });
            }
        }
        let val_top1 = accuracy(model, &val_x, &val_y)?;
        if val_top1 > best_val {
            best_val = val_top1;
            best_epoch = epoch;
            best = model.clone();
        }
        records.push(EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / data.train.len() as f64,
            train_top1: 100.0 * correct as f64 / data.train.len() as f64,
            val_top1,
            epoch_seconds: started.elapsed().as_secs_f64(),
        });
    }

    let history = TrainingHistory {
        config: cfg.name.clone(),
        epochs: records,
        best_epoch,
        best_val_top1: best_val,
        best_test_top1: accuracy(&best, &test_x, &test_y)?,
        last_test_top1: accuracy(model, &test_x, &test_y)?,
    };
    if let Some(dir) = checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_checkpoint(&best, Some(cfg), Some(&history), &dir.join("best.json"))?;
        save_checkpoint(model, Some(cfg), Some(&history), &dir.join("last.json"))?;
        let csv = dir.join("history.csv");
        std::fs::write(&csv, history.to_csv()).map_err(|e| Error::io(&csv, e))?;
    }
    Ok(TrainOutcome { history, best })
}

fn at_epoch(e: Error, epoch: u32) -> Error {
    match e {
        Error::Numerical { message, .. } => Error::Numerical {
            epoch: Some(epoch),
            message,
        },
        other => other,
    }
}

/// Normalized `[x_min, y_min, x_max, y_max]` regression target for `bbox` in a `w x h` frame.
pub fn box_target(bbox: &BoundingBox, w: u32, h: u32) -> [f32; 4] {
    [
        bbox.x_min as f32 / w as f32,
        bbox.y_min as f32 / h as f32,
        bbox.x_max as f32 / w as f32,
        bbox.y_max as f32 / h as f32,
    ]
}

/// Fits a linear-head network to normalized boxes; returns the mean loss per epoch.
pub fn train_regressor(
    model: &mut Network,
    samples: &[(Image, BoundingBox)],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Dataset("no regression samples".into()));
    }
    if model.output_features() != 4 {
        return Err(Error::Config("box regression needs a 4-output head".into()));
    }
    let size = model.input_size() as u32;
    let side = size as usize;
    let inputs: Vec<Vec<f32>> = samples.iter().map(|(img, _)| to_input(img, size)).collect();
    let targets: Vec<[f32; 4]> = samples
        .iter()
        .map(|(img, b)| box_target(b, img.width(), img.height()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trainable = trainable_mask(model, cfg.freeze_prefix);
    let sizes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let mut opt = OptimizerState::new(cfg.optimizer, &sizes);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut losses = Vec::new();
    for epoch in 1..=cfg.epochs {
        let lr = lr_at_epoch(cfg, epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let rows: Vec<Vec<f32>> = idx.iter().map(|&i| inputs[i].clone()).collect();
            let t: Vec<f32> = idx.iter().flat_map(|&i| targets[i]).collect();
            let (pred, cache) = model.forward_cached(&batch_tensor(&rows, side)?)?;
            let (loss, dpred) = mean_squared_error(&pred, &t).map_err(|e| at_epoch(e, epoch))?;
            total += loss * idx.len() as f64;
            let grads = model.backward(&cache, &dpred, cfg.freeze_prefix)?;
            opt.step(model.parameters_mut(), &grads, &trainable, lr);
        }
        losses.push(total / samples.len() as f64);
    }
    Ok(losses)
}
