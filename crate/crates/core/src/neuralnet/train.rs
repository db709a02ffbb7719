use std::time::Instant;

use rand::seq::SliceRandom;

use super::adam::{AdamConfig, AdamState};
use super::mlp::Mlp;
use crate::dataset::Normalizer;
use crate::error::{Error, Result};
use crate::metrics::{self, ConfusionMatrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub hidden_units: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
    pub folds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_units: 6,
            epochs: 300,
            batch_size: 50,
            learning_rate: 0.01,
            validation_fraction: 0.2,
            folds: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0 || self.epochs == 0 || self.batch_size == 0 || self.folds == 0 {
            return Err(Error::validation(
                "hidden_units, epochs, batch_size and folds must be positive",
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::validation("learning_rate must be positive"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::validation("validation_fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub model: Mlp,
    /// Mean training loss of each epoch.
    pub loss_history: Vec<f64>,
    pub seconds: f64,
    /// Fewer than two classes were present in the training targets.
    pub degenerate: bool,
}

impl TrainResult {
    /// Whether the last ten epochs averaged a lower loss than the first ten.
    pub fn loss_decreased(&self) -> bool {
        let n = self.loss_history.len().min(10);
        if n == 0 {
            return false;
        }
        let head: f64 = self.loss_history[..n].iter().sum::<f64>() / n as f64;
        let tail: f64 = self.loss_history[self.loss_history.len() - n..].iter().sum::<f64>() / n as f64;
        tail < head
    }
}

/// Mini-batch ADAM training with per-epoch reshuffling.
///
/// Weights come from the `init` stream and epoch orders from the `shuffle`
/// stream of `master_seed`, both at index `repetition`.
pub fn train<X: AsRef<[f64]>>(
    inputs: &[X],
    targets: &[usize],
    classes: usize,
    config: &TrainConfig,
    master_seed: u64,
    repetition: u64,
) -> Result<TrainResult> {
    config.validate()?;
    let first = inputs
        .first()
        .ok_or_else(|| Error::validation("training split is empty"))?;
    if inputs.len() != targets.len() {
        return Err(Error::Dimension {
            expected: inputs.len(),
            actual: targets.len(),
        });
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::validation(format!(
            "target {bad} outside the {classes} model classes"
        )));
    }
    let mut present = vec![false; classes];
    targets.iter().for_each(|&t| present[t] = true);
    let degenerate = present.iter().filter(|&&p| p).count() < 2;

    let width = first.as_ref().len();
    let mut init_rng = seed::rng_for(master_seed, seed::INIT, repetition);
    let mut shuffle_rng = seed::rng_for(master_seed, seed::SHUFFLE, repetition);
    let mut model = Mlp::glorot(width, config.hidden_units, classes, &mut init_rng);
    let mut adam = AdamState::new(config.adam(), &model.params);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);
    let mut batch_x: Vec<&[f64]> = Vec::with_capacity(config.batch_size);
    let mut batch_t = Vec::with_capacity(config.batch_size);

    let started = Instant::now();
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch_x.clear();
            batch_t.clear();
            for &i in chunk {
                batch_x.push(inputs[i].as_ref());
                batch_t.push(targets[i]);
            }
            let (loss, grads) = model.backward(&batch_x, &batch_t)?;
            adam.step(&mut model.params, &grads);
            epoch_loss += loss * chunk.len() as f64;
        }
        loss_history.push(epoch_loss / inputs.len() as f64);
    }
    let seconds = started.elapsed().as_secs_f64();
    if !model.params.is_finite() {
        return Err(Error::validation("training diverged to non-finite weights"));
    }
    Ok(TrainResult {
        model,
        loss_history,
        seconds,
        degenerate,
    })
}

pub fn evaluate<X: AsRef<[f64]>>(model: &Mlp, inputs: &[X], targets: &[usize]) -> Result<ConfusionMatrix> {
    let mut confusion = ConfusionMatrix::new(model.outputs());
    for (x, &t) in inputs.iter().zip(targets) {
        confusion.record(t, model.predict(x.as_ref())?);
    }
    Ok(confusion)
}

/// One train/holdout repetition.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub confusion: ConfusionMatrix,
    pub train: TrainResult,
    pub normalizer: Normalizer,
    pub train_size: usize,
    pub holdout_size: usize,
}

impl FoldResult {
    pub fn accuracy(&self) -> f64 {
        self.confusion.accuracy().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub classes: usize,
    pub folds: Vec<FoldResult>,
}

impl CrossValidation {
    pub fn mean_accuracy(&self) -> f64 {
        self.folds.iter().map(FoldResult::accuracy).sum::<f64>() / self.folds.len() as f64
    }

    /// Mean over repetitions of each class's accuracy, skipping repetitions
    /// whose holdout lacks that class.
    pub fn mean_per_class(&self) -> Vec<Option<f64>> {
        let per_fold: Vec<Vec<Option<f64>>> = self
            .folds
            .iter()
            .map(|f| f.confusion.per_class_accuracy())
            .collect();
        (0..self.classes)
            .map(|c| metrics::mean_defined(per_fold.iter().map(|f| f[c])))
            .collect()
    }

    pub fn fold_seconds(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.train.seconds).collect()
    }

    pub fn degenerate(&self) -> bool {
        self.folds.iter().any(|f| f.train.degenerate)
    }
}

/// Repeated random holdout: each of `config.folds` repetitions draws its own
/// seeded `validation_fraction` holdout, z-scores features with statistics of
/// the remaining patterns, trains on them and evaluates on the holdout.
pub fn cross_validate<X: AsRef<[f64]>>(
    inputs: &[X],
    targets: &[usize],
    classes: usize,
    config: &TrainConfig,
    master_seed: u64,
) -> Result<CrossValidation> {
    config.validate()?;
    let n = inputs.len();
    if n < config.folds.max(2) {
        return Err(Error::validation(format!(
            "{n} patterns cannot support {} repetitions with a holdout",
            config.folds
        )));
    }
    let holdout = ((n as f64 * config.validation_fraction).round() as usize).clamp(1, n - 1);
    let mut folds = Vec::with_capacity(config.folds);
    for rep in 0..config.folds as u64 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng_for(master_seed, seed::SPLIT, rep));
        let (test_idx, train_idx) = order.split_at(holdout);
        let train_raw: Vec<&[f64]> = train_idx.iter().map(|&i| inputs[i].as_ref()).collect();
        let normalizer = Normalizer::fit(&train_raw)?;
        let train_x = normalizer.apply_all(&train_raw);
        let train_t: Vec<usize> = train_idx.iter().map(|&i| targets[i]).collect();
        let test_x: Vec<Vec<f64>> = test_idx.iter().map(|&i| normalizer.apply(inputs[i].as_ref())).collect();
        let test_t: Vec<usize> = test_idx.iter().map(|&i| targets[i]).collect();

        let result = train(&train_x, &train_t, classes, config, master_seed, rep)?;
        let confusion = evaluate(&result.model, &test_x, &test_t)?;
        folds.push(FoldResult {
            confusion,
            train: result,
            normalizer,
            train_size: train_idx.len(),
            holdout_size: test_idx.len(),
        });
    }
    Ok(CrossValidation { classes, folds })
}
