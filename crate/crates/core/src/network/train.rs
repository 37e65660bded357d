use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::DropoutMode;
use crate::optim::{AdaDeltaConfig, AdaDeltaState};
use crate::rng::Rng;
use crate::stats::ConfusionMatrix;
use crate::tensor::Tensor;

use super::model::NetworkModel;

#[derive(Clone, Copy, Debug)]
pub struct Example<'a> {
    pub input: &'a Tensor,
    pub label: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    /// Master seed for the whole experiment.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 30,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    /// Mean training-mode loss of every step, in order.
    pub step_losses: Vec<f64>,
}

impl TrainLog {
    pub fn steps(&self) -> usize {
        self.step_losses.len()
    }
}

/// AdaDelta over mini-batches with gradients averaged across the batch.
pub struct Trainer {
    opt: AdaDeltaState,
    batch_size: usize,
    rng: Rng,
    pub log: TrainLog,
}

impl Trainer {
    /// The optimizer tracks the parameters trainable at construction time.
    pub fn new(model: &NetworkModel, opt: AdaDeltaConfig, batch_size: usize, rng: Rng) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(Trainer {
            opt: AdaDeltaState::new(opt, model.params())?,
            batch_size,
            rng,
            log: TrainLog::default(),
        })
    }

    /// One optimizer step on `batch`; returns its mean loss before the update.
    pub fn step(&mut self, model: &mut NetworkModel, batch: &[Example<'_>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Contract("empty training batch".into()));
        }
        let batch_seed = self.rng.next_u64();
        let mut total_loss = 0.0;
        let mut sum: Option<Vec<Tensor>> = None;
        for (k, ex) in batch.iter().enumerate() {
            let mut sample_rng = Rng::derived(batch_seed, &format!("sample{k}"));
            let (loss, grads) = model.loss_and_grads(ex.input, ex.label, DropoutMode::Train, &mut sample_rng)?;
            total_loss += loss;
            match sum.as_mut() {
                None => sum = Some(grads),
                Some(acc) => {
                    for (a, g) in acc.iter_mut().zip(&grads) {
                        a.axpy(1.0, g)?;
                    }
                }
            }
        }
        let n = batch.len() as f64;
        let mean: Vec<Tensor> = sum
            .expect("non-empty batch")
            .into_iter()
            .map(|g| g.scale(1.0 / n))
            .collect::<Result<_>>()?;
        model.params_mut().set_grads(mean)?;
        self.opt.step(model.params_mut())?;
        let mean_loss = total_loss / n;
        self.log.step_losses.push(mean_loss);
        Ok(mean_loss)
    }

    /// One shuffled pass over `examples`.
    pub fn epoch(&mut self, model: &mut NetworkModel, examples: &[Example<'_>]) -> Result<()> {
        let mut order: Vec<usize> = (0..examples.len()).collect();
        self.rng.shuffle(&mut order);
        for chunk in order.chunks(self.batch_size) {
            let batch: Vec<Example<'_>> = chunk.iter().map(|&i| examples[i]).collect();
            self.step(model, &batch)?;
        }
        Ok(())
    }
}

pub fn train_epochs(
    model: &mut NetworkModel,
    examples: &[Example<'_>],
    epochs: usize,
    batch_size: usize,
    opt: AdaDeltaConfig,
    rng: Rng,
) -> Result<TrainLog> {
    if examples.is_empty() && epochs > 0 {
        return Err(Error::Data("no training examples".into()));
    }
    let mut trainer = Trainer::new(model, opt, batch_size, rng)?;
    for _ in 0..epochs {
        trainer.epoch(model, examples)?;
    }
    Ok(trainer.log)
}

/// Eval-mode predictions tallied into a confusion matrix.
pub fn evaluate(model: &NetworkModel, examples: &[Example<'_>]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(model.config().num_classes);
    for ex in examples {
        cm.record(ex.label, model.predict(ex.input)?)?;
    }
    Ok(cm)
}
