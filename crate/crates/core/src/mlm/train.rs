//! Adam training loop with dynamic masking.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::checkpoint::TrainRecord;
use super::masking::{apply_masking, MaskingPolicy};
use super::model::{Grads, Model};
use super::Real;
use crate::rng::{derive_seed, rng_from};
use crate::vocab::EncodedSequence;
use crate::{Error, Result};

const SHUFFLE_STREAM: u64 = 1;
const MASK_STREAM: u64 = 2;
const DROPOUT_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHp {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: u32,
    pub seed: u64,
    /// Decoupled decay on non-embedding weight matrices. Embeddings, biases
    /// and norm parameters are never decayed.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainHp {
    fn default() -> Self {
        TrainHp {
            lr: 3e-4,
            batch_size: 16,
            epochs: 2,
            seed: 0,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl TrainHp {
    pub fn record(&self) -> TrainRecord {
        TrainRecord {
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            weight_decay: self.weight_decay,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if self.weight_decay < 0.0 || self.eps <= 0.0 {
            return Err(Error::Config(
                "weight_decay must be >= 0 and eps > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Adam moments, one buffer per parameter tensor.
pub struct Adam<T> {
    m: Grads<T>,
    v: Grads<T>,
    decay: Vec<bool>,
    step: u64,
}

impl<T: Real> Adam<T> {
    pub fn new(model: &Model<T>) -> Self {
        Adam {
            m: model.zero_grads(),
            v: model.zero_grads(),
            decay: model
                .arch
                .specs
                .iter()
                .map(|s| !s.is_embedding() && !s.is_bias_or_norm())
                .collect(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, model: &mut Model<T>, grads: &Grads<T>, hp: &TrainHp) {
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::of(hp.beta1), T::of(hp.beta2));
        let c1 = T::of(1.0 - hp.beta1.powi(t));
        let c2 = T::of(1.0 - hp.beta2.powi(t));
        let lr = T::of(hp.lr);
        let eps = T::of(hp.eps);
        let wd = T::of(hp.weight_decay);
        let one = T::one();
        for (i, p) in model.params.iter_mut().enumerate() {
            let (m, v, g) = (&mut self.m[i], &mut self.v[i], &grads[i]);
            let decay = self.decay[i] && hp.weight_decay > 0.0;
            for j in 0..p.len() {
                m[j] = b1 * m[j] + (one - b1) * g[j];
                v[j] = b2 * v[j] + (one - b2) * g[j] * g[j];
                let mut step = (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
                if decay {
                    step += wd * p[j];
                }
                p[j] -= lr * step;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub model: Model<T>,
    /// Mean masked-LM loss of every optimizer step, in order.
    pub losses: Vec<f64>,
    /// Mean of the step losses within each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains on pre-encoded sequences.
///
/// Each epoch visits the sequences in a seeded random order; masking is
/// re-drawn for every (epoch, batch) pair. A fresh optimizer is created per
/// call. A non-finite loss aborts with [`Error::Diverged`].
pub fn train<T: Real>(
    mut model: Model<T>,
    seqs: &[EncodedSequence],
    hp: &TrainHp,
    policy: &MaskingPolicy,
) -> Result<TrainOutcome<T>> {
    hp.validate()?;
    let mut adam = Adam::new(&model);
    let mut losses = Vec::new();
    let mut epoch_losses = Vec::new();
    let dropout = model.config.dropout > 0.0;
    for epoch in 0..hp.epochs as u64 {
        let mut order: Vec<usize> = (0..seqs.len()).collect();
        order.shuffle(&mut rng_from(hp.seed, &[SHUFFLE_STREAM, epoch]));
        let mut sum = 0.0;
        let mut n = 0usize;
        for (bi, chunk) in order.chunks(hp.batch_size).enumerate() {
            let batch_seqs: Vec<EncodedSequence> = chunk.iter().map(|&i| seqs[i].clone()).collect();
            let batch = apply_masking(
                &batch_seqs,
                policy,
                derive_seed(hp.seed, &[MASK_STREAM, epoch, bi as u64]),
            );
            let drop_seed =
                dropout.then(|| derive_seed(hp.seed, &[DROPOUT_STREAM, epoch, bi as u64]));
            let (loss, grads) = model.loss_and_grad(&batch, drop_seed)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    step: adam.steps() + 1,
                    loss,
                });
            }
            adam.update(&mut model, &grads, hp);
            log::debug!("epoch {epoch} batch {bi} loss {loss:.5}");
            losses.push(loss);
            sum += loss;
            n += 1;
        }
        let mean = if n == 0 { 0.0 } else { sum / n as f64 };
        log::info!("epoch {} mean loss {mean:.5} over {n} steps", epoch + 1);
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome {
        model,
        losses,
        epoch_losses,
    })
}
