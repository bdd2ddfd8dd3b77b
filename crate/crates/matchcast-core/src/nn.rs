//! One-hidden-layer softmax classifier trained with Adam.
//!
//! The network is deliberately small: a single hidden layer of 8 logistic
//! units feeding a softmax over the outcome classes, trained by minimizing
//! the mean cross entropy against one-hot targets. Inputs are z-scored with
//! statistics of the training fold; identity features are expanded to
//! one-hot blocks. Training is fully deterministic given the seed.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureRow;
use crate::outcome::{ClassRange, OutcomeDistribution, Target};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NnError {
    NonFiniteLoss { epoch: usize },
    FeatureDimensionMismatch { expected: usize, got: usize },
    TooFewRows { have: usize, need: usize },
}

impl fmt::Display for NnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnError::NonFiniteLoss { epoch } => {
                write!(f, "training loss became non-finite in epoch {epoch}")
            }
            NnError::FeatureDimensionMismatch { expected, got } => {
                write!(f, "expected {expected} input features, got {got}")
            }
            NnError::TooFewRows { have, need } => {
                write!(f, "{have} training rows given but at least {need} are required")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NnError {}

/// Training hyperparameters. Defaults: learning rate 1e-3, Adam moments
/// 0.9/0.999, batch 64, at most 500 epochs with early stopping when the
/// validation loss (a 10% split of the training fold) fails to improve by
/// 1e-4 for 20 epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_improvement: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig {
            hidden: 8,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 64,
            max_epochs: 500,
            patience: 20,
            min_improvement: 1e-4,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Adam optimizer state for one parameter tensor.
///
/// Update rule per step t:
///   m ← β₁m + (1−β₁)g;  v ← β₂v + (1−β₂)g²
///   θ ← θ − lr · (m/(1−β₁ᵗ)) / (√(v/(1−β₂ᵗ)) + ε)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Running powers β₁ᵗ and β₂ᵗ for the bias corrections.
    beta1_t: f64,
    beta2_t: f64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            beta1_t: 1.0,
            beta2_t: 1.0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), grads.len());
        self.beta1_t *= self.beta1;
        self.beta2_t *= self.beta2;
        let bc1 = 1.0 - self.beta1_t;
        let bc2 = 1.0 - self.beta2_t;
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + self.epsilon);
        }
    }
}

/// How a [`FeatureRow`] maps onto the network input vector: the continuous
/// features first, then optional one-hot blocks for home team, away team and
/// season identity codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputEncoder {
    pub n_continuous: usize,
    pub id_blocks: Option<IdBlockSizes>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdBlockSizes {
    pub n_teams: usize,
    pub n_seasons: usize,
}

impl InputEncoder {
    pub fn continuous(n_continuous: usize) -> Self {
        InputEncoder {
            n_continuous,
            id_blocks: None,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.n_continuous
            + self
                .id_blocks
                .map_or(0, |b| 2 * b.n_teams + b.n_seasons)
    }

    pub fn encode(&self, row: &FeatureRow) -> Result<Vec<f64>, NnError> {
        if row.features.len() != self.n_continuous {
            return Err(NnError::FeatureDimensionMismatch {
                expected: self.n_continuous,
                got: row.features.len(),
            });
        }
        let mut x = Vec::with_capacity(self.n_inputs());
        x.extend_from_slice(&row.features);
        if let Some(blocks) = self.id_blocks {
            let ids = row.ids.ok_or(NnError::FeatureDimensionMismatch {
                expected: self.n_inputs(),
                got: self.n_continuous,
            })?;
            let mut one_hot = |code: usize, size: usize| {
                let start = x.len();
                x.resize(start + size, 0.0);
                if code < size {
                    x[start + code] = 1.0;
                }
            };
            one_hot(ids.home as usize, blocks.n_teams);
            one_hot(ids.away as usize, blocks.n_teams);
            one_hot(ids.season as usize, blocks.n_seasons);
        }
        Ok(x)
    }
}

/// Trained network parameters plus the input transform that ships with them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralNetModel {
    pub encoder: InputEncoder,
    pub n_inputs: usize,
    pub hidden: usize,
    pub n_classes: usize,
    pub range: ClassRange,
    /// `w1[i * hidden + j]`: input i → hidden j.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `w2[j * n_classes + c]`: hidden j → class c.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub input_mean: Vec<f64>,
    pub input_sd: Vec<f64>,
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

/// Numerically shifted softmax; invariant under adding a constant to all
/// logits.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Gradients of the mean cross entropy for one batch, same layout as the
/// model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl NeuralNetModel {
    /// Fresh network with Glorot-uniform weights and zero biases.
    pub fn new_random(
        encoder: InputEncoder,
        hidden: usize,
        range: ClassRange,
        seed: u64,
    ) -> Self {
        let n_inputs = encoder.n_inputs();
        let n_classes = range.len();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut init = |fan_in: usize, fan_out: usize, n: usize| -> Vec<f64> {
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            (0..n)
                .map(|_| rng.gen::<f64>() * 2.0 * limit - limit)
                .collect()
        };
        let w1 = init(n_inputs, hidden, n_inputs * hidden);
        let w2 = init(hidden, n_classes, hidden * n_classes);
        NeuralNetModel {
            encoder,
            n_inputs,
            hidden,
            n_classes,
            range,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; n_classes],
            input_mean: vec![0.0; n_inputs],
            input_sd: vec![1.0; n_inputs],
        }
    }

    /// Forward pass on a network-space input (already encoded and z-scored).
    /// Returns hidden activations and class probabilities.
    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut hidden = vec![0.0; self.hidden];
        for j in 0..self.hidden {
            let mut z = self.b1[j];
            for (i, &xi) in x.iter().enumerate() {
                z += xi * self.w1[i * self.hidden + j];
            }
            hidden[j] = logistic(z);
        }
        let mut logits = vec![0.0; self.n_classes];
        for c in 0..self.n_classes {
            let mut z = self.b2[c];
            for (j, &hj) in hidden.iter().enumerate() {
                z += hj * self.w2[j * self.n_classes + c];
            }
            logits[c] = z;
        }
        (hidden, softmax(&logits))
    }

    /// Mean cross entropy over a batch of network-space inputs.
    pub fn batch_loss(&self, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let (_, probs) = self.forward(x);
            total += -libm::log(probs[y]);
        }
        total / xs.len() as f64
    }

    /// Analytic gradients of [`Self::batch_loss`] with respect to every
    /// parameter tensor.
    pub fn batch_gradients(&self, xs: &[Vec<f64>], ys: &[usize]) -> Gradients {
        let mut g = Gradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
        };
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let (hidden, probs) = self.forward(x);
            // d(loss)/d(logit_c) = p_c - 1[c == y]
            let mut dlogits = probs;
            dlogits[y] -= 1.0;
            for (j, &hj) in hidden.iter().enumerate() {
                for c in 0..self.n_classes {
                    g.w2[j * self.n_classes + c] += scale * hj * dlogits[c];
                }
            }
            for c in 0..self.n_classes {
                g.b2[c] += scale * dlogits[c];
            }
            for (j, &hj) in hidden.iter().enumerate() {
                let mut dh = 0.0;
                for (c, &dl) in dlogits.iter().enumerate() {
                    dh += self.w2[j * self.n_classes + c] * dl;
                }
                let dz = dh * hj * (1.0 - hj);
                for (i, &xi) in x.iter().enumerate() {
                    g.w1[i * self.hidden + j] += scale * xi * dz;
                }
                g.b1[j] += scale * dz;
            }
        }
        g
    }

    fn standardize(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = (*v - self.input_mean[i]) / self.input_sd[i];
        }
    }

    /// Class distribution for one feature row.
    pub fn predict(&self, row: &FeatureRow) -> Result<OutcomeDistribution, NnError> {
        let mut x = self.encoder.encode(row)?;
        self.standardize(&mut x);
        let (_, probs) = self.forward(&x);
        Ok(OutcomeDistribution {
            range: self.range,
            probs,
        })
    }
}

/// Minimum number of rows for a meaningful training run.
pub const MIN_TRAIN_ROWS: usize = 100;

/// Trains the classifier on the given rows.
///
/// A seeded shuffle sets aside `validation_fraction` of the rows to monitor
/// early stopping; the parameters that achieved the best validation loss are
/// restored at the end.
pub fn train(
    rows: &[&FeatureRow],
    target: Target,
    encoder: InputEncoder,
    config: &NnConfig,
) -> Result<NeuralNetModel, NnError> {
    if rows.len() < MIN_TRAIN_ROWS {
        return Err(NnError::TooFewRows {
            have: rows.len(),
            need: MIN_TRAIN_ROWS,
        });
    }
    let range = target.class_range();
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for row in rows {
        xs.push(encoder.encode(row)?);
        ys.push(
            range
                .index(row.label(target))
                .expect("labels are clipped into the class range"),
        );
    }

    // z-scoring statistics over the continuous block only; one-hot inputs
    // keep identity scaling.
    let n_inputs = encoder.n_inputs();
    let mut mean = vec![0.0; n_inputs];
    let mut sd = vec![1.0; n_inputs];
    for i in 0..encoder.n_continuous {
        let m = xs.iter().map(|x| x[i]).sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x[i] - m) * (x[i] - m)).sum::<f64>() / xs.len() as f64;
        mean[i] = m;
        sd[i] = if var > 0.0 { libm::sqrt(var) } else { 1.0 };
    }
    for x in &mut xs {
        for i in 0..n_inputs {
            x[i] = (x[i] - mean[i]) / sd[i];
        }
    }

    let mut model = NeuralNetModel::new_random(encoder, config.hidden, range, config.seed);
    model.input_mean = mean;
    model.input_sd = sd;

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng);
    let val_n = ((rows.len() as f64) * config.validation_fraction) as usize;
    let (val_idx, train_idx) = order.split_at(val_n);
    let val_idx = val_idx.to_vec();
    let mut train_idx = train_idx.to_vec();

    let mut adam_w1 = Adam::new(
        model.w1.len(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let mut adam_b1 = Adam::new(
        model.b1.len(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let mut adam_w2 = Adam::new(
        model.w2.len(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let mut adam_b2 = Adam::new(
        model.b2.len(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );

    let monitor_loss = |model: &NeuralNetModel, idx: &[usize]| -> f64 {
        let mxs: Vec<Vec<f64>> = idx.iter().map(|&i| xs[i].clone()).collect();
        let mys: Vec<usize> = idx.iter().map(|&i| ys[i]).collect();
        model.batch_loss(&mxs, &mys)
    };

    let mut best = (
        model.w1.clone(),
        model.b1.clone(),
        model.w2.clone(),
        model.b2.clone(),
    );
    let monitor_idx: &[usize] = if val_idx.is_empty() {
        &train_idx
    } else {
        &val_idx
    };
    // Clone: train_idx is reshuffled every epoch while monitoring stays fixed.
    let monitor_idx = monitor_idx.to_vec();
    let mut best_loss = monitor_loss(&model, &monitor_idx);
    let mut stale_epochs = 0usize;

    for epoch in 0..config.max_epochs {
        train_idx.shuffle(&mut rng);
        for batch in train_idx.chunks(config.batch_size.max(1)) {
            let bxs: Vec<Vec<f64>> = batch.iter().map(|&i| xs[i].clone()).collect();
            let bys: Vec<usize> = batch.iter().map(|&i| ys[i]).collect();
            let grads = model.batch_gradients(&bxs, &bys);
            adam_w1.step(&mut model.w1, &grads.w1);
            adam_b1.step(&mut model.b1, &grads.b1);
            adam_w2.step(&mut model.w2, &grads.w2);
            adam_b2.step(&mut model.b2, &grads.b2);
        }
        let loss = monitor_loss(&model, &monitor_idx);
        if !loss.is_finite() {
            return Err(NnError::NonFiniteLoss { epoch });
        }
        if best_loss - loss > config.min_improvement {
            best_loss = loss;
            best = (
                model.w1.clone(),
                model.b1.clone(),
                model.w2.clone(),
                model.b2.clone(),
            );
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }

    model.w1 = best.0;
    model.b1 = best.1;
    model.w2 = best.2;
    model.b2 = best.3;
    Ok(model)
}
