//! Single-layer perceptron baseline over the raw feature vectors.
//!
//! Classic step-activation rule: `w <- w + lr * (y - y_hat) * x` and
//! `b <- b + lr * (y - y_hat)`, with `y_hat = 1` iff `w.x + b > 0`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoding::{FeatureVector, Label, NEGATIVE, POSITIVE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptronError {
    #[error("learning rate must be positive, got {0}")]
    BadLearningRate(f64),
    #[error("epochs must be at least 1")]
    ZeroEpochs,
    #[error("no training samples")]
    Empty,
    #[error("sample `{id}` is unlabeled")]
    Unlabeled { id: String },
    #[error("sample `{id}` has dimension {found}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleOrder {
    /// Reshuffle with the seeded generator before every epoch.
    #[default]
    Shuffled,
    /// Present samples in the order given, every epoch.
    AsGiven,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptronHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub order: SampleOrder,
}

impl Default for PerceptronHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 100,
            seed: 0,
            order: SampleOrder::Shuffled,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyper: PerceptronHyper,
    /// Epochs actually run; training stops after the first epoch with no
    /// updates since later epochs could not change anything.
    pub epochs_run: usize,
}

impl PerceptronModel {
    pub fn zeros(dim: usize, hyper: PerceptronHyper) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            hyper,
            epochs_run: 0,
        }
    }

    fn activation(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias
    }

    fn step(&self, values: &[f64]) -> Label {
        if self.activation(values) > 0.0 {
            POSITIVE
        } else {
            NEGATIVE
        }
    }
}

pub fn train_perceptron(
    samples: &[&FeatureVector],
    hyper: PerceptronHyper,
) -> Result<PerceptronModel, PerceptronError> {
    if hyper.learning_rate.is_nan() || hyper.learning_rate <= 0.0 {
        return Err(PerceptronError::BadLearningRate(hyper.learning_rate));
    }
    if hyper.epochs == 0 {
        return Err(PerceptronError::ZeroEpochs);
    }
    let dim = samples.first().ok_or(PerceptronError::Empty)?.dim();
    let mut targets = Vec::with_capacity(samples.len());
    for s in samples {
        if s.dim() != dim {
            return Err(PerceptronError::DimensionMismatch {
                id: s.id.clone(),
                expected: dim,
                found: s.dim(),
            });
        }
        let label = s.label.ok_or_else(|| PerceptronError::Unlabeled { id: s.id.clone() })?;
        targets.push(if label == POSITIVE { 1.0 } else { 0.0 });
    }

    let mut model = PerceptronModel::zeros(dim, hyper);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..hyper.epochs {
        if hyper.order == SampleOrder::Shuffled {
            order.shuffle(&mut rng);
        }
        model.epochs_run += 1;
        let mut updates = 0usize;
        for &i in &order {
            let x = &samples[i].values;
            let predicted = if model.step(x) == POSITIVE { 1.0 } else { 0.0 };
            let delta = hyper.learning_rate * (targets[i] - predicted);
            if delta != 0.0 {
                updates += 1;
                for (w, xi) in model.weights.iter_mut().zip(x) {
                    *w += delta * xi;
                }
                model.bias += delta;
            }
        }
        if updates == 0 {
            break;
        }
    }
    Ok(model)
}

pub fn predict_perceptron(
    model: &PerceptronModel,
    v: &FeatureVector,
) -> Result<Label, PerceptronError> {
    if v.dim() != model.weights.len() {
        return Err(PerceptronError::DimensionMismatch {
            id: v.id.clone(),
            expected: model.weights.len(),
            found: v.dim(),
        });
    }
    Ok(model.step(&v.values))
}

/// Fraction of `samples` whose prediction matches their label.
pub fn training_accuracy(
    model: &PerceptronModel,
    samples: &[&FeatureVector],
) -> Result<f64, PerceptronError> {
    if samples.is_empty() {
        return Err(PerceptronError::Empty);
    }
    let mut correct = 0usize;
    for s in samples {
        if Some(predict_perceptron(model, s)?) == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}
