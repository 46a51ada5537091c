//! Synthetic feature files for exercising the pipeline without images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::encoding::{FeatureVector, NEGATIVE, POSITIVE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableSpec {
    pub positives: usize,
    pub negatives: usize,
    pub dim: usize,
    /// Standard deviation of the per-component Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SeparableSpec {
    fn default() -> Self {
        Self {
            positives: 63,
            negatives: 15,
            dim: 2048,
            noise: 0.1,
            seed: 0,
        }
    }
}

/// Positives scatter around a random sign vector `u`, negatives around `-u`.
///
/// Ids are `pos000`, `pos001`, ... followed by `neg000`, ...
pub fn separable_dataset(spec: &SeparableSpec) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let direction: Vec<f64> = (0..spec.dim)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let noise = Normal::new(0.0, spec.noise).expect("noise must be finite and non-negative");
    let mut sample = |id: String, label, sign: f64| {
        let values = direction
            .iter()
            .map(|u| sign * u + noise.sample(&mut rng))
            .collect();
        FeatureVector::new(id, Some(label), values)
    };
    let mut out = Vec::with_capacity(spec.positives + spec.negatives);
    for i in 0..spec.positives {
        out.push(sample(format!("pos{i:03}"), POSITIVE, 1.0));
    }
    for i in 0..spec.negatives {
        out.push(sample(format!("neg{i:03}"), NEGATIVE, -1.0));
    }
    out
}
