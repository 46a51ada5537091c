//! Real-valued feature vectors and their binary retina encoding.
//!
//! Each vector is thresholded against its own arithmetic mean: a component
//! becomes 1 only when it is strictly above the mean. Patterns are then
//! zero-padded at the tail so that their length divides the tuple size.

use std::fmt;

use thiserror::Error;

/// Binary class label. `1` marks the positive (distress) class.
pub type Label = u32;

pub const POSITIVE: Label = 1;
pub const NEGATIVE: Label = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("feature vector is empty")]
    Empty,
    #[error("feature value at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("tuple size must be at least 1")]
    ZeroTupleSize,
    #[error("bit value at index {index} is {value}, expected 0 or 1")]
    NotABit { index: usize, value: u8 },
}

/// One sample: an identifier, an optional label and its feature activations.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub label: Option<Label>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(id: impl Into<String>, label: Option<Label>, values: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            label,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Checks the non-empty and all-finite invariants.
    pub fn validate(&self) -> Result<(), EncodingError> {
        if self.values.is_empty() {
            return Err(EncodingError::Empty);
        }
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(EncodingError::NonFinite {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }
}

/// Fixed-length sequence of bits presented to the network's retina.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitPattern {
    bits: Vec<bool>,
}

impl BitPattern {
    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    /// Builds a pattern from 0/1 bytes, rejecting anything else.
    pub fn from_bits(bits: &[u8]) -> Result<Self, EncodingError> {
        bits.iter()
            .enumerate()
            .map(|(index, &b)| match b {
                0 => Ok(false),
                1 => Ok(true),
                value => Err(EncodingError::NotABit { index, value }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|bits| Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    pub fn flip(&mut self, index: usize) {
        self.bits[index] = !self.bits[index];
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| u8::from(b)).collect()
    }
}

impl From<Vec<bool>> for BitPattern {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

impl FromIterator<bool> for BitPattern {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Mean of `values` using compensated summation, clamped into `[min, max]`.
///
/// The clamp guarantees that a constant vector has a mean exactly equal to
/// its elements, so degenerate inputs encode to all zeros.
fn clamped_mean(values: &[f64]) -> f64 {
    let mut sum = 0.0_f64;
    let mut compensation = 0.0_f64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
        min = min.min(v);
        max = max.max(v);
    }
    ((sum + compensation) / values.len() as f64).clamp(min, max)
}

/// Encodes a feature vector as one bit per component: 1 iff the component is
/// strictly greater than the vector's mean. Ties go to 0.
pub fn binarize_mean_threshold(v: &FeatureVector) -> Result<BitPattern, EncodingError> {
    binarize_values(&v.values)
}

/// Same as [`binarize_mean_threshold`] over a bare slice.
pub fn binarize_values(values: &[f64]) -> Result<BitPattern, EncodingError> {
    if values.is_empty() {
        return Err(EncodingError::Empty);
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(EncodingError::NonFinite {
            index,
            value: values[index],
        });
    }
    let mean = clamped_mean(values);
    Ok(values.iter().map(|&v| v > mean).collect())
}

/// Appends the fewest trailing zero bits that make the length a multiple of `n`.
pub fn pad_to_multiple(p: &BitPattern, n: usize) -> Result<BitPattern, EncodingError> {
    if n == 0 {
        return Err(EncodingError::ZeroTupleSize);
    }
    let target = padded_len(p.len(), n);
    let mut bits = p.bits.clone();
    bits.resize(target, false);
    Ok(BitPattern { bits })
}

/// Length after padding `len` bits up to a multiple of `n` (`n >= 1`).
pub fn padded_len(len: usize, n: usize) -> usize {
    len.div_ceil(n) * n
}
