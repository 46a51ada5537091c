//! WiSARD weightless neural network.
//!
//! A retina of `L` bits is split by a [`TupleMapping`] into `K = L / n`
//! tuples. Each tuple addresses one RAM neuron per class discriminator;
//! training writes the addressed location, and the response of a
//! discriminator is the number of RAMs whose addressed location was written.

mod mapping;
mod model;
mod persist;
mod ram;

use thiserror::Error;

use crate::encoding::EncodingError;

pub use mapping::{build_mapping, MappingKind, TupleMapping};
pub use model::{
    Classification, DecisionMode, Response, WisardConfig, WisardModel, MAX_TUPLE_SIZE,
};
pub use persist::{
    load_model, model_from_str, model_to_string, save_model, ModelFileError, FORMAT_VERSION,
};
pub use ram::{Discriminator, RamNeuron};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WnnError {
    #[error("tuple size must be at least 1")]
    ZeroTupleSize,
    #[error("tuple size {0} exceeds the supported maximum of {MAX_TUPLE_SIZE}")]
    TupleTooLarge(usize),
    #[error("threshold fraction {0} is outside [0, 1]")]
    BadThreshold(f64),
    #[error("retina length {length} is not a positive multiple of tuple size {n}")]
    NotDivisible { length: usize, n: usize },
    #[error("retina must contain at least one bit")]
    EmptyRetina,
    #[error("invalid tuple mapping: {0}")]
    InvalidMapping(String),
    #[error("pattern has {found} bits, model retina has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("feature vector has dimension {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("threshold decision requires a trained positive-class discriminator")]
    NoPositiveDiscriminator,
    #[error("model has no trained discriminators")]
    Untrained,
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}
