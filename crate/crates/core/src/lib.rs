//! WiSARD weightless neural network over mean-thresholded deep features.
//!
//! Pipeline: feature vectors ([`dataset`]) are binarized against their own
//! mean ([`encoding`]), padded to the tuple size and fed to a WiSARD
//! ([`wnn`]). [`evaluation`] runs grouped leave-one-out cross-validation and
//! tuple-size sweeps; [`perceptron`] is the linear baseline.

pub mod cli;
pub mod dataset;
pub mod encoding;
pub mod evaluation;
pub mod exec;
pub mod perceptron;
pub mod synth;
pub mod wnn;

mod io_util;

pub use dataset::{load_feature_file, make_loo_plan, Dataset, FoldPlan};
pub use encoding::{binarize_mean_threshold, pad_to_multiple, BitPattern, FeatureVector, Label};
pub use evaluation::{run_cross_validation, sweep_tuple_size, CrossValReport, SweepResult};
pub use exec::Execution;
pub use wnn::{DecisionMode, MappingKind, WisardConfig, WisardModel};
