//! Versioned, line-oriented text format for trained models.
//!
//! ```text
//! wisard-model
//! format_version 1
//! n 3
//! seed 7
//! mapping_kind random
//! decision_mode threshold
//! threshold_fraction 0.5
//! bleach 0
//! input_dim 5
//! L 6
//! K 2
//! tuples
//! 4 0 2
//! 5 1 3
//! classes 1
//! class 1 trained 2
//! ram 0 2:1 5:1
//! ram 1 6:2
//! end
//! ```
//!
//! Every tuple is listed explicitly, classes ascend by label and RAM entries
//! ascend by address, so equal models always serialize to equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::encoding::Label;
use crate::io_util::write_atomic;

use super::mapping::{MappingKind, TupleMapping};
use super::model::{DecisionMode, WisardConfig, WisardModel};
use super::ram::{Discriminator, RamNeuron};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "wisard-model";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("unsupported model format version `{0}` (expected {FORMAT_VERSION})")]
    UnsupportedVersion(String),
    #[error("model file is truncated: expected {0}")]
    Truncated(&'static str),
    #[error("model file line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("model file violates an invariant: {0}")]
    InvariantViolation(String),
    #[error("model file I/O: {0}")]
    Io(#[from] std::io::Error),
}

pub fn model_to_string(model: &WisardModel) -> String {
    let cfg = &model.config;
    let mut out = String::new();
    // writes into a String cannot fail
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "format_version {FORMAT_VERSION}");
    let _ = writeln!(out, "n {}", cfg.n);
    let _ = writeln!(out, "seed {}", cfg.seed);
    let _ = writeln!(out, "mapping_kind {}", cfg.mapping_kind.as_str());
    let _ = writeln!(out, "decision_mode {}", cfg.decision_mode.as_str());
    let _ = writeln!(out, "threshold_fraction {}", cfg.threshold_fraction);
    let _ = writeln!(out, "bleach {}", cfg.bleach);
    let _ = writeln!(out, "input_dim {}", model.input_dim);
    let _ = writeln!(out, "L {}", model.mapping.length());
    let _ = writeln!(out, "K {}", model.mapping.k());
    out.push_str("tuples\n");
    for tuple in model.mapping.tuples() {
        push_joined(&mut out, tuple.iter());
        out.push('\n');
    }
    let _ = writeln!(out, "classes {}", model.discriminators.len());
    for (class, disc) in &model.discriminators {
        let trained = model.trained_counts.get(class).copied().unwrap_or(0);
        let _ = writeln!(out, "class {class} trained {trained}");
        for (k, ram) in disc.rams().iter().enumerate() {
            let _ = write!(out, "ram {k}");
            for (address, count) in ram.entries() {
                let _ = write!(out, " {address}:{count}");
            }
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

fn push_joined<T: std::fmt::Display>(out: &mut String, items: impl Iterator<Item = T>) {
    for (i, item) in items.enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{item}");
    }
}

pub fn save_model(model: &WisardModel, path: &Path) -> Result<(), ModelFileError> {
    write_atomic(path, model_to_string(model).as_bytes())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<WisardModel, ModelFileError> {
    let text = std::fs::read_to_string(path)?;
    model_from_str(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &'static str) -> Result<&'a str, ModelFileError> {
        let (i, text) = self.inner.next().ok_or(ModelFileError::Truncated(what))?;
        self.line = i + 1;
        Ok(text)
    }

    fn malformed(&self, message: impl Into<String>) -> ModelFileError {
        ModelFileError::Malformed {
            line: self.line,
            message: message.into(),
        }
    }

    /// Reads a `key value` line and returns the value.
    fn field(&mut self, key: &'static str) -> Result<&'a str, ModelFileError> {
        let text = self.next(key)?;
        match text.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.malformed(format!("expected `{key} <value>`, found `{text}`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &'static str) -> Result<T, ModelFileError> {
        let value = self.field(key)?;
        value
            .parse()
            .map_err(|_| self.malformed(format!("invalid value `{value}` for `{key}`")))
    }

    fn number<T: std::str::FromStr>(&self, token: &str) -> Result<T, ModelFileError> {
        token
            .parse()
            .map_err(|_| self.malformed(format!("invalid number `{token}`")))
    }
}

fn invariant(message: impl Into<String>) -> ModelFileError {
    ModelFileError::InvariantViolation(message.into())
}

pub fn model_from_str(text: &str) -> Result<WisardModel, ModelFileError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next("header")? != MAGIC {
        return Err(lines.malformed(format!("missing `{MAGIC}` header")));
    }
    let version = lines.field("format_version")?;
    if version.parse::<u32>().ok() != Some(FORMAT_VERSION) {
        return Err(ModelFileError::UnsupportedVersion(version.to_string()));
    }

    let n: usize = lines.parsed("n")?;
    let seed: u64 = lines.parsed("seed")?;
    let mapping_kind: MappingKind = lines.parsed("mapping_kind")?;
    let decision_mode: DecisionMode = lines.parsed("decision_mode")?;
    let threshold_fraction: f64 = lines.parsed("threshold_fraction")?;
    let bleach: u32 = lines.parsed("bleach")?;
    let input_dim: usize = lines.parsed("input_dim")?;
    let length: usize = lines.parsed("L")?;
    let k: usize = lines.parsed("K")?;

    let config = WisardConfig {
        n,
        seed,
        mapping_kind,
        decision_mode,
        threshold_fraction,
        bleach,
    };
    config.validate().map_err(|e| invariant(e.to_string()))?;
    if k.checked_mul(n) != Some(length) {
        return Err(invariant(format!("K * n = {k} * {n} does not equal L = {length}")));
    }

    if lines.next("tuples")? != "tuples" {
        return Err(lines.malformed("expected `tuples`"));
    }
    let mut indices = Vec::with_capacity(length);
    for t in 0..k {
        let text = lines.next("tuple line")?;
        let before = indices.len();
        for token in text.split_ascii_whitespace() {
            let index: usize = lines.number(token)?;
            if index >= length {
                return Err(invariant(format!(
                    "tuple {t} lists index {index}, retina length is {length}"
                )));
            }
            indices.push(index);
        }
        if indices.len() - before != n {
            return Err(invariant(format!(
                "tuple {t} has {} indices, expected {n}",
                indices.len() - before
            )));
        }
    }
    let mapping = TupleMapping::from_indices(length, n, indices)
        .map_err(|e| invariant(e.to_string()))?;
    let mut model =
        WisardModel::with_mapping(config, input_dim, mapping).map_err(|e| invariant(e.to_string()))?;

    let class_count: usize = lines.parsed("classes")?;
    let address_limit = 1u64 << n;
    for _ in 0..class_count {
        let text = lines.next("class header")?;
        let tokens: Vec<&str> = text.split_ascii_whitespace().collect();
        let (class, trained) = match tokens.as_slice() {
            ["class", class, "trained", trained] => {
                (lines.number::<Label>(class)?, lines.number::<u64>(trained)?)
            }
            _ => return Err(lines.malformed(format!("expected class header, found `{text}`"))),
        };
        if model.discriminators.contains_key(&class) {
            return Err(invariant(format!("class {class} listed twice")));
        }
        let mut rams = Vec::with_capacity(k);
        for expected in 0..k {
            let text = lines.next("ram line")?;
            let mut tokens = text.split_ascii_whitespace();
            if tokens.next() != Some("ram") {
                return Err(lines.malformed(format!("expected `ram`, found `{text}`")));
            }
            let index: usize = lines.number(tokens.next().unwrap_or(""))?;
            if index != expected {
                return Err(invariant(format!(
                    "class {class}: ram {index} listed where ram {expected} was expected"
                )));
            }
            let mut ram = RamNeuron::new();
            let mut previous: Option<u64> = None;
            for pair in tokens {
                let (address, count) = pair
                    .split_once(':')
                    .ok_or_else(|| lines.malformed(format!("expected address:count, found `{pair}`")))?;
                let address: u64 = lines.number(address)?;
                let count: u32 = lines.number(count)?;
                if address >= address_limit {
                    return Err(invariant(format!(
                        "class {class} ram {index}: address {address} exceeds 2^{n}"
                    )));
                }
                if count == 0 {
                    return Err(invariant(format!(
                        "class {class} ram {index}: zero count at address {address}"
                    )));
                }
                if previous.is_some_and(|p| p >= address) {
                    return Err(invariant(format!(
                        "class {class} ram {index}: addresses not strictly ascending"
                    )));
                }
                previous = Some(address);
                ram.insert_raw(address, count);
            }
            rams.push(ram);
        }
        model
            .discriminators
            .insert(class, Discriminator::from_rams(class, rams));
        model.trained_counts.insert(class, trained);
    }
    if lines.next("end")? != "end" {
        return Err(lines.malformed("expected `end`"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::BitPattern;

    fn sample_model() -> WisardModel {
        let cfg = WisardConfig {
            n: 3,
            seed: 7,
            ..WisardConfig::default()
        };
        let mut m = WisardModel::new(cfg, 5).unwrap();
        m.train(&BitPattern::from_bits(&[1, 0, 1, 1, 0, 0]).unwrap(), 1).unwrap();
        m.train(&BitPattern::from_bits(&[1, 0, 1, 1, 0, 0]).unwrap(), 1).unwrap();
        m.train(&BitPattern::from_bits(&[0, 1, 0, 0, 1, 0]).unwrap(), 0).unwrap();
        m
    }

    #[test]
    fn roundtrip_is_exact() {
        let m = sample_model();
        let text = model_to_string(&m);
        let back = model_from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(model_to_string(&back), text);
    }

    #[test]
    fn out_of_range_tuple_index_is_invariant_violation() {
        let text = model_to_string(&sample_model());
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        let tuples_at = lines.iter().position(|l| l == "tuples").unwrap();
        lines[tuples_at + 1] = "0 1 6".into();
        let err = model_from_str(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, ModelFileError::InvariantViolation(_)), "{err}");
    }

    #[test]
    fn duplicate_tuple_index_is_invariant_violation() {
        let text = model_to_string(&sample_model());
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        let tuples_at = lines.iter().position(|l| l == "tuples").unwrap();
        lines[tuples_at + 2] = lines[tuples_at + 1].clone();
        let err = model_from_str(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, ModelFileError::InvariantViolation(_)), "{err}");
    }

    #[test]
    fn unknown_version_is_version_error() {
        let text = model_to_string(&sample_model()).replace("format_version 1", "format_version 9");
        assert!(matches!(
            model_from_str(&text),
            Err(ModelFileError::UnsupportedVersion(v)) if v == "9"
        ));
    }

    #[test]
    fn truncated_file_is_truncation_error() {
        let text = model_to_string(&sample_model());
        let cut = text.find("tuples").unwrap();
        assert!(matches!(
            model_from_str(&text[..cut]),
            Err(ModelFileError::Truncated("tuples"))
        ));
        assert!(matches!(
            model_from_str(&text[..text.len() - 4]),
            Err(ModelFileError::Truncated("end"))
        ));
    }

    #[test]
    fn address_outside_space_is_rejected() {
        let text = model_to_string(&sample_model()).replacen("ram 0", "ram 0 8:1", 1);
        assert!(matches!(
            model_from_str(&text),
            Err(ModelFileError::InvariantViolation(_))
        ));
    }

    #[test]
    fn malformed_fields_report_line() {
        let text = model_to_string(&sample_model()).replace("bleach 0", "bleach x");
        match model_from_str(&text) {
            Err(ModelFileError::Malformed { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
    }
}
