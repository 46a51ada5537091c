//! Feature-file ingestion and grouped leave-one-out fold planning.
//!
//! Feature files are UTF-8 CSV with header `id,label,f0,...,f{D-1}`. Labels
//! are `0` or `1`; an empty label field marks an unlabeled row, which is
//! accepted for prediction but rejected when building a [`Dataset`].

use std::collections::{BTreeMap, HashSet};
use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{FeatureVector, Label, NEGATIVE, POSITIVE};
use crate::io_util::write_atomic;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read feature file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed CSV: {message}")]
    Csv { line: u64, message: String },
    #[error("feature file has no header")]
    MissingHeader,
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: expected {expected} features, found {found}")]
    DimensionMismatch {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: label `{value}` is not 0 or 1")]
    BadLabel { line: u64, value: String },
    #[error("line {line}: sample `{id}` has no label")]
    Unlabeled { line: u64, id: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: u64, id: String },
    #[error("line {line}: empty id")]
    EmptyId { line: u64 },
    #[error("line {line}, column {column}: cannot parse `{value}` as a number")]
    BadNumber {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("line {line}, column {column}: value `{value}` is not finite")]
    NonFinite {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("no samples")]
    NoSamples,
    #[error("need at least {needed} {class} samples, found {found}")]
    Insufficient {
        class: &'static str,
        needed: usize,
        found: usize,
    },
    #[error("group sizes must be at least 1")]
    ZeroGroup,
    #[error("empty training set: fold {fold} tests every sample")]
    EmptyTrainingSet { fold: usize },
    #[error("fold plan JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Rows of a feature file in file order, with their shared dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRows {
    pub dim: usize,
    pub rows: Vec<FeatureVector>,
}

fn csv_error(e: csv::Error) -> DatasetError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DatasetError::Io(io),
        kind => DatasetError::Csv {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Reads every row of a feature file. Zero rows is not an error here.
pub fn read_feature_rows(path: &Path) -> Result<FeatureRows, DatasetError> {
    let file = std::fs::File::open(path)?;
    parse_feature_rows(file)
}

pub fn parse_feature_rows<R: std::io::Read>(reader: R) -> Result<FeatureRows, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = records
        .next()
        .ok_or(DatasetError::MissingHeader)?
        .map_err(csv_error)?;
    if header.get(0) != Some("id") || header.get(1) != Some("label") {
        return Err(DatasetError::BadHeader(
            "first two columns must be `id,label`".into(),
        ));
    }
    let dim = header.len() - 2;
    if dim == 0 {
        return Err(DatasetError::BadHeader("no feature columns".into()));
    }
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{i}") {
            return Err(DatasetError::BadHeader(format!(
                "column {} is `{name}`, expected `f{i}`",
                i + 2
            )));
        }
    }

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 2 {
            return Err(DatasetError::DimensionMismatch {
                line,
                expected: dim,
                found: record.len().saturating_sub(2),
            });
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(DatasetError::EmptyId { line });
        }
        let label = match &record[1] {
            "" => None,
            "0" => Some(NEGATIVE),
            "1" => Some(POSITIVE),
            other => {
                return Err(DatasetError::BadLabel {
                    line,
                    value: other.to_string(),
                })
            }
        };
        let mut values = Vec::with_capacity(dim);
        for (j, field) in record.iter().skip(2).enumerate() {
            let column = j + 2;
            let v: f64 = field.trim().parse().map_err(|_| DatasetError::BadNumber {
                line,
                column,
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::NonFinite {
                    line,
                    column,
                    value: field.to_string(),
                });
            }
            values.push(v);
        }
        if !seen.insert(id.clone()) {
            return Err(DatasetError::DuplicateId { line, id });
        }
        rows.push(FeatureVector { id, label, values });
    }
    Ok(FeatureRows { dim, rows })
}

/// Writes samples in the feature-file format. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_feature_file(path: &Path, samples: &[FeatureVector]) -> Result<(), DatasetError> {
    let dim = samples.first().map_or(0, FeatureVector::dim);
    let mut buf = Vec::new();
    write!(buf, "id,label")?;
    for i in 0..dim {
        write!(buf, ",f{i}")?;
    }
    writeln!(buf)?;
    for s in samples {
        write!(buf, "{},", s.id)?;
        if let Some(label) = s.label {
            write!(buf, "{label}")?;
        }
        for v in &s.values {
            write!(buf, ",{v:?}")?;
        }
        writeln!(buf)?;
    }
    write_atomic(path, &buf)?;
    Ok(())
}

/// A validated, fully labeled set of samples sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<FeatureVector>,
    dim: usize,
}

impl Dataset {
    /// Validates labeled samples: non-empty, uniform dimension, unique ids,
    /// finite values. Lines in errors are 1-based sample positions + 1 (the
    /// header occupies line 1).
    pub fn new(samples: Vec<FeatureVector>) -> Result<Self, DatasetError> {
        let first = samples.first().ok_or(DatasetError::NoSamples)?;
        let dim = first.dim();
        let mut seen = HashSet::new();
        for (i, s) in samples.iter().enumerate() {
            let line = i as u64 + 2;
            if s.dim() != dim || dim == 0 {
                return Err(DatasetError::DimensionMismatch {
                    line,
                    expected: dim,
                    found: s.dim(),
                });
            }
            match s.label {
                Some(NEGATIVE | POSITIVE) => {}
                Some(other) => {
                    return Err(DatasetError::BadLabel {
                        line,
                        value: other.to_string(),
                    })
                }
                None => {
                    return Err(DatasetError::Unlabeled {
                        line,
                        id: s.id.clone(),
                    })
                }
            }
            if let Some(j) = s.values.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite {
                    line,
                    column: j + 2,
                    value: s.values[j].to_string(),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(DatasetError::DuplicateId {
                    line,
                    id: s.id.clone(),
                });
            }
        }
        Ok(Self { samples, dim })
    }

    pub fn samples(&self) -> &[FeatureVector] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Label of every sample; `Dataset` guarantees all are present.
    pub fn label_of(&self, index: usize) -> Label {
        self.samples[index].label.unwrap_or(NEGATIVE)
    }

    pub fn class_counts(&self) -> BTreeMap<Label, usize> {
        let mut counts = BTreeMap::new();
        for i in 0..self.len() {
            *counts.entry(self.label_of(i)).or_insert(0) += 1;
        }
        counts
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.samples.iter().position(|s| s.id == id)
    }
}

/// Loads and validates a labeled feature file.
pub fn load_feature_file(path: &Path) -> Result<Dataset, DatasetError> {
    let rows = read_feature_rows(path)?;
    if rows.rows.is_empty() {
        return Err(DatasetError::NoSamples);
    }
    for (i, row) in rows.rows.iter().enumerate() {
        if row.label.is_none() {
            return Err(DatasetError::Unlabeled {
                line: i as u64 + 2,
                id: row.id.clone(),
            });
        }
    }
    Dataset::new(rows.rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub test_ids: Vec<String>,
    pub train_ids: Vec<String>,
}

/// Grouped leave-one-out plan: each fold tests one group of positives and
/// one group of negatives and trains on everything else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub pos_group: usize,
    pub neg_group: usize,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn total_test_size(&self) -> usize {
        self.folds.iter().map(|f| f.test_ids.len()).sum()
    }

    pub fn to_json(&self) -> Result<String, DatasetError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Builds the fold plan.
///
/// The number of folds is `negatives / neg_group` (floor). Positives and
/// negatives are each shuffled with `seed` and cut into disjoint groups; one
/// group of each class forms a fold's test set. Positives left over after
/// the last fold are never tested and train in every fold.
pub fn make_loo_plan(
    ds: &Dataset,
    pos_group: usize,
    neg_group: usize,
    seed: u64,
) -> Result<FoldPlan, DatasetError> {
    if pos_group == 0 || neg_group == 0 {
        return Err(DatasetError::ZeroGroup);
    }
    let (mut positives, mut negatives): (Vec<usize>, Vec<usize>) =
        (0..ds.len()).partition(|&i| ds.label_of(i) == POSITIVE);
    if negatives.len() < neg_group {
        return Err(DatasetError::Insufficient {
            class: "negative",
            needed: neg_group,
            found: negatives.len(),
        });
    }
    let fold_count = negatives.len() / neg_group;
    if positives.len() < fold_count * pos_group {
        return Err(DatasetError::Insufficient {
            class: "positive",
            needed: fold_count * pos_group,
            found: positives.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);

    let mut folds = Vec::with_capacity(fold_count);
    for f in 0..fold_count {
        let test: Vec<usize> = positives[f * pos_group..(f + 1) * pos_group]
            .iter()
            .chain(&negatives[f * neg_group..(f + 1) * neg_group])
            .copied()
            .collect();
        let train_ids: Vec<String> = (0..ds.len())
            .filter(|i| !test.contains(i))
            .map(|i| ds.samples[i].id.clone())
            .collect();
        if train_ids.is_empty() {
            return Err(DatasetError::EmptyTrainingSet { fold: f });
        }
        folds.push(Fold {
            test_ids: test.iter().map(|&i| ds.samples[i].id.clone()).collect(),
            train_ids,
        });
    }
    Ok(FoldPlan {
        seed,
        pos_group,
        neg_group,
        folds,
    })
}
