//! Cross-validation, tuple-size sweeps and CSV reporting.

use std::collections::{HashMap, HashSet};
use std::error::Error as StdError;
use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::{Dataset, FoldPlan};
use crate::encoding::{binarize_values, pad_to_multiple, BitPattern, FeatureVector, Label, POSITIVE};
use crate::exec::Execution;
use crate::io_util::write_atomic;
use crate::perceptron::{predict_perceptron, train_perceptron, PerceptronHyper};
use crate::wnn::{WisardConfig, WisardModel};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const SWEEP_HEADER: &str = "n,accuracy,tp,fp,tn,fn";
pub const COMPARISON_HEADER: &str = "system,accuracy";

type BoxError = Box<dyn StdError + Send + Sync>;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions ({preds}) and labels ({labels}) differ in length")]
    LengthMismatch { preds: usize, labels: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("fold {fold}: id `{id}` is not in the dataset")]
    UnknownId { fold: usize, id: String },
    #[error("fold {fold}: test id `{id}` also appears in the training set")]
    Leakage { fold: usize, id: String },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: BoxError,
    },
    #[error("tuple size {n}: {source}")]
    Sweep {
        n: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("invalid tuple-size range {0:?}")]
    BadRange(RangeInclusive<usize>),
    #[error(transparent)]
    Encoding(#[from] crate::encoding::EncodingError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted == POSITIVE, actual == POSITIVE) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Accuracy and confusion matrix, treating label 1 as positive.
pub fn accuracy(preds: &[Label], labels: &[Label]) -> Result<Metrics, EvalError> {
    if preds.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            labels: labels.len(),
        });
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut confusion = ConfusionMatrix::default();
    for (&p, &l) in preds.iter().zip(labels) {
        confusion.record(p, l);
    }
    Ok(Metrics {
        accuracy: confusion.accuracy(),
        confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub id: String,
    pub label: Label,
    pub predicted: Label,
    /// Fired RAMs of the predicted class; `None` for non-WiSARD classifiers.
    pub fired: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub index: usize,
    pub predictions: Vec<Prediction>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValReport {
    pub folds: Vec<FoldResult>,
    /// Micro-averaged over every test prediction of every fold.
    pub pooled: Metrics,
}

impl CrossValReport {
    pub fn predictions(&self) -> impl Iterator<Item = &Prediction> {
        self.folds.iter().flat_map(|f| f.predictions.iter())
    }
}

/// Training and test sample indices of one fold, with the leakage check.
struct FoldIndices {
    train: Vec<usize>,
    test: Vec<usize>,
}

fn resolve_folds(ds: &Dataset, plan: &FoldPlan) -> Result<Vec<FoldIndices>, EvalError> {
    let index: HashMap<&str, usize> = ds
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    plan.folds
        .iter()
        .enumerate()
        .map(|(fold, f)| {
            let lookup = |id: &String| {
                index.get(id.as_str()).copied().ok_or_else(|| EvalError::UnknownId {
                    fold,
                    id: id.clone(),
                })
            };
            let train = f.train_ids.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
            let test = f.test_ids.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
            let train_set: HashSet<usize> = train.iter().copied().collect();
            if let Some(&leak) = test.iter().find(|i| train_set.contains(i)) {
                return Err(EvalError::Leakage {
                    fold,
                    id: ds.samples()[leak].id.clone(),
                });
            }
            Ok(FoldIndices { train, test })
        })
        .collect()
}

/// Runs any classifier through the fold plan.
///
/// `fit_predict` receives the training samples and the test samples of one
/// fold and returns `(predicted label, fired)` per test sample. It is called
/// once per fold with nothing carried between calls.
pub fn cross_validate_with<F>(
    ds: &Dataset,
    plan: &FoldPlan,
    exec: Execution,
    fit_predict: F,
) -> Result<CrossValReport, EvalError>
where
    F: Fn(&[usize], &[usize]) -> Result<Vec<(Label, Option<usize>)>, BoxError> + Sync + Send,
{
    let folds = resolve_folds(ds, plan)?;
    if folds.is_empty() {
        return Err(EvalError::Empty);
    }
    let results = exec.map_range(0..folds.len(), |fold| {
        let FoldIndices { train, test } = &folds[fold];
        let outputs =
            fit_predict(train, test).map_err(|source| EvalError::Fold { fold, source })?;
        let predictions: Vec<Prediction> = test
            .iter()
            .zip(outputs)
            .map(|(&i, (predicted, fired))| Prediction {
                id: ds.samples()[i].id.clone(),
                label: ds.label_of(i),
                predicted,
                fired,
            })
            .collect();
        let preds: Vec<Label> = predictions.iter().map(|p| p.predicted).collect();
        let labels: Vec<Label> = predictions.iter().map(|p| p.label).collect();
        let metrics = accuracy(&preds, &labels)?;
        Ok(FoldResult {
            index: fold,
            predictions,
            metrics,
        })
    });
    let folds = results.into_iter().collect::<Result<Vec<_>, EvalError>>()?;

    let mut pooled = ConfusionMatrix::default();
    for p in folds.iter().flat_map(|f| &f.predictions) {
        pooled.record(p.predicted, p.label);
    }
    if pooled.total() == 0 {
        return Err(EvalError::Empty);
    }
    Ok(CrossValReport {
        folds,
        pooled: Metrics {
            accuracy: pooled.accuracy(),
            confusion: pooled,
        },
    })
}

/// Mean-threshold encoding of every sample, before padding.
pub fn binarize_dataset(ds: &Dataset) -> Result<Vec<BitPattern>, EvalError> {
    ds.samples()
        .iter()
        .map(|s| Ok(binarize_values(&s.values)?))
        .collect()
}

fn wisard_crossval_on_patterns(
    ds: &Dataset,
    patterns: &[BitPattern],
    plan: &FoldPlan,
    cfg: &WisardConfig,
    exec: Execution,
) -> Result<CrossValReport, EvalError> {
    let padded = patterns
        .iter()
        .map(|p| pad_to_multiple(p, cfg.n))
        .collect::<Result<Vec<_>, _>>()?;
    cross_validate_with(ds, plan, exec, |train, test| {
        let mut model = WisardModel::new(*cfg, ds.dim())?;
        for &i in train {
            model.train(&padded[i], ds.label_of(i))?;
        }
        test.iter()
            .map(|&i| {
                let c = model.classify(&padded[i])?;
                Ok((c.label, Some(c.fired())))
            })
            .collect()
    })
}

/// Grouped leave-one-out evaluation of a fresh WiSARD per fold.
pub fn run_cross_validation(
    ds: &Dataset,
    plan: &FoldPlan,
    cfg: &WisardConfig,
    exec: Execution,
) -> Result<CrossValReport, EvalError> {
    let patterns = binarize_dataset(ds)?;
    wisard_crossval_on_patterns(ds, &patterns, plan, cfg, exec)
}

/// Same fold plan, perceptron baseline on the raw feature values.
pub fn run_perceptron_cross_validation(
    ds: &Dataset,
    plan: &FoldPlan,
    hyper: PerceptronHyper,
    exec: Execution,
) -> Result<CrossValReport, EvalError> {
    cross_validate_with(ds, plan, exec, |train, test| {
        let train: Vec<&FeatureVector> = train.iter().map(|&i| &ds.samples()[i]).collect();
        let model = train_perceptron(&train, hyper)?;
        test.iter()
            .map(|&i| Ok((predict_perceptron(&model, &ds.samples()[i])?, None)))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Row with the highest accuracy; the smallest `n` wins ties.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .fold(None, |best: Option<&SweepRow>, row| match best {
                Some(b) if b.accuracy >= row.accuracy => Some(b),
                _ => Some(row),
            })
    }
}

/// Pooled cross-validation accuracy for every tuple size in `n_range`,
/// reusing one fold plan. Rows ascend by `n`.
pub fn sweep_tuple_size(
    ds: &Dataset,
    plan: &FoldPlan,
    base_cfg: &WisardConfig,
    n_range: RangeInclusive<usize>,
    exec: Execution,
) -> Result<SweepResult, EvalError> {
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(EvalError::BadRange(n_range));
    }
    let patterns = binarize_dataset(ds)?;
    let ns: Vec<usize> = n_range.collect();
    let rows = exec.map(&ns, |&n| {
        let cfg = base_cfg.with_n(n);
        wisard_crossval_on_patterns(ds, &patterns, plan, &cfg, exec)
            .map(|report| SweepRow {
                n,
                accuracy: report.pooled.accuracy,
                confusion: report.pooled.confusion,
            })
            .map_err(|e| EvalError::Sweep {
                n,
                source: Box::new(e),
            })
    });
    Ok(SweepResult {
        rows: rows.into_iter().collect::<Result<_, _>>()?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum System {
    WisardTl,
    WisardNoTl,
    PerceptronBaseline,
}

impl System {
    pub fn as_str(self) -> &'static str {
        match self {
            System::WisardTl => "wisard_tl",
            System::WisardNoTl => "wisard_no_tl",
            System::PerceptronBaseline => "perceptron_baseline",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub system: System,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub sweep: PathBuf,
    pub comparison: PathBuf,
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in &sweep.rows {
        let c = &r.confusion;
        out.push_str(&format!(
            "{},{:.4},{},{},{},{}\n",
            r.n, r.accuracy, c.tp, c.fp, c.tn, c.fn_
        ));
    }
    out
}

/// Comparison table, one row per system in fixed system order.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(|r| r.system);
    let mut out = format!("{COMPARISON_HEADER}\n");
    for r in sorted {
        out.push_str(&format!("{},{:.4}\n", r.system, r.accuracy));
    }
    out
}

/// Writes `sweep.csv` and `comparison.csv` into `dir`. Nothing is written
/// when either table would be empty.
pub fn emit_report(
    sweep: &SweepResult,
    comparison: &[ComparisonRow],
    dir: &Path,
) -> Result<ReportPaths, EvalError> {
    if sweep.rows.is_empty() || comparison.is_empty() {
        return Err(EvalError::Empty);
    }
    std::fs::create_dir_all(dir)?;
    let paths = ReportPaths {
        sweep: dir.join(SWEEP_FILE),
        comparison: dir.join(COMPARISON_FILE),
    };
    write_atomic(&paths.sweep, sweep_csv(sweep).as_bytes())?;
    write_atomic(&paths.comparison, comparison_csv(comparison).as_bytes())?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::make_loo_plan;
    use crate::encoding::NEGATIVE;

    #[test]
    fn accuracy_examples() {
        let m = accuracy(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(
            m.confusion,
            ConfusionMatrix { tp: 1, fp: 1, tn: 1, fn_: 1 }
        );
        assert_eq!(m.accuracy, 0.5);

        let m = accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!((m.confusion.fp, m.confusion.fn_), (0, 0));

        let m = accuracy(&[0, 0, 0, 0], &[1, 1, 1, 0]).unwrap();
        assert_eq!(m.accuracy, 0.25);
        assert_eq!(m.confusion.tp, 0);

        assert!(matches!(accuracy(&[1], &[1, 0]), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(accuracy(&[], &[]), Err(EvalError::Empty)));
    }

    /// Positives share one feature vector, negatives its mirror image.
    fn two_prototypes(pos: usize, neg: usize, dim: usize) -> Dataset {
        let proto: Vec<f64> = (0..dim).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let samples = (0..pos + neg)
            .map(|i| {
                let (label, sign) = if i < pos { (POSITIVE, 1.0) } else { (NEGATIVE, -1.0) };
                FeatureVector::new(
                    format!("s{i}"),
                    Some(label),
                    proto.iter().map(|v| v * sign).collect(),
                )
            })
            .collect();
        Dataset::new(samples).unwrap()
    }

    #[test]
    fn separable_prototypes_classify_perfectly() {
        let ds = two_prototypes(63, 15, 60);
        let plan = make_loo_plan(&ds, 3, 1, 3).unwrap();
        let cfg = WisardConfig::default().with_n(7);
        let report = run_cross_validation(&ds, &plan, &cfg, Execution::Sequential).unwrap();
        assert_eq!(report.pooled.accuracy, 1.0);
        assert_eq!(report.predictions().count(), 60);
        assert_eq!(report.pooled.confusion.total(), 60);
        assert!(report
            .predictions()
            .filter(|p| p.label == POSITIVE)
            .all(|p| p.fired == Some(9)));
    }

    #[test]
    fn full_threshold_still_accepts_exact_duplicates() {
        let ds = two_prototypes(12, 4, 24);
        let plan = make_loo_plan(&ds, 3, 1, 0).unwrap();
        let cfg = WisardConfig {
            threshold_fraction: 1.0,
            ..WisardConfig::default().with_n(5)
        };
        let report = run_cross_validation(&ds, &plan, &cfg, Execution::Sequential).unwrap();
        assert_eq!(report.pooled.accuracy, 1.0);
    }

    #[test]
    fn leakage_is_detected() {
        let ds = two_prototypes(6, 2, 8);
        let mut plan = make_loo_plan(&ds, 3, 1, 0).unwrap();
        let leaked = plan.folds[1].test_ids[0].clone();
        plan.folds[1].train_ids.push(leaked.clone());
        match run_cross_validation(&ds, &plan, &WisardConfig::default().with_n(2), Execution::Sequential) {
            Err(EvalError::Leakage { fold, id }) => assert_eq!((fold, id), (1, leaked)),
            other => panic!("unexpected {other:?}"),
        }
        plan.folds[1].train_ids.pop();
        plan.folds[0].test_ids[0] = "missing".into();
        assert!(matches!(
            run_cross_validation(&ds, &plan, &WisardConfig::default().with_n(2), Execution::Sequential),
            Err(EvalError::UnknownId { fold: 0, .. })
        ));
    }

    #[test]
    fn fold_errors_carry_index() {
        // training only on negatives leaves no positive discriminator
        let samples = vec![
            FeatureVector::new("p", Some(POSITIVE), vec![1.0, 0.0]),
            FeatureVector::new("n1", Some(NEGATIVE), vec![0.0, 1.0]),
            FeatureVector::new("n2", Some(NEGATIVE), vec![0.0, 1.0]),
        ];
        let ds = Dataset::new(samples).unwrap();
        let plan = FoldPlan {
            seed: 0,
            pos_group: 1,
            neg_group: 1,
            folds: vec![crate::dataset::Fold {
                test_ids: vec!["p".into(), "n1".into()],
                train_ids: vec!["n2".into()],
            }],
        };
        let err = run_cross_validation(&ds, &plan, &WisardConfig::default().with_n(2), Execution::Sequential)
            .unwrap_err();
        assert!(matches!(err, EvalError::Fold { fold: 0, .. }), "{err}");
    }

    #[test]
    fn sweep_rows_and_single_point_consistency() {
        let ds = two_prototypes(21, 6, 40);
        let plan = make_loo_plan(&ds, 3, 1, 9).unwrap();
        let base = WisardConfig::default();
        let sweep = sweep_tuple_size(&ds, &plan, &base, 9..=14, Execution::Parallel).unwrap();
        assert_eq!(sweep.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![9, 10, 11, 12, 13, 14]);
        assert!(sweep.rows.iter().all(|r| r.accuracy == 1.0));

        let single = sweep_tuple_size(&ds, &plan, &base, 3..=3, Execution::Sequential).unwrap();
        let direct = run_cross_validation(&ds, &plan, &base.with_n(3), Execution::Sequential).unwrap();
        assert_eq!(single.rows.len(), 1);
        assert_eq!(single.rows[0].accuracy, direct.pooled.accuracy);
        assert_eq!(single.rows[0].confusion, direct.pooled.confusion);

        assert!(matches!(
            sweep_tuple_size(&ds, &plan, &base, 0..=3, Execution::Sequential),
            Err(EvalError::BadRange(_))
        ));
    }

    #[test]
    fn best_row_prefers_smallest_n_on_ties() {
        let row = |n, accuracy| SweepRow { n, accuracy, confusion: ConfusionMatrix::default() };
        let sweep = SweepResult { rows: vec![row(9, 0.5), row(10, 0.75), row(11, 0.75)] };
        assert_eq!(sweep.best().unwrap().n, 10);
        assert!(SweepResult::default().best().is_none());
    }

    #[test]
    fn report_files() {
        let dir = tempfile::tempdir().unwrap();
        let sweep = SweepResult {
            rows: (9..=14)
                .map(|n| SweepRow {
                    n,
                    accuracy: 2.0 / 3.0,
                    confusion: ConfusionMatrix { tp: 2, fp: 0, tn: 0, fn_: 1 },
                })
                .collect(),
        };
        let comparison = [
            ComparisonRow { system: System::PerceptronBaseline, accuracy: 0.5 },
            ComparisonRow { system: System::WisardTl, accuracy: 1.0 },
            ComparisonRow { system: System::WisardNoTl, accuracy: 0.25 },
        ];
        let paths = emit_report(&sweep, &comparison, dir.path()).unwrap();
        let sweep_text = std::fs::read_to_string(&paths.sweep).unwrap();
        let lines: Vec<&str> = sweep_text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "n,accuracy,tp,fp,tn,fn");
        assert_eq!(lines[1], "9,0.6667,2,0,0,1");
        assert_eq!(
            std::fs::read_to_string(&paths.comparison).unwrap(),
            "system,accuracy\nwisard_tl,1.0000\nwisard_no_tl,0.2500\nperceptron_baseline,0.5000\n"
        );
    }

    #[test]
    fn empty_report_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let comparison = [ComparisonRow { system: System::WisardTl, accuracy: 1.0 }];
        assert!(matches!(
            emit_report(&SweepResult::default(), &comparison, &out),
            Err(EvalError::Empty)
        ));
        assert!(!out.exists());
    }
}
