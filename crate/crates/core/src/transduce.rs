//! Transductive classification with confidence.
//!
//! A query point is appended to the training set twice, once labeled BLACK
//! (`+1`) and once WHITE (`-1`), and a classifier is trained on each
//! picture. The label whose picture does *not* need the query as a support
//! vector wins; the confidence is one minus the support-vector fraction of
//! the rejected picture.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::svm::{self, Kernel, SvmError, SvmModel, TrainParams};

#[derive(Debug, Error, PartialEq)]
pub enum TransduceError {
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("need two classes")]
    SingleClass,
    #[error("empty training set")]
    EmptyTraining,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// The `+1` class.
    Black,
    /// The `-1` class.
    White,
    None,
}

impl Verdict {
    pub fn from_sign(label: f64) -> Verdict {
        if label > 0.0 {
            Verdict::Black
        } else {
            Verdict::White
        }
    }

    pub fn sign(self) -> Option<f64> {
        match self {
            Verdict::Black => Some(1.0),
            Verdict::White => Some(-1.0),
            Verdict::None => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Black => "BLACK",
            Verdict::White => "WHITE",
            Verdict::None => "NONE",
        })
    }
}

/// Which branch of the decision rule produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Query is a support vector only in the BLACK picture, or in both with
    /// fewer BLACK support vectors.
    White,
    /// Mirror of [`Rule::White`].
    Black,
    /// Query is a support vector in both pictures with equal counts.
    Tie,
    /// Query is a support vector in neither picture.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransductiveVerdict {
    pub label: Verdict,
    pub confidence: Option<f64>,
    pub sv_count_black: usize,
    pub sv_count_white: usize,
    pub in_sv_black: bool,
    pub in_sv_white: bool,
    pub fallback: bool,
    pub rule: Rule,
    /// Size of each augmented picture.
    pub l: usize,
}

/// Applies the decision rule to the support-vector facts of the two
/// pictures. `inductive` is the base classifier's label, used only when
/// the query is a support vector in neither picture.
pub fn decide(
    in_sv_black: bool,
    in_sv_white: bool,
    sv_count_black: usize,
    sv_count_white: usize,
    l: usize,
    inductive: impl FnOnce() -> Verdict,
) -> TransductiveVerdict {
    let conf = |rejected: usize| 1.0 - rejected as f64 / l as f64;
    let (label, confidence, rule) = match (in_sv_black, in_sv_white) {
        (true, false) => (Verdict::White, Some(conf(sv_count_black)), Rule::White),
        (false, true) => (Verdict::Black, Some(conf(sv_count_white)), Rule::Black),
        (true, true) if sv_count_black < sv_count_white => {
            (Verdict::White, Some(conf(sv_count_black)), Rule::White)
        }
        (true, true) if sv_count_black > sv_count_white => {
            (Verdict::Black, Some(conf(sv_count_white)), Rule::Black)
        }
        (true, true) => (Verdict::None, None, Rule::Tie),
        (false, false) => (
            inductive(),
            Some(conf(sv_count_black.max(sv_count_white))),
            Rule::Fallback,
        ),
    };
    TransductiveVerdict {
        label,
        confidence,
        sv_count_black,
        sv_count_white,
        in_sv_black,
        in_sv_white,
        fallback: rule == Rule::Fallback,
        rule,
        l,
    }
}

/// Training data in solver form, validated once and shared by every query.
#[derive(Debug, Clone)]
pub struct Transducer {
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
    kernel: Kernel,
    params: TrainParams,
}

impl Transducer {
    pub fn new(train: &Dataset, kernel: Kernel, params: TrainParams) -> Result<Self, TransduceError> {
        let labels = train
            .examples()
            .iter()
            .map(|e| svm::parse_label(&e.label))
            .collect::<Result<Vec<_>, _>>()?;
        let points = train.examples().iter().map(|e| e.features.clone()).collect();
        Transducer::from_points(points, labels, kernel, params)
    }

    pub fn from_points(
        points: Vec<Vec<f64>>,
        labels: Vec<f64>,
        kernel: Kernel,
        params: TrainParams,
    ) -> Result<Self, TransduceError> {
        if points.is_empty() {
            return Err(TransduceError::EmptyTraining);
        }
        if let Some(&bad) = labels.iter().find(|&&c| c != 1.0 && c != -1.0) {
            return Err(SvmError::BadLabel(bad.to_string()).into());
        }
        if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
            return Err(TransduceError::SingleClass);
        }
        kernel.validate()?;
        Ok(Transducer {
            points,
            labels,
            kernel,
            params,
        })
    }

    fn dim(&self) -> usize {
        self.points[0].len()
    }

    fn picture(&self, x: &[f64], label: f64) -> Result<SvmModel, SvmError> {
        let mut points = self.points.clone();
        let mut labels = self.labels.clone();
        points.push(x.to_vec());
        labels.push(label);
        svm::train_points(points, labels, self.kernel, &self.params)
    }

    pub fn classify(&self, x: &[f64]) -> Result<TransductiveVerdict, TransduceError> {
        if x.len() != self.dim() {
            return Err(SvmError::Dimension {
                expected: self.dim(),
                found: x.len(),
            }
            .into());
        }
        let black = self.picture(x, 1.0)?;
        let white = self.picture(x, -1.0)?;
        let q = self.points.len();
        let l = q + 1;
        let mut inductive_err = None;
        let verdict = decide(
            black.is_support_vector(q),
            white.is_support_vector(q),
            black.sv_count(),
            white.sv_count(),
            l,
            || match self.inductive(x) {
                Ok(v) => v,
                Err(e) => {
                    inductive_err = Some(e);
                    Verdict::None
                }
            },
        );
        match inductive_err {
            Some(e) => Err(e.into()),
            None => Ok(verdict),
        }
    }

    fn inductive(&self, x: &[f64]) -> Result<Verdict, SvmError> {
        let base = svm::train_points(
            self.points.clone(),
            self.labels.clone(),
            self.kernel,
            &self.params,
        )?;
        Ok(Verdict::from_sign(base.predict(x)?))
    }

    /// One independent verdict per query, in query order.
    pub fn classify_all(&self, queries: &[Vec<f64>]) -> Result<Vec<TransductiveVerdict>, TransduceError> {
        queries.par_iter().map(|x| self.classify(x)).collect()
    }
}

pub fn classify_with_confidence(
    train: &Dataset,
    x: &[f64],
    kernel: Kernel,
    box_c: f64,
) -> Result<TransductiveVerdict, TransduceError> {
    let params = TrainParams::default().with_box_c(box_c);
    Transducer::new(train, kernel, params)?.classify(x)
}

/// Test labels are ignored.
pub fn batch_transduce(
    train: &Dataset,
    test: &Dataset,
    kernel: Kernel,
    box_c: f64,
) -> Result<Vec<TransductiveVerdict>, TransduceError> {
    let params = TrainParams::default().with_box_c(box_c);
    let t = Transducer::new(train, kernel, params)?;
    let queries: Vec<Vec<f64>> = test.examples().iter().map(|e| e.features.clone()).collect();
    t.classify_all(&queries)
}

/// One TSV row: index, label, confidence (blank for NONE), the two
/// support-vector counts and the fallback flag.
pub fn format_row(index: usize, v: &TransductiveVerdict) -> String {
    let conf = v.confidence.map(|c| format!("{c:.6}")).unwrap_or_default();
    format!(
        "{index}\t{}\t{conf}\t{}\t{}\t{}",
        v.label, v.sv_count_black, v.sv_count_white, v.fallback as u8
    )
}

pub const TSV_HEADER: &str = "index\tlabel\tconfidence\tsv_black\tsv_white\tfallback";
