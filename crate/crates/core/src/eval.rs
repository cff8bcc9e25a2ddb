//! Accuracy reports in the style of a clinical comparison table: percent
//! correct over answered cases, with abstentions reported as coverage.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{predictions} predictions but {truth} truth labels")]
    Length { predictions: usize, truth: usize },
    #[error("nothing to evaluate")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// All cases, including abstentions.
    pub total: usize,
    /// Cases with a prediction.
    pub n: usize,
    pub correct: usize,
    /// `100 * correct / n`; zero when every case abstained.
    pub accuracy_percent: f64,
    /// Truth class -> (answered, correct).
    pub per_class: BTreeMap<String, (usize, usize)>,
    /// `n / total`
    pub coverage: f64,
}

/// `None` marks an abstention.
pub fn evaluate(predictions: &[Option<String>], truth: &[String]) -> Result<EvalReport, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::Length {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut per_class: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let (mut n, mut correct) = (0, 0);
    for (pred, actual) in predictions.iter().zip(truth) {
        let Some(pred) = pred else { continue };
        let entry = per_class.entry(actual.clone()).or_default();
        n += 1;
        entry.0 += 1;
        if pred == actual {
            correct += 1;
            entry.1 += 1;
        }
    }
    let accuracy_percent = if n > 0 { 100.0 * correct as f64 / n as f64 } else { 0.0 };
    Ok(EvalReport {
        total: truth.len(),
        n,
        correct,
        accuracy_percent,
        per_class,
        coverage: n as f64 / truth.len() as f64,
    })
}

impl EvalReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "cases: {}", self.total);
        let _ = writeln!(out, "answered: {}", self.n);
        let _ = writeln!(out, "coverage: {:.6}", self.coverage);
        let _ = writeln!(out, "correct: {}", self.correct);
        let _ = writeln!(out, "accuracy: {:.1}%", self.accuracy_percent);
        let _ = writeln!(out, "class\tn\tcorrect\taccuracy");
        for (class, (n, c)) in &self.per_class {
            let pct = if *n > 0 { 100.0 * *c as f64 / *n as f64 } else { 0.0 };
            let _ = writeln!(out, "{class}\t{n}\t{c}\t{pct:.1}%");
        }
        out
    }
}
