//! Prediction with expert advice: the Aggregating Algorithm over a finite
//! pool of experts.
//!
//! After each round every weight is multiplied by `exp(-eta * loss)` and
//! the pool is renormalized. Weights are kept as normalized logarithms so
//! they stay strictly positive over long streams.

use std::fmt::Write as _;

use thiserror::Error;

/// Per-round cap on the log loss, in nats.
pub const LOG_LOSS_CAP: f64 = 35.0;
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum HedgeError {
    #[error("pool needs at least one expert")]
    NoExperts,
    #[error("nonpositive weight {0} in prior")]
    NonpositiveWeight(f64),
    #[error("learning rate must be positive and finite, got {0}")]
    Eta(f64),
    #[error("expected {expected} values, got {found}")]
    Length { expected: usize, found: usize },
    #[error("prediction {0} outside [0, 1]")]
    Prediction(f64),
    #[error("loss {0} is negative or not finite")]
    Loss(f64),
    #[error("outcome {0} is not 0 or 1")]
    Outcome(f64),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Predictions are probabilities of outcome 1; merging is the weighted
    /// average (Bayes mixture).
    Log,
    /// Predictions are thresholded at 0.5; merging is a weighted majority
    /// vote.
    ZeroOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertPool {
    /// `ln w`, normalized so the weights sum to one.
    log_weights: Vec<f64>,
    eta: f64,
    loss_kind: LossKind,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

impl ExpertPool {
    /// Uniform weights when `prior` is `None`, otherwise a normalized copy
    /// of `prior`.
    pub fn new(k: usize, prior: Option<&[f64]>, eta: f64, loss_kind: LossKind) -> Result<Self, HedgeError> {
        if k == 0 {
            return Err(HedgeError::NoExperts);
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(HedgeError::Eta(eta));
        }
        let log_weights = match prior {
            None => vec![-(k as f64).ln(); k],
            Some(p) => {
                if p.len() != k {
                    return Err(HedgeError::Length {
                        expected: k,
                        found: p.len(),
                    });
                }
                if let Some(&bad) = p.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
                    return Err(HedgeError::NonpositiveWeight(bad));
                }
                let total: f64 = p.iter().sum();
                p.iter().map(|w| (w / total).ln()).collect()
            }
        };
        Ok(ExpertPool {
            log_weights,
            eta,
            loss_kind,
        })
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    fn check_predictions(&self, predictions: &[f64]) -> Result<(), HedgeError> {
        if predictions.len() != self.len() {
            return Err(HedgeError::Length {
                expected: self.len(),
                found: predictions.len(),
            });
        }
        match predictions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            Some(&bad) => Err(HedgeError::Prediction(bad)),
            None => Ok(()),
        }
    }

    /// Merged prediction in [0, 1]. Under zero-one loss a weight tie gives
    /// 0.5.
    pub fn merge(&self, predictions: &[f64]) -> Result<f64, HedgeError> {
        self.check_predictions(predictions)?;
        let w = self.weights();
        Ok(match self.loss_kind {
            LossKind::Log => w.iter().zip(predictions).map(|(w, p)| w * p).sum::<f64>().clamp(0.0, 1.0),
            LossKind::ZeroOne => {
                let ones: f64 = w.iter().zip(predictions).map(|(w, &p)| w * vote(p)).sum();
                let zeros: f64 = w.iter().sum::<f64>() - ones;
                if ones > zeros + TIE_EPS {
                    1.0
                } else if zeros > ones + TIE_EPS {
                    0.0
                } else {
                    0.5
                }
            }
        })
    }

    /// `w <- w exp(-eta l)`, renormalized.
    pub fn update(&self, losses: &[f64]) -> Result<ExpertPool, HedgeError> {
        if losses.len() != self.len() {
            return Err(HedgeError::Length {
                expected: self.len(),
                found: losses.len(),
            });
        }
        if let Some(&bad) = losses.iter().find(|&&l| !(l >= 0.0 && l.is_finite())) {
            return Err(HedgeError::Loss(bad));
        }
        let raw: Vec<f64> = self
            .log_weights
            .iter()
            .zip(losses)
            .map(|(lw, l)| lw - self.eta * l)
            .collect();
        let z = log_sum_exp(&raw);
        Ok(ExpertPool {
            log_weights: raw.into_iter().map(|v| v - z).collect(),
            ..self.clone()
        })
    }

    /// Loss of each expert's prediction once `outcome` is known.
    pub fn losses(&self, predictions: &[f64], outcome: f64) -> Result<Vec<f64>, HedgeError> {
        self.check_predictions(predictions)?;
        check_outcome(outcome)?;
        Ok(predictions.iter().map(|&p| loss(self.loss_kind, p, outcome)).collect())
    }
}

/// An expert's vote for outcome 1; exactly 0.5 splits evenly.
fn vote(p: f64) -> f64 {
    if p > 0.5 {
        1.0
    } else if p < 0.5 {
        0.0
    } else {
        0.5
    }
}

fn check_outcome(outcome: f64) -> Result<(), HedgeError> {
    if outcome == 0.0 || outcome == 1.0 {
        Ok(())
    } else {
        Err(HedgeError::Outcome(outcome))
    }
}

/// Log loss `-ln |p - (1 - outcome)|` capped at [`LOG_LOSS_CAP`], or the
/// mismatch of the thresholded prediction (0.5 on a tie).
pub fn loss(kind: LossKind, prediction: f64, outcome: f64) -> f64 {
    match kind {
        LossKind::Log => (-(prediction - (1.0 - outcome)).abs().ln()).min(LOG_LOSS_CAP),
        LossKind::ZeroOne => (vote(prediction) - outcome).abs(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub predictions: Vec<f64>,
    pub outcome: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub merged: f64,
    pub merged_loss: f64,
    pub outcome: f64,
    pub losses: Vec<f64>,
    /// Weights after this round's update.
    pub weights: Vec<f64>,
}

/// Merge, observe, score, update, for each round in turn. Returns the
/// trace and the final pool.
pub fn run_stream(pool: &ExpertPool, rounds: &[Round]) -> Result<(Vec<RoundRecord>, ExpertPool), HedgeError> {
    let mut pool = pool.clone();
    let mut trace = Vec::with_capacity(rounds.len());
    for round in rounds {
        let merged = pool.merge(&round.predictions)?;
        let losses = pool.losses(&round.predictions, round.outcome)?;
        pool = pool.update(&losses)?;
        trace.push(RoundRecord {
            merged,
            merged_loss: loss(pool.loss_kind, merged, round.outcome),
            outcome: round.outcome,
            losses,
            weights: pool.weights(),
        });
    }
    Ok((trace, pool))
}

/// TSV rows of K predictions followed by the outcome. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_stream(text: &str) -> Result<Vec<Round>, HedgeError> {
    let mut rounds = Vec::new();
    let mut width: Option<usize> = None;
    for (k, line) in text.lines().enumerate() {
        let n = k + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |reason: String| HedgeError::Parse { line: n, reason };
        let values = line
            .split('\t')
            .map(|t| t.trim().parse::<f64>().map_err(|_| perr(format!("bad number {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() < 2 {
            return Err(perr("need at least one prediction and an outcome".into()));
        }
        match width {
            Some(w) if w != values.len() => {
                return Err(perr(format!("expected {w} columns, found {}", values.len())))
            }
            _ => width = Some(values.len()),
        }
        let (outcome, predictions) = values.split_last().expect("nonempty");
        check_outcome(*outcome).map_err(|e| perr(e.to_string()))?;
        rounds.push(Round {
            predictions: predictions.to_vec(),
            outcome: *outcome,
        });
    }
    Ok(rounds)
}

/// Round number (from 1), merged prediction and weights, 8 decimals.
pub fn format_trace(trace: &[RoundRecord], k: usize) -> String {
    let mut out = String::from("round\tmerged");
    for i in 1..=k {
        let _ = write!(out, "\tw{i}");
    }
    out.push('\n');
    for (r, rec) in trace.iter().enumerate() {
        let _ = write!(out, "{}\t{:.8}", r + 1, rec.merged);
        for w in &rec.weights {
            let _ = write!(out, "\t{w:.8}");
        }
        out.push('\n');
    }
    out
}
