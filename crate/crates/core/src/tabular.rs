//! Rule induction on binary attributes and the simple Bayes classifier.
//!
//! The rule learner works class-vs-rest: for one target class it
//! repeatedly picks the attribute with the largest chi-square statistic,
//! splits the examples into those including and excluding it, and recurses
//! until a subset is homogeneous with respect to class membership. Each
//! leaf carries the class frequency and its Wilson score interval.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::dataset::Dataset;

pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Error, PartialEq)]
pub enum TabularError {
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("attributes must be binary (0/1)")]
    NonBinary,
    #[error("dataset is empty")]
    Empty,
    #[error("confidence interval needs n >= 1")]
    ZeroTrials,
    #[error("successes {successes} exceed trials {n}")]
    TooManySuccesses { successes: usize, n: usize },
    #[error("confidence level must lie in (0, 1), got {0}")]
    Level(f64),
    #[error("smoothing must be a nonnegative finite number, got {0}")]
    Smoothing(f64),
    #[error("no prediction")]
    NoPrediction,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("every class has zero likelihood for this example")]
    ZeroLikelihood,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// 2x2 counts: rows are attribute present/absent, columns class/not-class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContingencyTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        ContingencyTable { a, b, c, d }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    pub fn is_degenerate(&self) -> bool {
        let ContingencyTable { a, b, c, d } = *self;
        a + b == 0 || c + d == 0 || a + c == 0 || b + d == 0
    }
}

/// Pearson statistic without continuity correction. Tables with an empty
/// row or column score 0 (see [`ContingencyTable::is_degenerate`]).
pub fn chi_square(t: &ContingencyTable) -> f64 {
    if t.is_degenerate() {
        return 0.0;
    }
    let (a, b, c, d) = (t.a as f64, t.b as f64, t.c as f64, t.d as f64);
    let n = a + b + c + d;
    let diff = a * d - b * c;
    n * diff * diff / ((a + b) * (c + d) * (a + c) * (b + d))
}

/// Wilson score interval for a binomial proportion, clipped to [0, 1].
pub fn confidence_interval(successes: usize, n: usize, level: f64) -> Result<(f64, f64), TabularError> {
    if n == 0 {
        return Err(TabularError::ZeroTrials);
    }
    if successes > n {
        return Err(TabularError::TooManySuccesses { successes, n });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(TabularError::Level(level));
    }
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let low = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, 1.0) };
    let high = if successes == n { 1.0 } else { (center + half).clamp(0.0, 1.0) };
    Ok((low, high))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Include,
    Exclude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleLeaf {
    pub class_id: String,
    /// Attribute indices with the side of the split taken.
    pub condition: Vec<(usize, Polarity)>,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub support_n: usize,
}

impl RuleLeaf {
    pub fn matches(&self, x: &[f64]) -> bool {
        self.condition.iter().all(|&(attr, pol)| match pol {
            Polarity::Include => x.get(attr) == Some(&1.0),
            Polarity::Exclude => x.get(attr) == Some(&0.0),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub class_id: String,
    pub leaves: Vec<RuleLeaf>,
}

impl RuleSet {
    pub fn matching_leaf(&self, x: &[f64]) -> Option<&RuleLeaf> {
        self.leaves.iter().find(|l| l.matches(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtParams {
    /// A split is only taken if both sides keep at least this many
    /// examples.
    pub min_leaf: usize,
    /// Defaults to the attribute count when `None`.
    pub max_depth: Option<usize>,
    pub level: f64,
}

impl Default for GtParams {
    fn default() -> Self {
        GtParams {
            min_leaf: 1,
            max_depth: None,
            level: DEFAULT_LEVEL,
        }
    }
}

/// Table for attribute `attr` against membership in `class_id`, over the
/// rows in `idx`.
fn table_for(ds: &Dataset, idx: &[usize], attr: usize, class_id: &str) -> ContingencyTable {
    let mut t = ContingencyTable::new(0, 0, 0, 0);
    for &i in idx {
        let ex = &ds.examples()[i];
        let member = ex.label == class_id;
        match (ex.features[attr] == 1.0, member) {
            (true, true) => t.a += 1,
            (true, false) => t.b += 1,
            (false, true) => t.c += 1,
            (false, false) => t.d += 1,
        }
    }
    t
}

pub fn gt_learn(ds: &Dataset, class_id: &str, params: &GtParams) -> Result<RuleSet, TabularError> {
    if !ds.class_set().contains(class_id) {
        // An empty dataset has no classes; it yields an empty rule set.
        if ds.is_empty() {
            return Ok(RuleSet {
                class_id: class_id.to_string(),
                leaves: vec![],
            });
        }
        return Err(TabularError::UnknownClass(class_id.to_string()));
    }
    if !ds.is_binary() {
        return Err(TabularError::NonBinary);
    }
    if !(params.level > 0.0 && params.level < 1.0) {
        return Err(TabularError::Level(params.level));
    }
    let learner = GtLearner {
        ds,
        class_id,
        min_leaf: params.min_leaf.max(1),
        max_depth: params.max_depth.unwrap_or(ds.dim()),
        level: params.level,
    };
    let mut leaves = Vec::new();
    let all: Vec<usize> = (0..ds.len()).collect();
    learner.grow(&all, &mut Vec::new(), &mut leaves)?;
    Ok(RuleSet {
        class_id: class_id.to_string(),
        leaves,
    })
}

/// One rule set per class in the dataset, in class order.
pub fn gt_learn_all(ds: &Dataset, params: &GtParams) -> Result<Vec<RuleSet>, TabularError> {
    ds.class_set()
        .iter()
        .map(|c| gt_learn(ds, c, params))
        .collect()
}

struct GtLearner<'a> {
    ds: &'a Dataset,
    class_id: &'a str,
    min_leaf: usize,
    max_depth: usize,
    level: f64,
}

impl GtLearner<'_> {
    fn grow(
        &self,
        idx: &[usize],
        path: &mut Vec<(usize, Polarity)>,
        leaves: &mut Vec<RuleLeaf>,
    ) -> Result<(), TabularError> {
        if idx.is_empty() {
            return Ok(());
        }
        let members = idx
            .iter()
            .filter(|&&i| self.ds.examples()[i].label == self.class_id)
            .count();
        let homogeneous = members == 0 || members == idx.len();
        let split = if homogeneous || path.len() >= self.max_depth {
            None
        } else {
            self.best_attribute(idx)
        };
        let Some(attr) = split else {
            let (ci_low, ci_high) = confidence_interval(members, idx.len(), self.level)?;
            leaves.push(RuleLeaf {
                class_id: self.class_id.to_string(),
                condition: path.clone(),
                p: members as f64 / idx.len() as f64,
                ci_low,
                ci_high,
                support_n: idx.len(),
            });
            return Ok(());
        };
        let (inc, exc): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.ds.examples()[i].features[attr] == 1.0);
        path.push((attr, Polarity::Include));
        self.grow(&inc, path, leaves)?;
        path.pop();
        path.push((attr, Polarity::Exclude));
        self.grow(&exc, path, leaves)?;
        path.pop();
        Ok(())
    }

    /// Highest positive chi-square among admissible splits; the first
    /// attribute wins among (near-)equal scores.
    fn best_attribute(&self, idx: &[usize]) -> Option<usize> {
        let scored: Vec<(usize, f64)> = (0..self.ds.dim())
            .filter_map(|attr| {
                let t = table_for(self.ds, idx, attr, self.class_id);
                let inc = (t.a + t.b) as usize;
                let exc = (t.c + t.d) as usize;
                if inc < self.min_leaf || exc < self.min_leaf {
                    return None;
                }
                let chi = chi_square(&t);
                (chi > 0.0).then_some((attr, chi))
            })
            .collect();
        let best = scored.iter().map(|&(_, c)| c).fold(0.0, f64::max);
        scored
            .into_iter()
            .find(|&(_, c)| c >= best * (1.0 - 1e-12))
            .map(|(a, _)| a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtPrediction {
    pub class_id: String,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Max-`p` class over the leaves matching `x`; equal `p` goes to the
/// lexicographically smaller class id. Rule sets with no matching leaf are
/// skipped.
pub fn gt_predict(rulesets: &[RuleSet], x: &[f64]) -> Result<GtPrediction, TabularError> {
    let mut best: Option<&RuleLeaf> = None;
    for rs in rulesets {
        let Some(leaf) = rs.matching_leaf(x) else {
            continue;
        };
        best = match best {
            Some(b) if b.p > leaf.p || (b.p == leaf.p && b.class_id <= leaf.class_id) => Some(b),
            _ => Some(leaf),
        };
    }
    best.map(|l| GtPrediction {
        class_id: l.class_id.clone(),
        p: l.p,
        ci_low: l.ci_low,
        ci_high: l.ci_high,
    })
    .ok_or(TabularError::NoPrediction)
}

/// Tab-separated, one leaf per line: class, condition (`+attr`/`-attr`
/// tokens separated by spaces, `*` when empty), p, ci_low, ci_high,
/// support_n.
pub fn rules_to_text(rulesets: &[RuleSet], attribute_names: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "attributes\t{}", attribute_names.join(","));
    for rs in rulesets {
        let _ = writeln!(out, "ruleset\t{}", rs.class_id);
        for leaf in &rs.leaves {
            let cond = if leaf.condition.is_empty() {
                "*".to_string()
            } else {
                leaf.condition
                    .iter()
                    .map(|&(a, pol)| {
                        let sign = if pol == Polarity::Include { '+' } else { '-' };
                        format!("{sign}{}", attribute_names[a])
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = writeln!(
                out,
                "{}\t{cond}\t{}\t{}\t{}\t{}",
                leaf.class_id, leaf.p, leaf.ci_low, leaf.ci_high, leaf.support_n
            );
        }
    }
    out
}

/// Inverse of [`rules_to_text`]; returns the rule sets and attribute names.
pub fn rules_from_text(text: &str) -> Result<(Vec<RuleSet>, Vec<String>), TabularError> {
    let perr = |line: usize, reason: &str| TabularError::Parse {
        line,
        reason: reason.to_string(),
    };
    let mut names: Option<Vec<String>> = None;
    let mut sets: Vec<RuleSet> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let n = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            ["attributes", list] => {
                names = Some(list.split(',').filter(|s| !s.is_empty()).map(String::from).collect());
            }
            ["ruleset", class] => sets.push(RuleSet {
                class_id: class.to_string(),
                leaves: vec![],
            }),
            [class, cond, p, lo, hi, support] => {
                let names = names.as_ref().ok_or_else(|| perr(n, "leaf before attributes line"))?;
                let set = sets
                    .last_mut()
                    .filter(|s| s.class_id == *class)
                    .ok_or_else(|| perr(n, "leaf outside its ruleset"))?;
                let mut condition = Vec::new();
                if *cond != "*" {
                    for tok in cond.split(' ') {
                        let (pol, name) = if let Some(rest) = tok.strip_prefix('+') {
                            (Polarity::Include, rest)
                        } else if let Some(rest) = tok.strip_prefix('-') {
                            (Polarity::Exclude, rest)
                        } else {
                            return Err(perr(n, "condition token needs +/- prefix"));
                        };
                        let attr = names
                            .iter()
                            .position(|a| a == name)
                            .ok_or_else(|| perr(n, "unknown attribute in condition"))?;
                        condition.push((attr, pol));
                    }
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| perr(n, "bad number"));
                set.leaves.push(RuleLeaf {
                    class_id: class.to_string(),
                    condition,
                    p: num(p)?,
                    ci_low: num(lo)?,
                    ci_high: num(hi)?,
                    support_n: support.parse().map_err(|_| perr(n, "bad support count"))?,
                });
            }
            _ => return Err(perr(n, "unrecognized line")),
        }
    }
    Ok((sets, names.unwrap_or_default()))
}

/// Simple Bayes: attributes independent given the class.
#[derive(Debug, Clone, PartialEq)]
pub struct NbModel {
    pub classes: Vec<String>,
    pub priors: Vec<f64>,
    /// `conditionals[k][i] = P(x_i = 1 | class k)`
    pub conditionals: Vec<Vec<f64>>,
    pub smoothing: f64,
    pub attribute_names: Vec<String>,
}

pub fn nb_train(ds: &Dataset, smoothing: f64) -> Result<NbModel, TabularError> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(TabularError::Smoothing(smoothing));
    }
    if ds.is_empty() {
        return Err(TabularError::Empty);
    }
    if !ds.is_binary() {
        return Err(TabularError::NonBinary);
    }
    let classes: Vec<String> = ds.class_set().iter().cloned().collect();
    let n = ds.len() as f64;
    let k = classes.len() as f64;
    let mut priors = Vec::with_capacity(classes.len());
    let mut conditionals = Vec::with_capacity(classes.len());
    for class in &classes {
        let rows: Vec<&[f64]> = ds
            .examples()
            .iter()
            .filter(|e| &e.label == class)
            .map(|e| e.features.as_slice())
            .collect();
        let count = rows.len() as f64;
        priors.push((count + smoothing) / (n + smoothing * k));
        let cond = (0..ds.dim())
            .map(|i| {
                let ones = rows.iter().filter(|r| r[i] == 1.0).count() as f64;
                (ones + smoothing) / (count + 2.0 * smoothing)
            })
            .collect();
        conditionals.push(cond);
    }
    Ok(NbModel {
        classes,
        priors,
        conditionals,
        smoothing,
        attribute_names: ds.attribute_names().to_vec(),
    })
}

impl NbModel {
    /// Posterior over classes, in `self.classes` order.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, TabularError> {
        let dim = self.attribute_names.len();
        if x.len() != dim {
            return Err(TabularError::Dimension {
                expected: dim,
                found: x.len(),
            });
        }
        if x.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(TabularError::NonBinary);
        }
        let logs: Vec<f64> = self
            .priors
            .iter()
            .zip(&self.conditionals)
            .map(|(&prior, cond)| {
                prior.ln()
                    + x.iter()
                        .zip(cond)
                        .map(|(&xi, &p)| if xi == 1.0 { p.ln() } else { (1.0 - p).ln() })
                        .sum::<f64>()
            })
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(TabularError::ZeroLikelihood);
        }
        let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        Ok(weights.into_iter().map(|w| w / total).collect())
    }

    /// Most probable class; ties go to the earlier (lexicographically
    /// smaller) class.
    pub fn predict_class(&self, x: &[f64]) -> Result<(String, Vec<f64>), TabularError> {
        let post = self.predict(x)?;
        let mut best = 0;
        for (k, &p) in post.iter().enumerate() {
            if p > post[best] {
                best = k;
            }
        }
        Ok((self.classes[best].clone(), post))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "smoothing\t{}", self.smoothing);
        let _ = writeln!(out, "attributes\t{}", self.attribute_names.join(","));
        for ((class, prior), cond) in self.classes.iter().zip(&self.priors).zip(&self.conditionals) {
            let cond: Vec<String> = cond.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "class\t{class}\t{prior}\t{}", cond.join(","));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<NbModel, TabularError> {
        let perr = |line: usize, reason: &str| TabularError::Parse {
            line,
            reason: reason.to_string(),
        };
        let mut model = NbModel {
            classes: vec![],
            priors: vec![],
            conditionals: vec![],
            smoothing: 0.0,
            attribute_names: vec![],
        };
        for (k, line) in text.lines().enumerate() {
            let n = k + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["smoothing", s] => model.smoothing = s.parse().map_err(|_| perr(n, "bad smoothing"))?,
                ["attributes", list] => {
                    model.attribute_names =
                        list.split(',').filter(|s| !s.is_empty()).map(String::from).collect()
                }
                ["class", name, prior, cond] => {
                    let cond = cond
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|c| c.parse::<f64>().map_err(|_| perr(n, "bad conditional")))
                        .collect::<Result<Vec<_>, _>>()?;
                    if cond.len() != model.attribute_names.len() {
                        return Err(perr(n, "conditional count differs from attribute count"));
                    }
                    model.classes.push(name.to_string());
                    model.priors.push(prior.parse().map_err(|_| perr(n, "bad prior"))?);
                    model.conditionals.push(cond);
                }
                _ => return Err(perr(n, "unrecognized line")),
            }
        }
        if model.classes.is_empty() {
            return Err(perr(0, "model has no classes"));
        }
        Ok(model)
    }
}
