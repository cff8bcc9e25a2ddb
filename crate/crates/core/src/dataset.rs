//! Labeled examples and CSV ingestion.
//!
//! Every learner in the crate consumes the same representation: a row of
//! real-valued features plus an opaque class token. Binary attributes are
//! stored as `0.0`/`1.0`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("file is empty: no header row")]
    NoHeader,
    #[error("label column not found: {0}")]
    LabelColumnNotFound(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: missing value in column {column}")]
    MissingValue { row: usize, column: String },
    #[error("row {row}: non-binary value {value:?} in column {column}")]
    NonBinary {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: non-numeric value {value:?} in column {column}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("example has {found} features, dataset declares {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("split fraction must lie in (0, 1), got {0}")]
    Fraction(f64),
}

/// How attribute cells are parsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMode {
    Numeric,
    /// Cells must be one of `Y`, `N`, `1`, `0`.
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: String,
}

impl Example {
    pub fn new(features: Vec<f64>, label: impl Into<String>) -> Self {
        Example {
            features,
            label: label.into(),
        }
    }
}

/// An immutable table of labeled examples with a fixed attribute list.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    attribute_names: Vec<String>,
    label_name: String,
    class_set: BTreeSet<String>,
    examples: Vec<Example>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub examples: usize,
    pub attributes: usize,
    pub class_counts: BTreeMap<String, usize>,
}

impl Dataset {
    /// Builds a dataset, checking that every example has one feature per
    /// attribute. The class set is the set of labels present.
    pub fn new(
        attribute_names: Vec<String>,
        label_name: impl Into<String>,
        examples: Vec<Example>,
    ) -> Result<Self, DatasetError> {
        let dim = attribute_names.len();
        if let Some(bad) = examples.iter().find(|e| e.features.len() != dim) {
            return Err(DatasetError::Dimension {
                expected: dim,
                found: bad.features.len(),
            });
        }
        let class_set = examples.iter().map(|e| e.label.clone()).collect();
        Ok(Dataset {
            attribute_names,
            label_name: label_name.into(),
            class_set,
            examples,
        })
    }

    /// Convenience constructor with generated attribute names `x1..xd`.
    pub fn from_rows(rows: Vec<(Vec<f64>, String)>) -> Result<Self, DatasetError> {
        let dim = rows.first().map_or(0, |r| r.0.len());
        let names = (1..=dim).map(|i| format!("x{i}")).collect();
        let examples = rows
            .into_iter()
            .map(|(features, label)| Example { features, label })
            .collect();
        Dataset::new(names, "label", examples)
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn class_set(&self) -> &BTreeSet<String> {
        &self.class_set
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.attribute_names.len()
    }

    /// Same attributes and class set, different rows.
    fn with_examples(&self, examples: Vec<Example>) -> Dataset {
        Dataset {
            attribute_names: self.attribute_names.clone(),
            label_name: self.label_name.clone(),
            class_set: self.class_set.clone(),
            examples,
        }
    }

    /// Returns a copy with one more example appended. The new label joins
    /// the class set.
    pub fn with_appended(&self, example: Example) -> Result<Dataset, DatasetError> {
        if example.features.len() != self.dim() {
            return Err(DatasetError::Dimension {
                expected: self.dim(),
                found: example.features.len(),
            });
        }
        let mut out = self.clone();
        out.class_set.insert(example.label.clone());
        out.examples.push(example);
        Ok(out)
    }

    /// Relabels examples of `positive` as `+1` and every other class as
    /// `-1`.
    pub fn one_vs_rest(&self, positive: &str) -> Dataset {
        let examples: Vec<Example> = self
            .examples
            .iter()
            .map(|e| Example {
                features: e.features.clone(),
                label: if e.label == positive { "+1" } else { "-1" }.to_string(),
            })
            .collect();
        let class_set = examples.iter().map(|e| e.label.clone()).collect();
        Dataset {
            class_set,
            examples,
            ..self.clone()
        }
    }

    /// True when every feature value is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.examples
            .iter()
            .flat_map(|e| e.features.iter())
            .all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn load_csv(
        path: impl AsRef<Path>,
        label_column: &str,
        mode: ValueMode,
    ) -> Result<Dataset, DatasetError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DatasetError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Dataset::parse_csv(&text, label_column, mode)
    }

    /// Parses comma-separated text. Row numbers in errors count data rows
    /// from 1 (the header is row 0).
    pub fn parse_csv(
        text: &str,
        label_column: &str,
        mode: ValueMode,
    ) -> Result<Dataset, DatasetError> {
        let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
        let header: Vec<&str> = lines
            .next()
            .filter(|h| !h.trim().is_empty())
            .ok_or(DatasetError::NoHeader)?
            .split(',')
            .map(str::trim)
            .collect();
        let label_idx = header
            .iter()
            .position(|h| *h == label_column)
            .ok_or_else(|| DatasetError::LabelColumnNotFound(label_column.to_string()))?;
        let attribute_names: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != label_idx)
            .map(|(_, h)| h.to_string())
            .collect();

        let mut examples = Vec::new();
        for (k, line) in lines.enumerate() {
            let row = k + 1;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != header.len() {
                return Err(DatasetError::Ragged {
                    row,
                    expected: header.len(),
                    found: cells.len(),
                });
            }
            let mut features = Vec::with_capacity(attribute_names.len());
            let mut label = String::new();
            for (i, cell) in cells.iter().enumerate() {
                if cell.is_empty() {
                    return Err(DatasetError::MissingValue {
                        row,
                        column: header[i].to_string(),
                    });
                }
                if i == label_idx {
                    label = cell.to_string();
                    continue;
                }
                let value = match mode {
                    ValueMode::Binary => match *cell {
                        "Y" | "1" => 1.0,
                        "N" | "0" => 0.0,
                        _ => {
                            return Err(DatasetError::NonBinary {
                                row,
                                column: header[i].to_string(),
                                value: cell.to_string(),
                            })
                        }
                    },
                    ValueMode::Numeric => {
                        cell.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| DatasetError::NonNumeric {
                                row,
                                column: header[i].to_string(),
                                value: cell.to_string(),
                            })?
                    }
                };
                features.push(value);
            }
            examples.push(Example { features, label });
        }
        Dataset::new(attribute_names, label_column, examples)
    }

    /// Header first, label column last, `\n` line endings. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for name in &self.attribute_names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str(&self.label_name);
        out.push('\n');
        for ex in &self.examples {
            for v in &ex.features {
                let _ = write!(out, "{v},");
            }
            out.push_str(&ex.label);
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| DatasetError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    /// Seeded shuffle, then the first `floor(fraction * n)` examples go to
    /// the first part. Each part keeps the input's relative row order.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
        if self.is_empty() {
            return Err(DatasetError::Empty);
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(DatasetError::Fraction(fraction));
        }
        let n = self.len();
        let cut = (fraction * n as f64).floor() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (first, second) = order.split_at_mut(cut);
        first.sort_unstable();
        second.sort_unstable();
        let pick = |idx: &[usize]| -> Vec<Example> {
            idx.iter().map(|&i| self.examples[i].clone()).collect()
        };
        Ok((
            self.with_examples(pick(first)),
            self.with_examples(pick(second)),
        ))
    }

    pub fn summarize(&self) -> Summary {
        let mut class_counts: BTreeMap<String, usize> =
            self.class_set.iter().map(|c| (c.clone(), 0)).collect();
        for ex in &self.examples {
            *class_counts.entry(ex.label.clone()).or_default() += 1;
        }
        Summary {
            examples: self.len(),
            attributes: self.dim(),
            class_counts,
        }
    }
}
