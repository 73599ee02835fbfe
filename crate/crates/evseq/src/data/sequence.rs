use serde::{Deserialize, Serialize};

use crate::data::schema::{FeatureSchema, PAD_CODE};
use crate::error::{Error, Result};

/// Which split a sequence belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One time-ordered sequence of events.
///
/// Feature values are stored column-major: `cat_values[f][j]` is the code of
/// categorical feature `f` at event `j`, aligned with `times[j]`. Numeric
/// values may be NaN to mark a missing measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    pub id: String,
    pub times: Vec<f64>,
    pub cat_values: Vec<Vec<u32>>,
    pub num_values: Vec<Vec<f64>>,
    pub target: Option<f64>,
}

impl EventSequence {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks the type invariants against a schema.
    pub fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::InvalidSequence {
                id: self.id.clone(),
                msg: "sequence has no events".into(),
            });
        }
        for j in 1..self.times.len() {
            if self.times[j] < self.times[j - 1] {
                return Err(Error::TimesNotAscending {
                    id: self.id.clone(),
                    index: j,
                });
            }
        }
        if self.cat_values.len() != schema.n_categorical() {
            return Err(Error::SchemaMismatch(format!(
                "sequence `{}` has {} categorical columns, schema declares {}",
                self.id,
                self.cat_values.len(),
                schema.n_categorical()
            )));
        }
        if self.num_values.len() != schema.n_numeric() {
            return Err(Error::SchemaMismatch(format!(
                "sequence `{}` has {} numeric columns, schema declares {}",
                self.id,
                self.num_values.len(),
                schema.n_numeric()
            )));
        }
        for (feature, column) in schema.categorical.iter().zip(&self.cat_values) {
            if column.len() != self.times.len() {
                return Err(Error::InvalidSequence {
                    id: self.id.clone(),
                    msg: format!(
                        "feature `{}` has {} values for {} events",
                        feature.name,
                        column.len(),
                        self.times.len()
                    ),
                });
            }
            for &code in column {
                if code == PAD_CODE || code >= feature.vocab_size {
                    return Err(Error::CodeOutOfVocab {
                        id: self.id.clone(),
                        feature: feature.name.clone(),
                        code,
                        vocab_size: feature.vocab_size,
                    });
                }
            }
        }
        for (feature, column) in schema.numeric.iter().zip(&self.num_values) {
            if column.len() != self.times.len() {
                return Err(Error::InvalidSequence {
                    id: self.id.clone(),
                    msg: format!(
                        "feature `{}` has {} values for {} events",
                        feature.name,
                        column.len(),
                        self.times.len()
                    ),
                });
            }
        }
        Ok(())
    }

    /// A copy containing only the events at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> EventSequence {
        EventSequence {
            id: self.id.clone(),
            times: indices.iter().map(|&j| self.times[j]).collect(),
            cat_values: self
                .cat_values
                .iter()
                .map(|col| indices.iter().map(|&j| col[j]).collect())
                .collect(),
            num_values: self
                .num_values
                .iter()
                .map(|col| indices.iter().map(|&j| col[j]).collect())
                .collect(),
            target: self.target,
        }
    }

    /// A copy of the contiguous event range `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> EventSequence {
        let end = start + len;
        EventSequence {
            id: self.id.clone(),
            times: self.times[start..end].to_vec(),
            cat_values: self.cat_values.iter().map(|c| c[start..end].to_vec()).collect(),
            num_values: self.num_values.iter().map(|c| c[start..end].to_vec()).collect(),
            target: self.target,
        }
    }
}

/// A schema plus its sequences, with optional split tags.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub sequences: Vec<EventSequence>,
    pub split_tags: Option<Vec<Split>>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, sequences: Vec<EventSequence>) -> Result<Self> {
        let ds = Dataset {
            schema,
            sequences,
            split_tags: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Builds without re-checking invariants. Perturbations use this to
    /// construct intentionally disordered sequences.
    pub fn new_unchecked(schema: FeatureSchema, sequences: Vec<EventSequence>) -> Self {
        Dataset {
            schema,
            sequences,
            split_tags: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        for seq in &self.sequences {
            seq.validate(&self.schema)?;
        }
        if let Some(tags) = &self.split_tags {
            if tags.len() != self.sequences.len() {
                return Err(Error::SchemaMismatch(format!(
                    "{} split tags for {} sequences",
                    tags.len(),
                    self.sequences.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Sequences tagged with `split`, or all sequences when no tags exist.
    pub fn subset(&self, split: Split) -> Vec<&EventSequence> {
        match &self.split_tags {
            Some(tags) => self
                .sequences
                .iter()
                .zip(tags)
                .filter(|(_, &t)| t == split)
                .map(|(s, _)| s)
                .collect(),
            None => self.sequences.iter().collect(),
        }
    }

    /// A standalone dataset holding only the tagged subset.
    pub fn split_subset(&self, split: Split) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            sequences: self.subset(split).into_iter().cloned().collect(),
            split_tags: None,
        }
    }
}
