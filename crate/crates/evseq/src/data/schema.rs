use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Code 0 is reserved for padding in every categorical vocabulary.
/// Real event codes therefore live in `1..vocab_size`.
pub const PAD_CODE: u32 = 0;

/// What the per-sequence target represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Binary,
    Multiclass(usize),
    Regression,
    None,
}

impl TargetKind {
    pub fn has_target(&self) -> bool {
        !matches!(self, TargetKind::None)
    }

    /// Number of output units a prediction head needs for this target.
    pub fn head_width(&self) -> usize {
        match self {
            TargetKind::Binary => 2,
            TargetKind::Multiclass(k) => *k,
            TargetKind::Regression => 1,
            TargetKind::None => 0,
        }
    }
}

/// Declaration of one categorical feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalFeature {
    pub name: String,
    /// Total vocabulary size including the reserved padding code 0.
    pub vocab_size: u32,
    pub embed_dim: usize,
    /// Reserved code for consolidated rare values, if consolidation ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rare_code: Option<u32>,
    /// Optional string vocabulary: `values[k]` maps to code `k + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
}

/// Declaration of one numeric feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericFeature {
    pub name: String,
}

/// Declares the features and target of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    #[serde(default)]
    pub categorical: Vec<CategoricalFeature>,
    #[serde(default)]
    pub numeric: Vec<NumericFeature>,
    #[serde(default = "default_time_unit")]
    pub time_unit: String,
    pub target_kind: TargetKind,
}

fn default_time_unit() -> String {
    "unit".to_owned()
}

impl FeatureSchema {
    pub fn new(
        categorical: Vec<CategoricalFeature>,
        numeric: Vec<NumericFeature>,
        time_unit: impl Into<String>,
        target_kind: TargetKind,
    ) -> Result<Self> {
        let schema = FeatureSchema {
            categorical,
            numeric,
            time_unit: time_unit.into(),
            target_kind,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = std::collections::HashSet::new();
        for c in &self.categorical {
            if !names.insert(c.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature name `{}`", c.name)));
            }
            if c.vocab_size < 2 {
                return Err(Error::InvalidSchema(format!(
                    "categorical `{}` has vocab_size {} (must be >= 2)",
                    c.name, c.vocab_size
                )));
            }
            if c.embed_dim == 0 {
                return Err(Error::InvalidSchema(format!(
                    "categorical `{}` has embed_dim 0",
                    c.name
                )));
            }
            if let Some(values) = &c.values {
                if values.len() as u32 + 1 > c.vocab_size {
                    return Err(Error::InvalidSchema(format!(
                        "categorical `{}` declares {} values but vocab_size {}",
                        c.name,
                        values.len(),
                        c.vocab_size
                    )));
                }
            }
        }
        for n in &self.numeric {
            if !names.insert(n.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature name `{}`", n.name)));
            }
        }
        Ok(())
    }

    pub fn n_categorical(&self) -> usize {
        self.categorical.len()
    }

    pub fn n_numeric(&self) -> usize {
        self.numeric.len()
    }

    pub fn n_features(&self) -> usize {
        self.categorical.len() + self.numeric.len()
    }

    pub fn categorical_index(&self, name: &str) -> Option<usize> {
        self.categorical.iter().position(|c| c.name == name)
    }

    pub fn numeric_index(&self, name: &str) -> Option<usize> {
        self.numeric.iter().position(|n| n.name == name)
    }
}
