use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pre-training and fine-tuning hyperparameters.
///
/// `epochs = None` applies the size rule automatically: 100 epochs below
/// 100 000 training sequences, 40 at or above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default)]
    pub epochs: Option<usize>,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    /// Weight of the generative term in hybrid losses.
    pub alpha: f64,
    /// Weight of the contrastive / alignment term in hybrid losses.
    pub beta: f64,
    pub seeds: Vec<u64>,
    pub deterministic: bool,
    /// Views per sequence for the contrastive sampler.
    pub n_views: usize,
    /// View length bounds as fractions of the sequence length.
    pub view_len_range: (f64, f64),
    /// Margin of the contrastive loss.
    pub margin: f64,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: None,
            lr: 1e-3,
            weight_decay: 3e-3,
            batch_size: 128,
            alpha: 1.0,
            beta: 10.0,
            seeds: vec![0, 1, 2],
            deterministic: true,
            n_views: 2,
            view_len_range: (0.4, 0.8),
            margin: 0.5,
            clip_norm: 1.0,
        }
    }
}

/// Threshold of the automatic epoch rule.
pub const EPOCH_RULE_THRESHOLD: usize = 100_000;

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 || self.weight_decay < 0.0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "learning rate, weight decay, and batch size must be positive".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("at least one seed is required".into()));
        }
        if let Some(0) = self.epochs {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.n_views < 2 {
            return Err(Error::InvalidArgument("n_views must be >= 2".into()));
        }
        Ok(())
    }

    /// Epochs to run for a training set of `n_train` sequences.
    pub fn epochs_for(&self, n_train: usize) -> usize {
        self.epochs
            .unwrap_or(if n_train < EPOCH_RULE_THRESHOLD { 100 } else { 40 })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable config")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_rule() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.epochs_for(99_999), 100);
        assert_eq!(cfg.epochs_for(100_000), 40);
        assert_eq!(cfg.epochs_for(1_000_000), 40);
        let fixed = TrainConfig {
            epochs: Some(7),
            ..TrainConfig::default()
        };
        assert_eq!(fixed.epochs_for(10), 7);
        assert_eq!(fixed.epochs_for(1_000_000), 7);
    }
}
