use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Recurrent encoder settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub hidden_size: usize,
    pub feature_embed_dim: usize,
    pub num_layers: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            hidden_size: 512,
            feature_embed_dim: 32,
            num_layers: 1,
        }
    }
}

/// Transformer decoder settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub layers: usize,
    pub heads: usize,
    pub model_dim: usize,
    pub ff_dim: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            layers: 3,
            heads: 2,
            model_dim: 128,
            ff_dim: 256,
        }
    }
}

/// Full model shape: encoder, decoder, and contrastive projector head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub decoder: DecoderConfig,
    /// Output width of the projector used inside the contrastive loss.
    pub projector_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder: EncoderConfig::default(),
            decoder: DecoderConfig::default(),
            projector_dim: 256,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.encoder.hidden_size == 0
            || self.encoder.feature_embed_dim == 0
            || self.encoder.num_layers == 0
        {
            return Err(Error::InvalidArgument("encoder dimensions must be positive".into()));
        }
        if self.encoder.num_layers != 1 {
            return Err(Error::InvalidArgument(
                "only single-layer recurrent encoders are supported".into(),
            ));
        }
        if self.decoder.layers == 0
            || self.decoder.heads == 0
            || self.decoder.model_dim == 0
            || self.decoder.ff_dim == 0
        {
            return Err(Error::InvalidArgument("decoder dimensions must be positive".into()));
        }
        if self.decoder.model_dim % self.decoder.heads != 0 {
            return Err(Error::InvalidArgument(format!(
                "model_dim {} not divisible by heads {}",
                self.decoder.model_dim, self.decoder.heads
            )));
        }
        if self.projector_dim == 0 {
            return Err(Error::InvalidArgument("projector_dim must be positive".into()));
        }
        Ok(())
    }
}
