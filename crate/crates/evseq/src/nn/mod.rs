//! Differentiable building blocks with hand-written backward passes: feature
//! embedder, recurrent encoder, projector, transformer decoder, and the
//! optimizer. Parameters live in a [`ParameterStore`] keyed by name;
//! forward passes read from it, backward passes accumulate into its
//! gradient buffers, and everything iterates in sorted-name order so runs
//! are reproducible bit for bit.

mod adamw;
mod affine;
mod checkpoint;
mod config;
mod decoder;
mod embedder;
mod gru;
mod layernorm;
pub(crate) mod math;
mod params;
mod projector;
mod sampler;

pub use adamw::AdamW;
pub use affine::Affine;
pub use checkpoint::{CheckpointHeader, ModelCheckpoint};
pub use config::{DecoderConfig, EncoderConfig, ModelConfig};
pub use decoder::{DecoderCache, DecoderOutput, DecoderOutputGrads, TransformerDecoder};
pub use embedder::FeatureEmbedder;
pub use gru::{Gru, GruCache};
pub use layernorm::{LayerNorm, LayerNormCache};
pub use params::{
    orthogonal, uniform_embedding, uniform_fan_in, uniform_vec, zeros_vec, ParameterStore,
};
pub use projector::{Projector, ProjectorCache};
pub use sampler::sample_sequence;
