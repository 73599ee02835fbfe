//! Pre-training loops for the four strategies, supervised training,
//! fine-tuning, and checkpointing.

mod config;
mod model;

pub use config::{TrainConfig, EPOCH_RULE_THRESHOLD};
pub use model::{
    supervised_loss, ContrastiveModel, EncoderCache, EncoderCore, GenerativeCache,
    GenerativeModel, MlemModel, SupervisedModel,
};
