//! The four training losses and the sub-sequence view sampler.

mod alignment;
mod contrastive;
mod hybrid;
mod labels;
mod lm;
mod views;

pub use alignment::{alignment_pair_term, AlignmentHead};
pub use contrastive::{contrastive_loss, contrastive_pair_term};
pub use hybrid::{mlem_loss, naive_hybrid_loss, HYBRID_ALPHA, HYBRID_BETA};
pub use labels::PairLabels;
pub use lm::lm_loss;
pub use views::sample_subsequences;
