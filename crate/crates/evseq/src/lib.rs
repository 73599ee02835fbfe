//! Self-supervised pre-training and evaluation workbench for event sequences.
//!
//! An event sequence is a time-ordered list of events, each carrying
//! categorical and numeric sub-features, with an optional whole-sequence
//! target. This crate implements four self-supervised pre-training
//! strategies over such data — contrastive, generative, a naive hybrid,
//! and alignment of a generative encoder's embeddings to a frozen
//! contrastive one — plus a synthetic pendulum/Hawkes data generator and an
//! embedding-quality evaluation harness (probing, next-event prediction,
//! anisotropy, intrinsic dimension, robustness to perturbations).
//!
//! The `evseq` CLI in the companion crate orchestrates the full
//! generate → preprocess → pretrain → evaluate pipeline; the book under
//! `book/` is a guided tour of the concepts.

pub mod data;
pub mod error;
pub mod nn;
pub mod objectives;
pub mod synth;
pub mod train;
pub mod util;

pub use error::{Error, Result};
