use ndarray::Array2;

use crate::data::schema::{FeatureSchema, PAD_CODE};
use crate::data::sequence::EventSequence;
use crate::error::{Error, Result};

/// A fixed-shape batch of sequences with a validity mask and a time-delta
/// channel. Rows are left-aligned: `mask` is prefix-true per row.
#[derive(Debug, Clone)]
pub struct PaddedBatch {
    pub ids: Vec<String>,
    pub targets: Vec<Option<f64>>,
    pub lengths: Vec<usize>,
    /// B×T, true at real events.
    pub mask: Array2<bool>,
    /// B×T event timestamps (0 at padding).
    pub times: Array2<f64>,
    /// B×T time since the previous event; 0 at position 0.
    pub dt: Array2<f64>,
    /// Per categorical feature: B×T codes, `PAD_CODE` at padding.
    pub cat: Vec<Array2<u32>>,
    /// Per numeric feature: B×T values, 0 at padding.
    pub num: Vec<Array2<f64>>,
}

impl PaddedBatch {
    pub fn batch_size(&self) -> usize {
        self.mask.nrows()
    }

    pub fn max_len(&self) -> usize {
        self.mask.ncols()
    }
}

/// Pads a non-empty list of schema-conforming sequences to a common length.
pub fn pad_batch(schema: &FeatureSchema, sequences: &[&EventSequence]) -> Result<PaddedBatch> {
    if sequences.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let b = sequences.len();
    let t_max = sequences.iter().map(|s| s.len()).max().unwrap();

    let mut mask = Array2::from_elem((b, t_max), false);
    let mut times = Array2::zeros((b, t_max));
    let mut dt = Array2::zeros((b, t_max));
    let mut cat: Vec<Array2<u32>> = (0..schema.n_categorical())
        .map(|_| Array2::from_elem((b, t_max), PAD_CODE))
        .collect();
    let mut num: Vec<Array2<f64>> = (0..schema.n_numeric()).map(|_| Array2::zeros((b, t_max))).collect();

    for (i, seq) in sequences.iter().enumerate() {
        for j in 0..seq.len() {
            mask[(i, j)] = true;
            times[(i, j)] = seq.times[j];
            dt[(i, j)] = if j == 0 { 0.0 } else { seq.times[j] - seq.times[j - 1] };
            for (f, col) in seq.cat_values.iter().enumerate() {
                cat[f][(i, j)] = col[j];
            }
            for (f, col) in seq.num_values.iter().enumerate() {
                num[f][(i, j)] = col[j];
            }
        }
    }

    Ok(PaddedBatch {
        ids: sequences.iter().map(|s| s.id.clone()).collect(),
        targets: sequences.iter().map(|s| s.target).collect(),
        lengths: sequences.iter().map(|s| s.len()).collect(),
        mask,
        times,
        dt,
        cat,
        num,
    })
}

/// Inverse of [`pad_batch`]: recovers the original sequences by applying the
/// mask. Exact because timestamps are carried alongside the dt channel.
pub fn unpad_batch(batch: &PaddedBatch) -> Vec<EventSequence> {
    (0..batch.batch_size())
        .map(|i| {
            let len = batch.lengths[i];
            EventSequence {
                id: batch.ids[i].clone(),
                times: (0..len).map(|j| batch.times[(i, j)]).collect(),
                cat_values: batch
                    .cat
                    .iter()
                    .map(|arr| (0..len).map(|j| arr[(i, j)]).collect())
                    .collect(),
                num_values: batch
                    .num
                    .iter()
                    .map(|arr| (0..len).map(|j| arr[(i, j)]).collect())
                    .collect(),
                target: batch.targets[i],
            }
        })
        .collect()
}
