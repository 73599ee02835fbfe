use ndarray::ArrayView1;
use rand::Rng;

use crate::data::{pad_batch, EventSequence, PAD_CODE};
use crate::error::{Error, Result};
use crate::nn::decoder::TransformerDecoder;
use crate::nn::embedder::FeatureEmbedder;
use crate::nn::math::log_softmax_row;
use crate::nn::params::ParameterStore;

/// Autoregressive rollout from a sequence embedding.
///
/// Categorical features are sampled from the softmax over real codes (the
/// padding code is excluded), numeric features and the time delta are taken
/// as predicted point values, and the delta is clamped to be non-negative so
/// the cumulative times never decrease. With `greedy` set, categorical
/// features take the argmax instead, making the rollout deterministic in `h`.
pub fn sample_sequence(
    store: &ParameterStore,
    embedder: &FeatureEmbedder,
    decoder: &TransformerDecoder,
    h: ArrayView1<f64>,
    max_len: usize,
    rng: &mut impl Rng,
    greedy: bool,
) -> Result<EventSequence> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be >= 1".into()));
    }
    let schema = &embedder.schema;
    let h_mat = h.insert_axis(ndarray::Axis(0));

    let mut times: Vec<f64> = Vec::with_capacity(max_len);
    let mut cat_values: Vec<Vec<u32>> = vec![Vec::with_capacity(max_len); schema.n_categorical()];
    let mut num_values: Vec<Vec<f64>> = vec![Vec::with_capacity(max_len); schema.n_numeric()];

    for step in 0..max_len {
        // The prefix plus one placeholder event; tokens are shifted right, so
        // the placeholder is never consumed as input.
        let scratch = EventSequence {
            id: "rollout".into(),
            times: {
                let mut t = times.clone();
                t.push(times.last().copied().unwrap_or(0.0));
                t
            },
            cat_values: cat_values
                .iter()
                .map(|col| {
                    let mut c = col.clone();
                    c.push(1);
                    c
                })
                .collect(),
            num_values: num_values
                .iter()
                .map(|col| {
                    let mut c = col.clone();
                    c.push(0.0);
                    c
                })
                .collect(),
            target: None,
        };
        let batch = pad_batch(schema, &[&scratch])?;
        let x_emb = embedder.forward(store, &batch)?;
        let (output, _cache) = decoder.forward(store, h_mat.view(), x_emb.view())?;

        let row = step; // flat index (batch row 0, position `step`)
        for (f, logits) in output.cat_logits.iter().enumerate() {
            let mut masked = logits.row(row).to_owned();
            masked[PAD_CODE as usize] = f64::NEG_INFINITY;
            let code = if greedy {
                argmax(masked.view())
            } else {
                sample_categorical(masked.view(), rng)
            };
            cat_values[f].push(code as u32);
        }
        for (f, preds) in output.num_preds.iter().enumerate() {
            num_values[f].push(preds[(row, 0)]);
        }
        let dt = output.dt_preds[(row, 0)].max(0.0);
        times.push(times.last().copied().unwrap_or(0.0) + dt);
    }

    Ok(EventSequence {
        id: "generated".into(),
        times,
        cat_values,
        num_values,
        target: None,
    })
}

fn argmax(logits: ArrayView1<f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &v) in logits.iter().enumerate() {
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

fn sample_categorical(logits: ArrayView1<f64>, rng: &mut impl Rng) -> usize {
    let log_probs = log_softmax_row(logits);
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &lp) in log_probs.iter().enumerate() {
        cum += lp.exp();
        if u <= cum {
            return i;
        }
    }
    log_probs.len() - 1
}
