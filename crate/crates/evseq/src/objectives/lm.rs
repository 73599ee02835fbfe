use ndarray::Array2;

use crate::data::{FeatureSchema, PaddedBatch};
use crate::error::{Error, Result};
use crate::nn::{DecoderOutput, DecoderOutputGrads};

/// Next-event reconstruction loss: cross-entropy per categorical feature,
/// mean squared error per numeric feature and for the time delta. Each term
/// is mean-reduced over the valid (masked) steps and the terms are summed.
///
/// Returns the loss, per-term breakdown in schema order (categorical terms,
/// then numeric, then dt), and gradients for every decoder output.
pub fn lm_loss(
    output: &DecoderOutput,
    batch: &PaddedBatch,
    schema: &FeatureSchema,
) -> Result<(f64, Vec<f64>, DecoderOutputGrads)> {
    let (b, t) = (output.batch_size, output.seq_len);
    if b != batch.batch_size() || t != batch.max_len() {
        return Err(Error::ShapeMismatch(format!(
            "predictions are {b}×{t}, batch is {}×{}",
            batch.batch_size(),
            batch.max_len()
        )));
    }
    let n_valid: usize = batch.lengths.iter().sum();
    if n_valid == 0 {
        return Err(Error::EmptyBatch);
    }
    let inv = 1.0 / n_valid as f64;

    let mut terms = Vec::with_capacity(schema.n_categorical() + schema.n_numeric() + 1);
    let mut cat_grads = Vec::with_capacity(schema.n_categorical());

    for (f, logits) in output.cat_logits.iter().enumerate() {
        let vocab = schema.categorical[f].vocab_size as usize;
        let mut term = 0.0;
        let mut grad = Array2::zeros((b * t, vocab));
        for i in 0..b {
            for j in 0..batch.lengths[i] {
                let row = i * t + j;
                let target = batch.cat[f][(i, j)] as usize;
                let log_probs = crate::nn::math::log_softmax_row(logits.row(row));
                term -= log_probs[target] * inv;
                for v in 0..vocab {
                    grad[(row, v)] = (log_probs[v].exp() - if v == target { 1.0 } else { 0.0 }) * inv;
                }
            }
        }
        terms.push(term);
        cat_grads.push(grad);
    }

    let mut num_grads = Vec::with_capacity(schema.n_numeric());
    for (f, preds) in output.num_preds.iter().enumerate() {
        let mut term = 0.0;
        let mut grad = Array2::zeros((b * t, 1));
        for i in 0..b {
            for j in 0..batch.lengths[i] {
                let row = i * t + j;
                let err = preds[(row, 0)] - batch.num[f][(i, j)];
                term += err * err * inv;
                grad[(row, 0)] = 2.0 * err * inv;
            }
        }
        terms.push(term);
        num_grads.push(grad);
    }

    let mut dt_term = 0.0;
    let mut dt_grad = Array2::zeros((b * t, 1));
    for i in 0..b {
        for j in 0..batch.lengths[i] {
            let row = i * t + j;
            let err = output.dt_preds[(row, 0)] - batch.dt[(i, j)];
            dt_term += err * err * inv;
            dt_grad[(row, 0)] = 2.0 * err * inv;
        }
    }
    terms.push(dt_term);

    let loss = terms.iter().sum();
    Ok((
        loss,
        terms,
        DecoderOutputGrads {
            cat_logits: cat_grads,
            num_preds: num_grads,
            dt_preds: dt_grad,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pad_batch, CategoricalFeature, EventSequence, NumericFeature, TargetKind};

    fn schema() -> FeatureSchema {
        FeatureSchema {
            categorical: vec![CategoricalFeature {
                name: "kind".into(),
                vocab_size: 4,
                embed_dim: 2,
                rare_code: None,
                values: None,
            }],
            numeric: vec![NumericFeature { name: "v".into() }],
            time_unit: "unit".into(),
            target_kind: TargetKind::None,
        }
    }

    fn batch() -> PaddedBatch {
        let s1 = EventSequence {
            id: "a".into(),
            times: vec![0.0, 0.2, 0.7],
            cat_values: vec![vec![1, 2, 3]],
            num_values: vec![vec![0.5, -0.5, 1.0]],
            target: None,
        };
        let s2 = EventSequence {
            id: "b".into(),
            times: vec![0.0, 0.4],
            cat_values: vec![vec![2, 2]],
            num_values: vec![vec![0.0, 0.3]],
            target: None,
        };
        pad_batch(&schema(), &[&s1, &s2]).unwrap()
    }

    fn zero_output(b: usize, t: usize) -> DecoderOutput {
        DecoderOutput {
            batch_size: b,
            seq_len: t,
            cat_logits: vec![Array2::zeros((b * t, 4))],
            num_preds: vec![Array2::zeros((b * t, 1))],
            dt_preds: Array2::zeros((b * t, 1)),
        }
    }

    #[test]
    fn uniform_logits_give_ln_vocab() {
        let batch = batch();
        let output = zero_output(2, 3);
        let (_, terms, _) = lm_loss(&output, &batch, &schema()).unwrap();
        assert!((terms[0] - 4.0f64.ln()).abs() < 1e-12, "ce term {}", terms[0]);
    }

    #[test]
    fn exact_predictions_zero_the_numeric_terms() {
        let batch = batch();
        let mut output = zero_output(2, 3);
        for i in 0..2 {
            for j in 0..batch.lengths[i] {
                output.num_preds[0][(i * 3 + j, 0)] = batch.num[0][(i, j)];
                output.dt_preds[(i * 3 + j, 0)] = batch.dt[(i, j)];
            }
        }
        let (_, terms, _) = lm_loss(&output, &batch, &schema()).unwrap();
        assert_eq!(terms[1], 0.0);
        assert_eq!(terms[2], 0.0);
    }

    #[test]
    fn padded_steps_contribute_nothing() {
        let batch = batch();
        let mut a = zero_output(2, 3);
        let mut b = zero_output(2, 3);
        // Garbage at the padded slot (row 1, step 2) must not matter.
        b.cat_logits[0][(1 * 3 + 2, 0)] = 123.0;
        b.num_preds[0][(1 * 3 + 2, 0)] = -99.0;
        b.dt_preds[(1 * 3 + 2, 0)] = 7.0;
        a.dt_preds[(0, 0)] = 0.0;
        let (loss_a, _, grads_a) = lm_loss(&a, &batch, &schema()).unwrap();
        let (loss_b, _, grads_b) = lm_loss(&b, &batch, &schema()).unwrap();
        assert_eq!(loss_a, loss_b);
        assert_eq!(grads_a.dt_preds[(1 * 3 + 2, 0)], 0.0);
        assert_eq!(grads_b.cat_logits[0][(1 * 3 + 2, 1)], 0.0);
    }

    #[test]
    fn loss_is_sum_of_terms() {
        let batch = batch();
        let mut output = zero_output(2, 3);
        output.cat_logits[0][(0, 2)] = 1.3;
        output.num_preds[0][(2, 0)] = 0.4;
        output.dt_preds[(4, 0)] = -0.2;
        let (loss, terms, _) = lm_loss(&output, &batch, &schema()).unwrap();
        assert!((loss - terms.iter().sum::<f64>()).abs() < 1e-12);
    }
}
