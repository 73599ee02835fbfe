use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::objectives::labels::PairLabels;

/// Margin contrastive loss over a grid of view embeddings.
///
/// For every ordered pair the positive term is ½‖hᵢ−hⱼ‖² and the negative
/// term is ½·max(0, ρ − ‖hᵢ−hⱼ‖)², summed over the full grid and divided by
/// the number of source sequences |C|. Returns the loss and its gradient
/// with respect to the embeddings.
pub fn contrastive_loss(
    embeddings: ArrayView2<f64>,
    labels: &PairLabels,
    rho: f64,
) -> Result<(f64, Array2<f64>)> {
    if rho <= 0.0 {
        return Err(Error::InvalidArgument(format!("margin must be > 0, got {rho}")));
    }
    let n = embeddings.nrows();
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} embeddings but {} labels",
            labels.len()
        )));
    }
    let m = embeddings.ncols();
    let scale = 1.0 / labels.n_sources().max(1) as f64;

    let mut loss = 0.0;
    let mut grad = Array2::zeros((n, m));
    let mut diff = vec![0.0; m];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue; // zero distance, positive label: contributes nothing
            }
            let mut dist_sq = 0.0;
            for k in 0..m {
                let d = embeddings[(i, k)] - embeddings[(j, k)];
                diff[k] = d;
                dist_sq += d * d;
            }
            if labels.is_positive(i, j) {
                loss += 0.5 * dist_sq * scale;
                for k in 0..m {
                    grad[(i, k)] += diff[k] * scale;
                    grad[(j, k)] -= diff[k] * scale;
                }
            } else {
                let dist = dist_sq.sqrt();
                if dist < rho {
                    let gap = rho - dist;
                    loss += 0.5 * gap * gap * scale;
                    if dist > 1e-12 {
                        let coeff = -gap / dist * scale;
                        for k in 0..m {
                            grad[(i, k)] += coeff * diff[k];
                            grad[(j, k)] -= coeff * diff[k];
                        }
                    }
                }
            }
        }
    }
    Ok((loss, grad))
}

/// One pair's contribution, exposed for unit oracles.
pub fn contrastive_pair_term(dist: f64, positive: bool, rho: f64) -> f64 {
    if positive {
        0.5 * dist * dist
    } else {
        0.5 * (rho - dist).max(0.0).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pair_term_oracles() {
        // Identical embeddings: positive pair costs nothing, negative pair
        // pays the full margin.
        assert_eq!(contrastive_pair_term(0.0, true, 1.0), 0.0);
        assert_eq!(contrastive_pair_term(0.0, false, 1.0), 0.5);
        // Separation beyond the margin satisfies the negative pair.
        assert_eq!(contrastive_pair_term(5.0, false, 1.0), 0.0);
    }

    #[test]
    fn loss_matches_hand_sum() {
        // Two sources, one view each: only the negative pair contributes.
        let h = array![[0.0, 0.0], [0.3, 0.4]]; // distance 0.5
        let labels = PairLabels::from_origins(&[0, 1]);
        let (loss, _) = contrastive_loss(h.view(), &labels, 1.0).unwrap();
        // Ordered grid counts the pair twice; |C| = 2.
        let want = 2.0 * 0.5 * (1.0f64 - 0.5).powi(2) / 2.0;
        assert!((loss - want).abs() < 1e-12, "loss {loss} want {want}");
    }

    #[test]
    fn permutation_equivariance() {
        let h = array![[0.1, 0.2], [0.5, -0.3], [-0.2, 0.4], [0.9, 0.1]];
        let labels = PairLabels::from_origins(&[0, 0, 1, 1]);
        let (loss_a, _) = contrastive_loss(h.view(), &labels, 0.5).unwrap();

        let perm = [2usize, 0, 3, 1];
        let mut hp = Array2::zeros((4, 2));
        for (new, &old) in perm.iter().enumerate() {
            hp.row_mut(new).assign(&h.row(old));
        }
        let origins_p: Vec<usize> = perm.iter().map(|&old| [0, 0, 1, 1][old]).collect();
        let labels_p = PairLabels::from_origins(&origins_p);
        let (loss_b, _) = contrastive_loss(hp.view(), &labels_p, 0.5).unwrap();
        assert!((loss_a - loss_b).abs() < 1e-12);
    }

    #[test]
    fn translation_invariance() {
        let h = array![[0.1, 0.2], [0.5, -0.3], [-0.2, 0.4]];
        let labels = PairLabels::from_origins(&[0, 0, 1]);
        let (loss_a, _) = contrastive_loss(h.view(), &labels, 0.5).unwrap();
        let shifted = &h + 3.7;
        let (loss_b, _) = contrastive_loss(shifted.view(), &labels, 0.5).unwrap();
        assert!((loss_a - loss_b).abs() < 1e-9);
    }
}
