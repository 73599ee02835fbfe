use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::math::{log_sigmoid, sigmoid};
use crate::nn::ParameterStore;
use crate::objectives::labels::PairLabels;

/// Learnable temperature and bias of the pairwise sigmoid alignment loss.
/// The temperature is stored in log space; the standard initialization is
/// t = 10, b = −10, which keeps the dense negative grid near zero loss at
/// the start of training.
#[derive(Debug, Clone)]
pub struct AlignmentHead {
    pub prefix: String,
}

impl AlignmentHead {
    pub fn new(prefix: impl Into<String>) -> Self {
        AlignmentHead { prefix: prefix.into() }
    }

    fn log_t(&self) -> String {
        format!("{}.log_t", self.prefix)
    }

    fn bias(&self) -> String {
        format!("{}.b", self.prefix)
    }

    pub fn init(&self, store: &mut ParameterStore, _rng: &mut impl Rng) -> Result<()> {
        store.register(
            &self.log_t(),
            ndarray::ArrayD::from_elem(ndarray::IxDyn(&[1]), 10.0f64.ln()),
        )?;
        store.register(
            &self.bias(),
            ndarray::ArrayD::from_elem(ndarray::IxDyn(&[1]), -10.0),
        )?;
        Ok(())
    }

    pub fn temperature(&self, store: &ParameterStore) -> f64 {
        store.value(&self.log_t())[0].exp()
    }

    pub fn bias_value(&self, store: &ParameterStore) -> f64 {
        store.value(&self.bias())[0]
    }

    /// Pairwise sigmoid loss between generative embeddings and frozen
    /// contrastive embeddings.
    ///
    /// Rows are L2-normalized, similarities are s_ij = ĥᵍᵢ·ĥᶜⱼ, and each
    /// pair contributes −log σ(z_ij(t·s_ij + b)) with z ∈ {1, −1}. The sum
    /// over the grid is divided by the batch size. Gradients flow to the
    /// generative embeddings, the temperature, and the bias only; `hc` is
    /// treated as a constant.
    pub fn loss(
        &self,
        store: &mut ParameterStore,
        hg: ArrayView2<f64>,
        hc: ArrayView2<f64>,
        labels: &PairLabels,
    ) -> Result<(f64, Array2<f64>)> {
        let n = hg.nrows();
        if hc.nrows() != n || hc.ncols() != hg.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "alignment expects matching shapes, got {:?} vs {:?}",
                hg.shape(),
                hc.shape()
            )));
        }
        if labels.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} embeddings but {} labels",
                labels.len()
            )));
        }
        let m = hg.ncols();
        let t = self.temperature(store);
        let b = self.bias_value(store);
        let scale = 1.0 / n as f64;

        let (hg_hat, hg_norms) = normalize_rows(hg);
        let (hc_hat, _) = normalize_rows(hc);

        // Similarity grid and loss.
        let sims = crate::nn::math::matmul(hg_hat.view(), hc_hat.view().reversed_axes());
        let mut loss = 0.0;
        let mut d_logit = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let z = labels.zpm(i, j);
                let logit = t * sims[(i, j)] + b;
                loss -= log_sigmoid(z * logit) * scale;
                // d(−log σ(z·x))/dx = −z·σ(−z·x)
                d_logit[(i, j)] = -z * sigmoid(-z * logit) * scale;
            }
        }

        // Parameter gradients.
        let mut dt_sum = 0.0;
        let mut db_sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                dt_sum += d_logit[(i, j)] * sims[(i, j)];
                db_sum += d_logit[(i, j)];
            }
        }
        let d_log_t = ndarray::ArrayD::from_elem(ndarray::IxDyn(&[1]), dt_sum * t);
        let d_b = ndarray::ArrayD::from_elem(ndarray::IxDyn(&[1]), db_sum);
        store.add_grad(&self.log_t(), d_log_t.view());
        store.add_grad(&self.bias(), d_b.view());

        // d/dĥᵍᵢ = t · Σⱼ d_logit · ĥᶜⱼ, then back through the normalization.
        let d_hg_hat = {
            let mut d = crate::nn::math::matmul(d_logit.view(), hc_hat.view());
            d.mapv_inplace(|v| v * t);
            d
        };
        let mut d_hg = Array2::zeros((n, m));
        for i in 0..n {
            let norm = hg_norms[i];
            let hat = hg_hat.row(i);
            let dhat = d_hg_hat.row(i);
            let dot = dhat.dot(&hat);
            for k in 0..m {
                d_hg[(i, k)] = (dhat[k] - dot * hat[k]) / norm;
            }
        }

        Ok((loss, d_hg))
    }
}

fn normalize_rows(x: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>) {
    let mut out = x.to_owned();
    let mut norms = Array1::zeros(x.nrows());
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt().max(1e-12);
        row.mapv_inplace(|v| v / norm);
        norms[i] = norm;
    }
    (out, norms)
}

/// One pair's contribution at a given similarity, exposed for unit oracles.
pub fn alignment_pair_term(z: f64, sim: f64, t: f64, b: f64) -> f64 {
    -log_sigmoid(z * (t * sim + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn pair_term_oracles() {
        // Zero logit costs ln 2 for either label.
        assert!((alignment_pair_term(1.0, 0.0, 1.0, 0.0) - 2.0f64.ln()).abs() < 1e-12);
        assert!((alignment_pair_term(-1.0, 0.0, 1.0, 0.0) - 2.0f64.ln()).abs() < 1e-12);
        // A perfectly similar positive pair saturates to zero as t grows.
        assert!(alignment_pair_term(1.0, 1.0, 1000.0, 0.0) < 1e-12);
    }

    #[test]
    fn initialization_values() {
        let head = AlignmentHead::new("align");
        let mut store = ParameterStore::new();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        head.init(&mut store, &mut rng).unwrap();
        assert!((head.temperature(&store) - 10.0).abs() < 1e-12);
        assert_eq!(head.bias_value(&store), -10.0);
    }

    #[test]
    fn positive_similarity_increase_lowers_loss() {
        let head = AlignmentHead::new("align");
        let mut store = ParameterStore::new();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        head.init(&mut store, &mut rng).unwrap();

        let hc = array![[1.0, 0.0], [0.0, 1.0]];
        let labels = PairLabels::identity(2);
        let near = array![[0.9, 0.1], [0.1, 0.9]];
        let far = array![[0.5, 0.5], [0.5, 0.5]];
        let (loss_near, _) = head.loss(&mut store, near.view(), hc.view(), &labels).unwrap();
        let (loss_far, _) = head.loss(&mut store, far.view(), hc.view(), &labels).unwrap();
        assert!(loss_near < loss_far, "{loss_near} !< {loss_far}");
    }
}
