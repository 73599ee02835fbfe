use ndarray::{Array1, Array2, ArrayView2};

use crate::error::Result;
use crate::nn::params::ParameterStore;

const EPS: f64 = 1e-5;

/// Layer normalization over the last dimension with learned gain and bias.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub prefix: String,
    pub dim: usize,
}

pub struct LayerNormCache {
    /// Normalized activations before gain/bias.
    pub xhat: Array2<f64>,
    pub inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn new(prefix: impl Into<String>, dim: usize) -> Self {
        LayerNorm {
            prefix: prefix.into(),
            dim,
        }
    }

    fn gamma(&self) -> String {
        format!("{}.gamma", self.prefix)
    }

    fn beta(&self) -> String {
        format!("{}.beta", self.prefix)
    }

    pub fn init(&self, store: &mut ParameterStore) -> Result<()> {
        store.register(&self.gamma(), ndarray::ArrayD::ones(ndarray::IxDyn(&[self.dim])))?;
        store.register(&self.beta(), ndarray::ArrayD::zeros(ndarray::IxDyn(&[self.dim])))?;
        Ok(())
    }

    pub fn forward(&self, store: &ParameterStore, x: ArrayView2<f64>) -> (Array2<f64>, LayerNormCache) {
        let n = x.nrows();
        let d = self.dim as f64;
        let mut xhat = x.to_owned();
        let mut inv_std = Array1::zeros(n);
        for (i, mut row) in xhat.rows_mut().into_iter().enumerate() {
            let mean = row.sum() / d;
            row.mapv_inplace(|v| v - mean);
            let var = row.iter().map(|v| v * v).sum::<f64>() / d;
            let is = 1.0 / (var + EPS).sqrt();
            row.mapv_inplace(|v| v * is);
            inv_std[i] = is;
        }
        let gamma = store.vec(&self.gamma());
        let beta = store.vec(&self.beta());
        let mut y = xhat.clone();
        for mut row in y.rows_mut() {
            row.zip_mut_with(&gamma, |v, &g| *v *= g);
            row += &beta;
        }
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward(
        &self,
        store: &mut ParameterStore,
        cache: &LayerNormCache,
        dy: ArrayView2<f64>,
    ) -> Array2<f64> {
        let d = self.dim as f64;
        let gamma = store.vec(&self.gamma()).to_owned();

        let mut dgamma = Array1::zeros(self.dim);
        let mut dbeta = Array1::zeros(self.dim);
        let mut dx = Array2::zeros(dy.raw_dim());
        for i in 0..dy.nrows() {
            let dy_row = dy.row(i);
            let xhat_row = cache.xhat.row(i);
            for j in 0..self.dim {
                dgamma[j] += dy_row[j] * xhat_row[j];
                dbeta[j] += dy_row[j];
            }
            // dxhat = dy ⊙ γ; dx = inv_std · (dxhat − mean(dxhat) − x̂·mean(dxhat⊙x̂))
            let mut sum_dxhat = 0.0;
            let mut sum_dxhat_xhat = 0.0;
            for j in 0..self.dim {
                let dxhat = dy_row[j] * gamma[j];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat_row[j];
            }
            let mean_dxhat = sum_dxhat / d;
            let mean_dxhat_xhat = sum_dxhat_xhat / d;
            let is = cache.inv_std[i];
            for j in 0..self.dim {
                let dxhat = dy_row[j] * gamma[j];
                dx[(i, j)] = is * (dxhat - mean_dxhat - xhat_row[j] * mean_dxhat_xhat);
            }
        }
        store.add_grad(&self.gamma(), dgamma.view().into_dyn());
        store.add_grad(&self.beta(), dbeta.view().into_dyn());
        dx
    }
}
