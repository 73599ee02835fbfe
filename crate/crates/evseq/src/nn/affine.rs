use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::Result;
use crate::nn::math::{add_row_bias, column_sums, matmul, matmul_acc};
use crate::nn::params::{uniform_fan_in, uniform_vec, ParameterStore};

/// Row-wise affine map y = x·W + b with parameters owned by a store.
#[derive(Debug, Clone)]
pub struct Affine {
    pub prefix: String,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Affine {
    pub fn new(prefix: impl Into<String>, in_dim: usize, out_dim: usize) -> Self {
        Affine {
            prefix: prefix.into(),
            in_dim,
            out_dim,
        }
    }

    fn w_name(&self) -> String {
        format!("{}.w", self.prefix)
    }

    fn b_name(&self) -> String {
        format!("{}.b", self.prefix)
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut impl Rng) -> Result<()> {
        store.register(&self.w_name(), uniform_fan_in(self.in_dim, self.out_dim, rng))?;
        store.register(&self.b_name(), uniform_vec(self.out_dim, self.in_dim, rng))?;
        Ok(())
    }

    pub fn forward(&self, store: &ParameterStore, x: ArrayView2<f64>) -> Array2<f64> {
        let mut y = matmul(x, store.mat(&self.w_name()));
        add_row_bias(&mut y, store.vec(&self.b_name()));
        y
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(
        &self,
        store: &mut ParameterStore,
        x: ArrayView2<f64>,
        dy: ArrayView2<f64>,
    ) -> Array2<f64> {
        let dw = matmul(x.t(), dy);
        store.add_grad(&self.w_name(), dw.view().into_dyn());
        store.add_grad(&self.b_name(), column_sums(dy).view().into_dyn());
        let mut dx = Array2::zeros((x.nrows(), self.in_dim));
        matmul_acc(&mut dx, dy, store.mat(&self.w_name()).t());
        dx
    }
}
