use std::collections::BTreeMap;

use ndarray::{ArrayD, ArrayView1, ArrayView2, ArrayViewD, IxDyn};
use rand::Rng;

use crate::error::{Error, Result};

/// Named parameter arrays with matching gradient buffers.
///
/// Names are unique and iterated in sorted order everywhere (optimizer,
/// checkpoints, gradient clipping), which keeps runs bit-reproducible.
#[derive(Debug, Clone, Default)]
pub struct ParameterStore {
    values: BTreeMap<String, ArrayD<f64>>,
    grads: BTreeMap<String, ArrayD<f64>>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, value: ArrayD<f64>) -> Result<()> {
        if self.values.contains_key(name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter `{name}`")));
        }
        self.grads.insert(name.to_owned(), ArrayD::zeros(value.raw_dim()));
        self.values.insert(name.to_owned(), value);
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn n_scalars(&self) -> usize {
        self.values.values().map(|v| v.len()).sum()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(|s| s.as_str())
    }

    #[track_caller]
    pub fn value(&self, name: &str) -> ArrayViewD<'_, f64> {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"))
            .view()
    }

    #[track_caller]
    pub fn mat(&self, name: &str) -> ArrayView2<'_, f64> {
        self.value(name)
            .into_dimensionality()
            .unwrap_or_else(|_| panic!("parameter `{name}` is not a matrix"))
    }

    #[track_caller]
    pub fn vec(&self, name: &str) -> ArrayView1<'_, f64> {
        self.value(name)
            .into_dimensionality()
            .unwrap_or_else(|_| panic!("parameter `{name}` is not a vector"))
    }

    #[track_caller]
    pub fn value_mut(&mut self, name: &str) -> &mut ArrayD<f64> {
        self.values
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"))
    }

    #[track_caller]
    pub fn grad(&self, name: &str) -> ArrayViewD<'_, f64> {
        self.grads
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"))
            .view()
    }

    /// Accumulates `delta` into the gradient buffer of `name`.
    #[track_caller]
    pub fn add_grad(&mut self, name: &str, delta: ArrayViewD<'_, f64>) {
        let grad = self
            .grads
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"));
        debug_assert_eq!(grad.shape(), delta.shape(), "gradient shape for `{name}`");
        *grad += &delta;
    }

    pub fn zero_grads(&mut self) {
        for grad in self.grads.values_mut() {
            grad.fill(0.0);
        }
    }

    /// Global L2 norm of all gradients.
    pub fn grad_norm(&self) -> f64 {
        self.grads
            .values()
            .map(|g| g.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Scales every gradient so the global norm does not exceed `max_norm`.
    pub fn clip_grad_norm(&mut self, max_norm: f64) {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            for grad in self.grads.values_mut() {
                grad.mapv_inplace(|x| x * scale);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ArrayD<f64>)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_with_grads_mut(
        &mut self,
    ) -> impl Iterator<Item = (&str, &mut ArrayD<f64>, &ArrayD<f64>)> {
        let grads = &self.grads;
        self.values
            .iter_mut()
            .map(move |(k, v)| (k.as_str(), v, grads.get(k.as_str()).unwrap()))
    }

    /// Rounds every value through f32, so the in-memory parameters match the
    /// on-disk checkpoint representation exactly.
    pub fn round_to_f32(&mut self) {
        for value in self.values.values_mut() {
            value.mapv_inplace(|x| x as f32 as f64);
        }
    }

    /// True when both stores hold bit-identical values.
    pub fn bit_identical(&self, other: &ParameterStore) -> bool {
        if self.values.len() != other.values.len() {
            return false;
        }
        self.values.iter().all(|(name, value)| {
            other.values.get(name).is_some_and(|o| {
                o.shape() == value.shape()
                    && o.iter().zip(value.iter()).all(|(a, b)| a.to_bits() == b.to_bits())
            })
        })
    }
}

/// Uniform fan-in initialization U(−1/√fan_in, 1/√fan_in).
pub fn uniform_fan_in(rows: usize, cols: usize, rng: &mut impl Rng) -> ArrayD<f64> {
    let bound = 1.0 / (rows as f64).sqrt();
    ArrayD::from_shape_fn(IxDyn(&[rows, cols]), |_| rng.random_range(-bound..bound))
}

pub fn uniform_vec(len: usize, fan_in: usize, rng: &mut impl Rng) -> ArrayD<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    ArrayD::from_shape_fn(IxDyn(&[len]), |_| rng.random_range(-bound..bound))
}

pub fn zeros_vec(len: usize) -> ArrayD<f64> {
    ArrayD::zeros(IxDyn(&[len]))
}

/// Embedding-table initialization U(−1/√dim, 1/√dim): scaled by the output
/// width, not the vocabulary size.
pub fn uniform_embedding(vocab: usize, dim: usize, rng: &mut impl Rng) -> ArrayD<f64> {
    let bound = 1.0 / (dim as f64).sqrt();
    ArrayD::from_shape_fn(IxDyn(&[vocab, dim]), |_| rng.random_range(-bound..bound))
}

/// Square orthogonal matrix via Gram–Schmidt on a Gaussian draw.
pub fn orthogonal(n: usize, rng: &mut impl Rng) -> ndarray::Array2<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut m = ndarray::Array2::from_shape_fn((n, n), |_| {
        let x: f64 = StandardNormal.sample(rng);
        x
    });
    for i in 0..n {
        for j in 0..i {
            let dot = m.row(i).dot(&m.row(j));
            let prev = m.row(j).to_owned();
            m.row_mut(i).zip_mut_with(&prev, |a, &b| *a -= dot * b);
        }
        let norm = m.row(i).dot(&m.row(i)).sqrt();
        if norm > 1e-12 {
            m.row_mut(i).mapv_inplace(|x| x / norm);
        } else {
            // Degenerate draw; fall back to a unit vector.
            m.row_mut(i).fill(0.0);
            m[(i, i % n)] = 1.0;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn register_rejects_duplicates() {
        let mut store = ParameterStore::new();
        store.register("w", ArrayD::zeros(IxDyn(&[2, 2]))).unwrap();
        assert!(store.register("w", ArrayD::zeros(IxDyn(&[2, 2]))).is_err());
    }

    #[test]
    fn grad_accumulates_and_clips() {
        let mut store = ParameterStore::new();
        store.register("w", ArrayD::zeros(IxDyn(&[2]))).unwrap();
        let g = ArrayD::from_shape_vec(IxDyn(&[2]), vec![3.0, 4.0]).unwrap();
        store.add_grad("w", g.view());
        assert!((store.grad_norm() - 5.0).abs() < 1e-12);
        store.clip_grad_norm(1.0);
        assert!((store.grad_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_rows_are_orthonormal() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let m = orthogonal(16, &mut rng);
        for i in 0..16 {
            for j in 0..16 {
                let dot = m.row(i).dot(&m.row(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
    }
}
