use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::Result;
use crate::nn::affine::Affine;
use crate::nn::params::ParameterStore;

/// Feed-forward projector applied on top of the encoder inside the
/// contrastive objective: in → in → out with a ReLU between. Embeddings
/// exported for evaluation bypass it.
#[derive(Debug, Clone)]
pub struct Projector {
    pub first: Affine,
    pub second: Affine,
}

pub struct ProjectorCache {
    h: Array2<f64>,
    /// Hidden activations after the ReLU.
    a: Array2<f64>,
}

impl Projector {
    pub fn new(prefix: &str, in_dim: usize, out_dim: usize) -> Self {
        Projector {
            first: Affine::new(format!("{prefix}.fc1"), in_dim, in_dim),
            second: Affine::new(format!("{prefix}.fc2"), in_dim, out_dim),
        }
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut impl Rng) -> Result<()> {
        self.first.init(store, rng)?;
        self.second.init(store, rng)
    }

    pub fn forward(&self, store: &ParameterStore, h: ArrayView2<f64>) -> (Array2<f64>, ProjectorCache) {
        let mut a = self.first.forward(store, h);
        a.mapv_inplace(|v| v.max(0.0));
        let z = self.second.forward(store, a.view());
        (
            z,
            ProjectorCache {
                h: h.to_owned(),
                a,
            },
        )
    }

    pub fn backward(
        &self,
        store: &mut ParameterStore,
        cache: &ProjectorCache,
        dz: ArrayView2<f64>,
    ) -> Array2<f64> {
        let mut da = self.second.backward(store, cache.a.view(), dz);
        da.zip_mut_with(&cache.a, |g, &a| {
            if a <= 0.0 {
                *g = 0.0;
            }
        });
        self.first.backward(store, cache.h.view(), da.view())
    }
}
