use ndarray::{Array3, ArrayView3};
use rand::Rng;

use crate::data::{FeatureSchema, PaddedBatch};
use crate::error::{Error, Result};
use crate::nn::params::{uniform_embedding, uniform_fan_in, ParameterStore};

/// Turns a padded batch into per-event vectors.
///
/// Each categorical feature is looked up in its own embedding table; each
/// numeric feature — and the time-delta channel — goes through its own
/// learned affine map from scalar to `embed_dim`. Blocks are concatenated in
/// schema order with dt last, so the output width is
/// `(n_categorical + n_numeric + 1) * embed_dim`.
#[derive(Debug, Clone)]
pub struct FeatureEmbedder {
    pub prefix: String,
    pub schema: FeatureSchema,
    pub embed_dim: usize,
}

impl FeatureEmbedder {
    pub fn new(prefix: impl Into<String>, schema: &FeatureSchema, embed_dim: usize) -> Result<Self> {
        if schema.n_features() == 0 {
            return Err(Error::InvalidSchema(
                "cannot embed a schema with no features".into(),
            ));
        }
        Ok(FeatureEmbedder {
            prefix: prefix.into(),
            schema: schema.clone(),
            embed_dim,
        })
    }

    pub fn out_dim(&self) -> usize {
        (self.schema.n_categorical() + self.schema.n_numeric() + 1) * self.embed_dim
    }

    fn table_name(&self, feature: &str) -> String {
        format!("{}.cat.{feature}", self.prefix)
    }

    fn num_w(&self, feature: &str) -> String {
        format!("{}.num.{feature}.w", self.prefix)
    }

    fn num_b(&self, feature: &str) -> String {
        format!("{}.num.{feature}.b", self.prefix)
    }

    fn dt_w(&self) -> String {
        format!("{}.dt.w", self.prefix)
    }

    fn dt_b(&self) -> String {
        format!("{}.dt.b", self.prefix)
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut impl Rng) -> Result<()> {
        let e = self.embed_dim;
        for feature in &self.schema.categorical {
            store.register(
                &self.table_name(&feature.name),
                uniform_embedding(feature.vocab_size as usize, e, rng),
            )?;
        }
        for feature in &self.schema.numeric {
            store.register(&self.num_w(&feature.name), uniform_fan_in(1, e, rng))?;
            store.register(&self.num_b(&feature.name), uniform_fan_in(1, e, rng))?;
        }
        store.register(&self.dt_w(), uniform_fan_in(1, e, rng))?;
        store.register(&self.dt_b(), uniform_fan_in(1, e, rng))?;
        Ok(())
    }

    /// Per-event vectors, shape (B, T, D).
    pub fn forward(&self, store: &ParameterStore, batch: &PaddedBatch) -> Result<Array3<f64>> {
        let (b, t) = (batch.batch_size(), batch.max_len());
        let e = self.embed_dim;
        let mut out = Array3::zeros((b, t, self.out_dim()));
        let mut offset = 0usize;

        for (f, feature) in self.schema.categorical.iter().enumerate() {
            let table = store.mat(&self.table_name(&feature.name));
            let codes = &batch.cat[f];
            for i in 0..b {
                for j in 0..t {
                    let code = codes[(i, j)] as usize;
                    if code >= table.nrows() {
                        return Err(Error::CodeOutOfVocab {
                            id: batch.ids[i].clone(),
                            feature: feature.name.clone(),
                            code: codes[(i, j)],
                            vocab_size: feature.vocab_size,
                        });
                    }
                    for k in 0..e {
                        out[(i, j, offset + k)] = table[(code, k)];
                    }
                }
            }
            offset += e;
        }

        for (f, feature) in self.schema.numeric.iter().enumerate() {
            let w = store.mat(&self.num_w(&feature.name));
            let bias = store.mat(&self.num_b(&feature.name));
            let values = &batch.num[f];
            for i in 0..b {
                for j in 0..t {
                    let v = values[(i, j)];
                    for k in 0..e {
                        out[(i, j, offset + k)] = v * w[(0, k)] + bias[(0, k)];
                    }
                }
            }
            offset += e;
        }

        let w = store.mat(&self.dt_w());
        let bias = store.mat(&self.dt_b());
        for i in 0..b {
            for j in 0..t {
                let v = batch.dt[(i, j)];
                for k in 0..e {
                    out[(i, j, offset + k)] = v * w[(0, k)] + bias[(0, k)];
                }
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients from the output gradient.
    ///
    /// Callers guarantee `dy` is zero at padded positions; the embedder does
    /// not re-apply the mask.
    pub fn backward(&self, store: &mut ParameterStore, batch: &PaddedBatch, dy: ArrayView3<f64>) {
        let (b, t) = (batch.batch_size(), batch.max_len());
        let e = self.embed_dim;
        let mut offset = 0usize;

        for (f, feature) in self.schema.categorical.iter().enumerate() {
            let codes = &batch.cat[f];
            let mut dtable =
                ndarray::Array2::<f64>::zeros((feature.vocab_size as usize, e));
            for i in 0..b {
                for j in 0..t {
                    let code = codes[(i, j)] as usize;
                    for k in 0..e {
                        dtable[(code, k)] += dy[(i, j, offset + k)];
                    }
                }
            }
            store.add_grad(&self.table_name(&feature.name), dtable.view().into_dyn());
            offset += e;
        }

        for (f, feature) in self.schema.numeric.iter().enumerate() {
            let values = &batch.num[f];
            let mut dw = ndarray::Array2::<f64>::zeros((1, e));
            let mut db = ndarray::Array2::<f64>::zeros((1, e));
            for i in 0..b {
                for j in 0..t {
                    let v = values[(i, j)];
                    for k in 0..e {
                        let g = dy[(i, j, offset + k)];
                        dw[(0, k)] += v * g;
                        db[(0, k)] += g;
                    }
                }
            }
            store.add_grad(&self.num_w(&feature.name), dw.view().into_dyn());
            store.add_grad(&self.num_b(&feature.name), db.view().into_dyn());
            offset += e;
        }

        let mut dw = ndarray::Array2::<f64>::zeros((1, e));
        let mut db = ndarray::Array2::<f64>::zeros((1, e));
        for i in 0..b {
            for j in 0..t {
                let v = batch.dt[(i, j)];
                for k in 0..e {
                    let g = dy[(i, j, offset + k)];
                    dw[(0, k)] += v * g;
                    db[(0, k)] += g;
                }
            }
        }
        store.add_grad(&self.dt_w(), dw.view().into_dyn());
        store.add_grad(&self.dt_b(), db.view().into_dyn());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pad_batch, CategoricalFeature, NumericFeature, TargetKind};

    fn schema_1cat_1num() -> FeatureSchema {
        FeatureSchema {
            categorical: vec![CategoricalFeature {
                name: "kind".into(),
                vocab_size: 5,
                embed_dim: 32,
                rare_code: None,
                values: None,
            }],
            numeric: vec![NumericFeature { name: "amount".into() }],
            time_unit: "unit".into(),
            target_kind: TargetKind::None,
        }
    }

    #[test]
    fn output_width_counts_dt_channel() {
        let schema = schema_1cat_1num();
        let embedder = FeatureEmbedder::new("embed", &schema, 32).unwrap();
        assert_eq!(embedder.out_dim(), 96);

        let pendulum = crate::synth::pendulum_schema();
        let embedder = FeatureEmbedder::new("embed", &pendulum, 8).unwrap();
        assert_eq!(embedder.out_dim(), 24);
    }

    #[test]
    fn empty_schema_rejected() {
        let schema = FeatureSchema {
            categorical: vec![],
            numeric: vec![],
            time_unit: "unit".into(),
            target_kind: TargetKind::None,
        };
        assert!(FeatureEmbedder::new("embed", &schema, 8).is_err());
    }

    #[test]
    fn forward_shape_matches_batch() {
        use rand::SeedableRng;
        let schema = schema_1cat_1num();
        let seq = crate::data::EventSequence {
            id: "a".into(),
            times: vec![0.0, 0.5, 1.0],
            cat_values: vec![vec![1, 2, 4]],
            num_values: vec![vec![0.1, -0.2, 0.3]],
            target: None,
        };
        let batch = pad_batch(&schema, &[&seq]).unwrap();
        let embedder = FeatureEmbedder::new("embed", &schema, 4).unwrap();
        let mut store = ParameterStore::new();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
        embedder.init(&mut store, &mut rng).unwrap();
        let out = embedder.forward(&store, &batch).unwrap();
        assert_eq!(out.shape(), &[1, 3, 12]);
    }
}
