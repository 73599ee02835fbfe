use ndarray::{s, Array1, Array2, Array3, ArrayView2, ArrayView3};
use rand::Rng;

use crate::data::FeatureSchema;
use crate::error::{Error, Result};
use crate::nn::affine::Affine;
use crate::nn::config::DecoderConfig;
use crate::nn::layernorm::{LayerNorm, LayerNormCache};
use crate::nn::math::matmul;
use crate::nn::params::{uniform_vec, ParameterStore};

/// Autoregressive transformer decoder conditioned on a sequence embedding.
///
/// Teacher-forced inputs are shifted right: position 0 consumes a learned
/// start token, position j consumes the embedding of event j−1, and the
/// prediction at position j is for event j. Causal self-attention keeps
/// position j blind to events ≥ j. The encoder state enters every layer
/// through cross-attention over a single layer-normalized memory slot; with
/// one slot the attention weights are identically 1, so the query/key
/// projections would be dead weights and only the value path is kept.
///
/// Activations are stored flat: row `i * T + t` of a (B·T, dm) matrix is
/// position t of batch row i.
#[derive(Debug, Clone)]
pub struct TransformerDecoder {
    pub prefix: String,
    pub config: DecoderConfig,
    pub input_dim: usize,
    pub enc_dim: usize,
    pub schema: FeatureSchema,
    input_proj: Affine,
    enc_ln: LayerNorm,
    layers: Vec<DecoderLayer>,
    cat_heads: Vec<Affine>,
    num_heads: Vec<Affine>,
    dt_head: Affine,
}

#[derive(Debug, Clone)]
struct DecoderLayer {
    wq: Affine,
    wk: Affine,
    wv: Affine,
    wo: Affine,
    ln1: LayerNorm,
    cross_v: Affine,
    cross_o: Affine,
    ln2: LayerNorm,
    ff1: Affine,
    ff2: Affine,
    ln3: LayerNorm,
}

/// Per-step predictions, flat over (B, T): one logit row per categorical
/// feature, one scalar per numeric feature and for the time delta.
pub struct DecoderOutput {
    pub batch_size: usize,
    pub seq_len: usize,
    /// Per categorical feature: (B·T, vocab_size) logits.
    pub cat_logits: Vec<Array2<f64>>,
    /// Per numeric feature: (B·T, 1) point predictions.
    pub num_preds: Vec<Array2<f64>>,
    /// (B·T, 1) predicted time since the previous event.
    pub dt_preds: Array2<f64>,
}

/// Gradients with respect to every field of [`DecoderOutput`].
pub struct DecoderOutputGrads {
    pub cat_logits: Vec<Array2<f64>>,
    pub num_preds: Vec<Array2<f64>>,
    pub dt_preds: Array2<f64>,
}

struct LayerCache {
    x_in: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Attention probabilities, (B, heads, T, T).
    probs: ndarray::Array4<f64>,
    /// Concatenated head outputs before the output projection.
    attn_concat: Array2<f64>,
    ln1: LayerNormCache,
    /// Cross-attention value per batch row, (B, dm).
    cross_v: Array2<f64>,
    ln2: LayerNormCache,
    x2: Array2<f64>,
    /// FF hidden activations after the ReLU.
    ff_a: Array2<f64>,
    ln3: LayerNormCache,
}

pub struct DecoderCache {
    batch_size: usize,
    seq_len: usize,
    /// Embedded events as passed in (needed for the input projection grad).
    x_emb_shifted: Array2<f64>,
    memory: Array2<f64>,
    enc_ln: LayerNormCache,
    layers: Vec<LayerCache>,
    x_final: Array2<f64>,
}

impl TransformerDecoder {
    pub fn new(
        prefix: impl Into<String>,
        config: DecoderConfig,
        input_dim: usize,
        enc_dim: usize,
        schema: &FeatureSchema,
    ) -> Self {
        let prefix = prefix.into();
        let dm = config.model_dim;
        let layers = (0..config.layers)
            .map(|l| {
                let p = format!("{prefix}.layer{l}");
                DecoderLayer {
                    wq: Affine::new(format!("{p}.self.wq"), dm, dm),
                    wk: Affine::new(format!("{p}.self.wk"), dm, dm),
                    wv: Affine::new(format!("{p}.self.wv"), dm, dm),
                    wo: Affine::new(format!("{p}.self.wo"), dm, dm),
                    ln1: LayerNorm::new(format!("{p}.ln1"), dm),
                    cross_v: Affine::new(format!("{p}.cross.wv"), enc_dim, dm),
                    cross_o: Affine::new(format!("{p}.cross.wo"), dm, dm),
                    ln2: LayerNorm::new(format!("{p}.ln2"), dm),
                    ff1: Affine::new(format!("{p}.ff.fc1"), dm, config.ff_dim),
                    ff2: Affine::new(format!("{p}.ff.fc2"), config.ff_dim, dm),
                    ln3: LayerNorm::new(format!("{p}.ln3"), dm),
                }
            })
            .collect();
        let cat_heads = schema
            .categorical
            .iter()
            .map(|f| Affine::new(format!("{prefix}.head.cat.{}", f.name), dm, f.vocab_size as usize))
            .collect();
        let num_heads = schema
            .numeric
            .iter()
            .map(|f| Affine::new(format!("{prefix}.head.num.{}", f.name), dm, 1))
            .collect();
        TransformerDecoder {
            input_proj: Affine::new(format!("{prefix}.input"), input_dim, dm),
            enc_ln: LayerNorm::new(format!("{prefix}.enc_ln"), enc_dim),
            dt_head: Affine::new(format!("{prefix}.head.dt"), dm, 1),
            layers,
            cat_heads,
            num_heads,
            prefix,
            config,
            input_dim,
            enc_dim,
            schema: schema.clone(),
        }
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut impl Rng) -> Result<()> {
        self.input_proj.init(store, rng)?;
        store.register(
            &format!("{}.start", self.prefix),
            uniform_vec(self.config.model_dim, self.config.model_dim, rng),
        )?;
        self.enc_ln.init(store)?;
        for layer in &self.layers {
            layer.wq.init(store, rng)?;
            layer.wk.init(store, rng)?;
            layer.wv.init(store, rng)?;
            layer.wo.init(store, rng)?;
            layer.ln1.init(store)?;
            layer.cross_v.init(store, rng)?;
            layer.cross_o.init(store, rng)?;
            layer.ln2.init(store)?;
            layer.ff1.init(store, rng)?;
            layer.ff2.init(store, rng)?;
            layer.ln3.init(store)?;
        }
        for head in &self.cat_heads {
            head.init(store, rng)?;
        }
        for head in &self.num_heads {
            head.init(store, rng)?;
        }
        self.dt_head.init(store, rng)
    }

    fn positional_encoding(&self, t: usize) -> Array2<f64> {
        let dm = self.config.model_dim;
        let mut pe = Array2::zeros((t, dm));
        for pos in 0..t {
            for k in 0..dm {
                let exponent = (2 * (k / 2)) as f64 / dm as f64;
                let angle = pos as f64 / 10000f64.powf(exponent);
                pe[(pos, k)] = if k % 2 == 0 { angle.sin() } else { angle.cos() };
            }
        }
        pe
    }

    /// Teacher-forced forward pass.
    ///
    /// `h_enc` is the encoder state for the same batch, (B, enc_dim);
    /// `x_emb` holds the embedded events, (B, T, D).
    pub fn forward(
        &self,
        store: &ParameterStore,
        h_enc: ArrayView2<f64>,
        x_emb: ArrayView3<f64>,
    ) -> Result<(DecoderOutput, DecoderCache)> {
        let (b, t, d) = (x_emb.shape()[0], x_emb.shape()[1], x_emb.shape()[2]);
        if d != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "decoder expects event dim {}, got {d}",
                self.input_dim
            )));
        }
        if h_enc.ncols() != self.enc_dim {
            return Err(Error::ShapeMismatch(format!(
                "decoder expects encoder dim {}, got {}",
                self.enc_dim,
                h_enc.ncols()
            )));
        }

        // Shift right: row i*T + 0 stays zero (start token handles it),
        // row i*T + j holds event j-1.
        let mut x_shifted = Array2::zeros((b * t, d));
        for i in 0..b {
            for j in 1..t {
                let mut row = x_shifted.row_mut(i * t + j);
                row.assign(&x_emb.slice(s![i, j - 1, ..]));
            }
        }

        let mut x = self.input_proj.forward(store, x_shifted.view());
        let start = store.vec(&format!("{}.start", self.prefix)).to_owned();
        for i in 0..b {
            let mut row = x.row_mut(i * t);
            row.assign(&start);
        }
        let pe = self.positional_encoding(t);
        for i in 0..b {
            for j in 0..t {
                let mut row = x.row_mut(i * t + j);
                row += &pe.row(j);
            }
        }

        let (memory, enc_ln_cache) = self.enc_ln.forward(store, h_enc);

        let mut layer_caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (x_next, cache) = self.layer_forward(store, layer, x, memory.view(), b, t);
            x = x_next;
            layer_caches.push(cache);
        }

        let cat_logits = self
            .cat_heads
            .iter()
            .map(|head| head.forward(store, x.view()))
            .collect();
        let num_preds = self
            .num_heads
            .iter()
            .map(|head| head.forward(store, x.view()))
            .collect();
        let dt_preds = self.dt_head.forward(store, x.view());

        Ok((
            DecoderOutput {
                batch_size: b,
                seq_len: t,
                cat_logits,
                num_preds,
                dt_preds,
            },
            DecoderCache {
                batch_size: b,
                seq_len: t,
                x_emb_shifted: x_shifted,
                memory,
                enc_ln: enc_ln_cache,
                layers: layer_caches,
                x_final: x,
            },
        ))
    }

    fn layer_forward(
        &self,
        store: &ParameterStore,
        layer: &DecoderLayer,
        x: Array2<f64>,
        memory: ArrayView2<f64>,
        b: usize,
        t: usize,
    ) -> (Array2<f64>, LayerCache) {
        let dm = self.config.model_dim;
        let heads = self.config.heads;
        let dk = dm / heads;
        let scale = 1.0 / (dk as f64).sqrt();

        let q = layer.wq.forward(store, x.view());
        let k = layer.wk.forward(store, x.view());
        let v = layer.wv.forward(store, x.view());

        let mut probs = ndarray::Array4::zeros((b, heads, t, t));
        let mut attn_concat = Array2::zeros((b * t, dm));
        for i in 0..b {
            let rows = i * t..(i + 1) * t;
            let qb = q.slice(s![rows.clone(), ..]);
            let kb = k.slice(s![rows.clone(), ..]);
            let vb = v.slice(s![rows.clone(), ..]);
            for h in 0..heads {
                let cols = h * dk..(h + 1) * dk;
                let qh = qb.slice(s![.., cols.clone()]);
                let kh = kb.slice(s![.., cols.clone()]);
                let vh = vb.slice(s![.., cols.clone()]);
                let mut scores = matmul(qh, kh.t());
                scores.mapv_inplace(|s| s * scale);
                // Causal mask then row softmax.
                for qi in 0..t {
                    let mut max = f64::NEG_INFINITY;
                    for kj in 0..=qi {
                        max = max.max(scores[(qi, kj)]);
                    }
                    let mut sum = 0.0;
                    for kj in 0..t {
                        if kj <= qi {
                            let e = (scores[(qi, kj)] - max).exp();
                            scores[(qi, kj)] = e;
                            sum += e;
                        } else {
                            scores[(qi, kj)] = 0.0;
                        }
                    }
                    for kj in 0..=qi {
                        scores[(qi, kj)] /= sum;
                    }
                }
                let out = matmul(scores.view(), vh);
                attn_concat
                    .slice_mut(s![rows.clone(), cols.clone()])
                    .assign(&out);
                probs.slice_mut(s![i, h, .., ..]).assign(&scores);
            }
        }
        let attn_out = layer.wo.forward(store, attn_concat.view());

        let sum1 = &x + &attn_out;
        let (x1, ln1_cache) = layer.ln1.forward(store, sum1.view());

        // Single-slot cross attention: output is the projected memory value,
        // identical at every position.
        let cross_v = layer.cross_v.forward(store, memory);
        let cross_proj = layer.cross_o.forward(store, cross_v.view());
        let mut sum2 = x1.clone();
        for i in 0..b {
            for j in 0..t {
                let mut row = sum2.row_mut(i * t + j);
                row += &cross_proj.row(i);
            }
        }
        let (x2, ln2_cache) = layer.ln2.forward(store, sum2.view());

        let mut ff_a = layer.ff1.forward(store, x2.view());
        ff_a.mapv_inplace(|v| v.max(0.0));
        let ff_out = layer.ff2.forward(store, ff_a.view());
        let sum3 = &x2 + &ff_out;
        let (x3, ln3_cache) = layer.ln3.forward(store, sum3.view());

        (
            x3,
            LayerCache {
                x_in: x,
                q,
                k,
                v,
                probs,
                attn_concat,
                ln1: ln1_cache,
                cross_v,
                ln2: ln2_cache,
                x2,
                ff_a,
                ln3: ln3_cache,
            },
        )
    }

    /// Backward pass; returns (d h_enc, d x_emb).
    pub fn backward(
        &self,
        store: &mut ParameterStore,
        cache: &DecoderCache,
        grads: &DecoderOutputGrads,
    ) -> (Array2<f64>, Array3<f64>) {
        let (b, t) = (cache.batch_size, cache.seq_len);
        let dm = self.config.model_dim;

        let mut dx = Array2::zeros((b * t, dm));
        for (head, dlogits) in self.cat_heads.iter().zip(&grads.cat_logits) {
            dx += &head.backward(store, cache.x_final.view(), dlogits.view());
        }
        for (head, dpred) in self.num_heads.iter().zip(&grads.num_preds) {
            dx += &head.backward(store, cache.x_final.view(), dpred.view());
        }
        dx += &self.dt_head.backward(store, cache.x_final.view(), grads.dt_preds.view());

        let mut d_memory = Array2::zeros((b, self.enc_dim));
        for (layer, layer_cache) in self.layers.iter().zip(&cache.layers).rev() {
            let (dx_prev, dmem) =
                self.layer_backward(store, layer, layer_cache, dx, cache.memory.view(), b, t);
            dx = dx_prev;
            d_memory += &dmem;
        }

        // Tokens: start rows and the input projection.
        let mut d_start = Array1::zeros(dm);
        for i in 0..b {
            d_start += &dx.row(i * t);
            dx.row_mut(i * t).fill(0.0);
        }
        store.add_grad(&format!("{}.start", self.prefix), d_start.view().into_dyn());
        let dx_shifted = self
            .input_proj
            .backward(store, cache.x_emb_shifted.view(), dx.view());
        let mut dx_emb = Array3::zeros((b, t, self.input_dim));
        for i in 0..b {
            for j in 1..t {
                let row = dx_shifted.row(i * t + j);
                dx_emb.slice_mut(s![i, j - 1, ..]).assign(&row);
            }
        }

        let dh_enc = self.enc_ln.backward(store, &cache.enc_ln, d_memory.view());
        (dh_enc, dx_emb)
    }

    #[allow(clippy::too_many_arguments)]
    fn layer_backward(
        &self,
        store: &mut ParameterStore,
        layer: &DecoderLayer,
        cache: &LayerCache,
        dx3: Array2<f64>,
        memory: ArrayView2<f64>,
        b: usize,
        t: usize,
    ) -> (Array2<f64>, Array2<f64>) {
        let dm = self.config.model_dim;
        let heads = self.config.heads;
        let dk = dm / heads;
        let scale = 1.0 / (dk as f64).sqrt();

        // LN3 and the feed-forward block.
        let dsum3 = layer.ln3.backward(store, &cache.ln3, dx3.view());
        let mut dff_a = layer.ff2.backward(store, cache.ff_a.view(), dsum3.view());
        dff_a.zip_mut_with(&cache.ff_a, |g, &a| {
            if a <= 0.0 {
                *g = 0.0;
            }
        });
        let mut dx2 = layer.ff1.backward(store, cache.x2.view(), dff_a.view());
        dx2 += &dsum3;

        // LN2 and the cross-attention block.
        let dsum2 = layer.ln2.backward(store, &cache.ln2, dx2.view());
        let mut d_cross_proj = Array2::zeros((b, dm));
        for i in 0..b {
            for j in 0..t {
                let row = dsum2.row(i * t + j);
                let mut acc = d_cross_proj.row_mut(i);
                acc += &row;
            }
        }
        let d_cross_v = layer
            .cross_o
            .backward(store, cache.cross_v.view(), d_cross_proj.view());
        let d_memory = layer.cross_v.backward(store, memory, d_cross_v.view());
        let dx1 = dsum2;

        // LN1 and causal self-attention.
        let dsum1 = layer.ln1.backward(store, &cache.ln1, dx1.view());
        let d_attn_out = dsum1.view();
        let d_attn_concat = layer
            .wo
            .backward(store, cache.attn_concat.view(), d_attn_out);

        let mut dq = Array2::zeros((b * t, dm));
        let mut dkm = Array2::zeros((b * t, dm));
        let mut dv = Array2::zeros((b * t, dm));
        for i in 0..b {
            let rows = i * t..(i + 1) * t;
            for h in 0..heads {
                let cols = h * dk..(h + 1) * dk;
                let p = cache.probs.slice(s![i, h, .., ..]);
                let d_out = d_attn_concat.slice(s![rows.clone(), cols.clone()]);
                let vh = cache.v.slice(s![rows.clone(), cols.clone()]);
                let qh = cache.q.slice(s![rows.clone(), cols.clone()]);
                let kh = cache.k.slice(s![rows.clone(), cols.clone()]);

                let mut dvh = matmul(p.t(), d_out);
                let dp = matmul(d_out, vh.t());
                // Softmax backward row by row.
                let mut ds = Array2::zeros((t, t));
                for qi in 0..t {
                    let mut dot = 0.0;
                    for kj in 0..=qi {
                        dot += dp[(qi, kj)] * p[(qi, kj)];
                    }
                    for kj in 0..=qi {
                        ds[(qi, kj)] = p[(qi, kj)] * (dp[(qi, kj)] - dot) * scale;
                    }
                }
                let dqh = matmul(ds.view(), kh);
                let dkh = matmul(ds.t(), qh);
                dq.slice_mut(s![rows.clone(), cols.clone()]).assign(&dqh);
                dkm.slice_mut(s![rows.clone(), cols.clone()]).assign(&dkh);
                dv.slice_mut(s![rows.clone(), cols.clone()])
                    .zip_mut_with(&mut dvh.view_mut(), |a, b| *a = *b);
            }
        }

        let mut dx_in = layer.wq.backward(store, cache.x_in.view(), dq.view());
        dx_in += &layer.wk.backward(store, cache.x_in.view(), dkm.view());
        dx_in += &layer.wv.backward(store, cache.x_in.view(), dv.view());
        dx_in += &dsum1;

        (dx_in, d_memory)
    }
}
