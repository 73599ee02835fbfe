use ndarray::{Array2, Array3, ArrayView2};
use rand::Rng;

use crate::data::{FeatureSchema, PaddedBatch, TargetKind};
use crate::error::{Error, Result};
use crate::nn::{
    Affine, DecoderCache, DecoderOutput, DecoderOutputGrads, FeatureEmbedder, Gru, GruCache,
    ModelConfig, ParameterStore, Projector, ProjectorCache, TransformerDecoder,
};
use crate::objectives::AlignmentHead;

/// Feature embedder + recurrent encoder: everything needed to map a padded
/// batch to one embedding per sequence. All strategies share this core under
/// the same parameter prefix, so any checkpoint can be re-opened as a plain
/// encoder for embedding extraction.
#[derive(Debug, Clone)]
pub struct EncoderCore {
    pub embedder: FeatureEmbedder,
    pub gru: Gru,
}

pub struct EncoderCache {
    pub x_emb: Array3<f64>,
    pub gru: GruCache,
}

impl EncoderCore {
    pub fn new(schema: &FeatureSchema, config: &ModelConfig) -> Result<Self> {
        let embedder = FeatureEmbedder::new("enc.embed", schema, config.encoder.feature_embed_dim)?;
        let gru = Gru::new("enc.gru", embedder.out_dim(), config.encoder.hidden_size);
        Ok(EncoderCore { embedder, gru })
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut impl Rng) -> Result<()> {
        self.embedder.init(store, rng)?;
        self.gru.init(store, rng)
    }

    pub fn hidden_size(&self) -> usize {
        self.gru.hidden
    }

    /// Sequence embeddings for a batch, shape (B, hidden).
    pub fn forward(&self, store: &ParameterStore, batch: &PaddedBatch) -> Result<(Array2<f64>, EncoderCache)> {
        let x_emb = self.embedder.forward(store, batch)?;
        let (h, gru_cache) = self.gru.forward(store, x_emb.view(), batch.mask.view())?;
        Ok((h, EncoderCache { x_emb, gru: gru_cache }))
    }

    /// Backward from the embedding gradient. `extra_dx` lets another consumer
    /// of the same embedded events (the decoder) contribute its gradient.
    pub fn backward(
        &self,
        store: &mut ParameterStore,
        batch: &PaddedBatch,
        cache: &EncoderCache,
        dh: ArrayView2<f64>,
        extra_dx: Option<&Array3<f64>>,
    ) {
        let mut dx = self.gru.backward(store, &cache.gru, dh);
        if let Some(extra) = extra_dx {
            dx += extra;
        }
        self.embedder.backward(store, batch, dx.view());
    }
}

/// Encoder plus the feed-forward projector used by the contrastive loss.
#[derive(Debug, Clone)]
pub struct ContrastiveModel {
    pub enc: EncoderCore,
    pub proj: Projector,
}

impl ContrastiveModel {
    pub fn new(schema: &FeatureSchema, config: &ModelConfig) -> Result<Self> {
        let enc = EncoderCore::new(schema, config)?;
        let proj = Projector::new("proj", config.encoder.hidden_size, config.projector_dim);
        Ok(ContrastiveModel { enc, proj })
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut impl Rng) -> Result<()> {
        self.enc.init(store, rng)?;
        self.proj.init(store, rng)
    }

    pub fn forward(
        &self,
        store: &ParameterStore,
        batch: &PaddedBatch,
    ) -> Result<(Array2<f64>, EncoderCache, ProjectorCache)> {
        let (h, enc_cache) = self.enc.forward(store, batch)?;
        let (z, proj_cache) = self.proj.forward(store, h.view());
        Ok((z, enc_cache, proj_cache))
    }

    pub fn backward(
        &self,
        store: &mut ParameterStore,
        batch: &PaddedBatch,
        enc_cache: &EncoderCache,
        proj_cache: &ProjectorCache,
        dz: ArrayView2<f64>,
    ) {
        let dh = self.proj.backward(store, proj_cache, dz);
        self.enc.backward(store, batch, enc_cache, dh.view(), None);
    }
}

/// Bottleneck encoder + autoregressive decoder.
#[derive(Debug, Clone)]
pub struct GenerativeModel {
    pub enc: EncoderCore,
    pub dec: TransformerDecoder,
}

pub struct GenerativeCache {
    pub enc: EncoderCache,
    pub dec: DecoderCache,
    pub h: Array2<f64>,
}

impl GenerativeModel {
    pub fn new(schema: &FeatureSchema, config: &ModelConfig) -> Result<Self> {
        let enc = EncoderCore::new(schema, config)?;
        let dec = TransformerDecoder::new(
            "dec",
            config.decoder,
            enc.embedder.out_dim(),
            config.encoder.hidden_size,
            schema,
        );
        Ok(GenerativeModel { enc, dec })
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut impl Rng) -> Result<()> {
        self.enc.init(store, rng)?;
        self.dec.init(store, rng)
    }

    pub fn forward(
        &self,
        store: &ParameterStore,
        batch: &PaddedBatch,
    ) -> Result<(DecoderOutput, GenerativeCache)> {
        let (h, enc_cache) = self.enc.forward(store, batch)?;
        let (output, dec_cache) = self.dec.forward(store, h.view(), enc_cache.x_emb.view())?;
        Ok((
            output,
            GenerativeCache {
                enc: enc_cache,
                dec: dec_cache,
                h,
            },
        ))
    }

    /// Backward from decoder-output gradients, optionally adding a gradient
    /// arriving directly at the sequence embedding (the alignment loss).
    pub fn backward(
        &self,
        store: &mut ParameterStore,
        batch: &PaddedBatch,
        cache: &GenerativeCache,
        grads: &DecoderOutputGrads,
        dh_extra: Option<ArrayView2<f64>>,
    ) {
        let (mut dh, dx_emb) = self.dec.backward(store, &cache.dec, grads);
        if let Some(extra) = dh_extra {
            dh += &extra;
        }
        self.enc
            .backward(store, batch, &cache.enc, dh.view(), Some(&dx_emb));
    }
}

/// Generative model plus the learnable alignment temperature and bias. The
/// frozen contrastive encoder lives in its own parameter store.
#[derive(Debug, Clone)]
pub struct MlemModel {
    pub gen: GenerativeModel,
    pub align: AlignmentHead,
}

impl MlemModel {
    pub fn new(schema: &FeatureSchema, config: &ModelConfig) -> Result<Self> {
        Ok(MlemModel {
            gen: GenerativeModel::new(schema, config)?,
            align: AlignmentHead::new("align"),
        })
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut impl Rng) -> Result<()> {
        self.gen.init(store, rng)?;
        self.align.init(store, rng)
    }
}

/// Encoder with a linear head for supervised training and fine-tuning.
#[derive(Debug, Clone)]
pub struct SupervisedModel {
    pub enc: EncoderCore,
    pub head: Affine,
}

impl SupervisedModel {
    pub fn new(schema: &FeatureSchema, config: &ModelConfig) -> Result<Self> {
        let width = schema.target_kind.head_width();
        if width == 0 {
            return Err(Error::InvalidArgument(
                "supervised training needs a target".into(),
            ));
        }
        let enc = EncoderCore::new(schema, config)?;
        let head = Affine::new("head", config.encoder.hidden_size, width);
        Ok(SupervisedModel { enc, head })
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut impl Rng) -> Result<()> {
        self.enc.init(store, rng)?;
        self.head.init(store, rng)
    }

    pub fn forward(
        &self,
        store: &ParameterStore,
        batch: &PaddedBatch,
    ) -> Result<(Array2<f64>, Array2<f64>, EncoderCache)> {
        let (h, cache) = self.enc.forward(store, batch)?;
        let scores = self.head.forward(store, h.view());
        Ok((scores, h, cache))
    }
}

/// Supervised loss on head outputs: softmax cross-entropy for
/// classification, mean squared error for regression. Returns the loss and
/// the gradient with respect to the scores.
pub fn supervised_loss(
    scores: ArrayView2<f64>,
    targets: &[Option<f64>],
    target_kind: TargetKind,
) -> Result<(f64, Array2<f64>)> {
    let n = scores.nrows();
    if targets.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} score rows but {} targets",
            targets.len()
        )));
    }
    let mut grad = Array2::zeros(scores.raw_dim());
    let mut loss = 0.0;
    let inv = 1.0 / n as f64;
    match target_kind {
        TargetKind::Regression => {
            for i in 0..n {
                let y = targets[i].ok_or_else(|| Error::InvalidArgument("missing target".into()))?;
                let err = scores[(i, 0)] - y;
                loss += err * err * inv;
                grad[(i, 0)] = 2.0 * err * inv;
            }
        }
        TargetKind::Binary | TargetKind::Multiclass(_) => {
            let k = scores.ncols();
            for i in 0..n {
                let y = targets[i].ok_or_else(|| Error::InvalidArgument("missing target".into()))?;
                let class = y as usize;
                if class >= k {
                    return Err(Error::InvalidArgument(format!(
                        "class {class} out of range for {k}-way head"
                    )));
                }
                let log_probs = crate::nn::math::log_softmax_row(scores.row(i));
                loss -= log_probs[class] * inv;
                for c in 0..k {
                    grad[(i, c)] = (log_probs[c].exp() - if c == class { 1.0 } else { 0.0 }) * inv;
                }
            }
        }
        TargetKind::None => {
            return Err(Error::InvalidArgument(
                "dataset declares no target".into(),
            ))
        }
    }
    Ok((loss, grad))
}
