//! Central finite-difference checks for every differentiable block and loss,
//! on random small instances.

mod common;

use common::{check_input_grads, check_param_grads};
use evseq::data::{
    pad_batch, CategoricalFeature, EventSequence, FeatureSchema, NumericFeature, PaddedBatch,
    TargetKind,
};
use evseq::nn::{Gru, ModelConfig, ParameterStore, Projector};
use evseq::objectives::{contrastive_loss, lm_loss, AlignmentHead, PairLabels};
use evseq::train::{supervised_loss, ContrastiveModel, GenerativeModel, SupervisedModel};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const INSTANCES: usize = 20;

fn tiny_schema(vocab: u32) -> FeatureSchema {
    FeatureSchema {
        categorical: vec![CategoricalFeature {
            name: "kind".into(),
            vocab_size: vocab,
            embed_dim: 2,
            rare_code: None,
            values: None,
        }],
        numeric: vec![NumericFeature { name: "v".into() }],
        time_unit: "unit".into(),
        target_kind: TargetKind::Regression,
    }
}

fn tiny_model_config(rng: &mut impl Rng) -> ModelConfig {
    let mut config = ModelConfig::default();
    config.encoder.hidden_size = rng.random_range(2..=5);
    config.encoder.feature_embed_dim = 2;
    config.decoder.layers = rng.random_range(1..=2);
    config.decoder.heads = 2;
    config.decoder.model_dim = 4;
    config.decoder.ff_dim = rng.random_range(3..=6);
    config.projector_dim = rng.random_range(2..=4);
    config
}

fn random_batch(schema: &FeatureSchema, rng: &mut impl Rng) -> PaddedBatch {
    let b = rng.random_range(1..=3);
    let t_longest = rng.random_range(2..=5);
    let sequences: Vec<EventSequence> = (0..b)
        .map(|i| {
            let len = if i == 0 { t_longest } else { rng.random_range(1..=t_longest) };
            let mut t = 0.0;
            let times: Vec<f64> = (0..len)
                .map(|_| {
                    t += rng.random_range(0.01..0.5);
                    t
                })
                .collect();
            EventSequence {
                id: format!("s{i}"),
                times,
                cat_values: vec![(0..len)
                    .map(|_| rng.random_range(1..schema.categorical[0].vocab_size))
                    .collect()],
                num_values: vec![(0..len).map(|_| rng.random_range(-1.0..1.0)).collect()],
                target: Some(rng.random_range(0.0..2.0)),
            }
        })
        .collect();
    let refs: Vec<&EventSequence> = sequences.iter().collect();
    pad_batch(schema, &refs).unwrap()
}

fn random_matrix(r: usize, c: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
}

#[test]
fn gru_parameter_and_input_gradients() {
    for instance in 0..INSTANCES {
        let mut rng = ChaCha12Rng::seed_from_u64(100 + instance as u64);
        let (b, t, d, h) = (
            rng.random_range(1..=3),
            rng.random_range(1..=5),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        );
        let gru = Gru::new("gru", d, h);
        let mut store = ParameterStore::new();
        gru.init(&mut store, &mut rng).unwrap();

        let x = Array3::from_shape_fn((b, t, d), |_| rng.random_range(-1.0..1.0));
        let mut mask = Array2::from_elem((b, t), true);
        for i in 0..b {
            let len = rng.random_range(1..=t);
            for j in len..t {
                mask[(i, j)] = false;
            }
        }
        // Scalar objective: weighted sum of the final hidden state.
        let weights = random_matrix(b, h, &mut rng);

        let loss = |store: &ParameterStore, x: &Array3<f64>| {
            let (hh, _) = gru.forward(store, x.view(), mask.view()).unwrap();
            (&hh * &weights).sum()
        };

        store.zero_grads();
        let (_, cache) = gru.forward(&store, x.view(), mask.view()).unwrap();
        let dx = gru.backward(&mut store, &cache, weights.view());

        check_param_grads(&mut store, |s| loss(s, &x), &format!("gru[{instance}]"));
        check_input_grads(
            &x.clone().into_dyn(),
            &dx.into_dyn(),
            |xp| {
                let x3 = xp.clone().into_dimensionality().unwrap();
                loss(&store, &x3)
            },
            &format!("gru-input[{instance}]"),
        );
    }
}

#[test]
fn projector_gradients_match_finite_differences() {
    for instance in 0..INSTANCES {
        let mut rng = ChaCha12Rng::seed_from_u64(200 + instance as u64);
        let (b, din, dout) = (
            rng.random_range(1..=3),
            rng.random_range(2..=6),
            rng.random_range(1..=4),
        );
        let proj = Projector::new("proj", din, dout);
        let mut store = ParameterStore::new();
        proj.init(&mut store, &mut rng).unwrap();

        let h = random_matrix(b, din, &mut rng);
        let weights = random_matrix(b, dout, &mut rng);
        let loss = |store: &ParameterStore, h: &Array2<f64>| {
            let (z, _) = proj.forward(store, h.view());
            (&z * &weights).sum()
        };

        store.zero_grads();
        let (_, cache) = proj.forward(&store, h.view());
        let dh = proj.backward(&mut store, &cache, weights.view());

        check_param_grads(&mut store, |s| loss(s, &h), &format!("projector[{instance}]"));
        check_input_grads(
            &h.clone().into_dyn(),
            &dh.into_dyn(),
            |hp| loss(&store, &hp.clone().into_dimensionality().unwrap()),
            &format!("projector-input[{instance}]"),
        );
    }
}

#[test]
fn contrastive_loss_gradients_match_finite_differences() {
    for instance in 0..INSTANCES {
        let mut rng = ChaCha12Rng::seed_from_u64(300 + instance as u64);
        let sources = rng.random_range(2..=4);
        let origins: Vec<usize> = (0..2 * sources).map(|v| v / 2).collect();
        let labels = PairLabels::from_origins(&origins);
        let m = rng.random_range(2..=5);
        let h = random_matrix(2 * sources, m, &mut rng);
        let rho = rng.random_range(0.3..1.5);

        let (_, grad) = contrastive_loss(h.view(), &labels, rho).unwrap();
        check_input_grads(
            &h.clone().into_dyn(),
            &grad.into_dyn(),
            |hp| {
                let h2: Array2<f64> = hp.clone().into_dimensionality().unwrap();
                contrastive_loss(h2.view(), &labels, rho).unwrap().0
            },
            &format!("contrastive[{instance}]"),
        );
    }
}

#[test]
fn alignment_loss_gradients_match_finite_differences() {
    for instance in 0..INSTANCES {
        let mut rng = ChaCha12Rng::seed_from_u64(400 + instance as u64);
        let n = rng.random_range(2..=4);
        let m = rng.random_range(2..=5);
        let head = AlignmentHead::new("align");
        let mut store = ParameterStore::new();
        head.init(&mut store, &mut rng).unwrap();
        // Move the scalars off their init point so the check is not trivial.
        store.value_mut("align.log_t").as_slice_mut().unwrap()[0] = rng.random_range(-0.5..1.5);
        store.value_mut("align.b").as_slice_mut().unwrap()[0] = rng.random_range(-1.0..1.0);

        let hg = random_matrix(n, m, &mut rng);
        let hc = random_matrix(n, m, &mut rng);
        let labels = PairLabels::identity(n);

        store.zero_grads();
        let (_, dhg) = head.loss(&mut store, hg.view(), hc.view(), &labels).unwrap();

        let hc_check = hc.clone();
        check_param_grads(
            &mut store,
            |s| {
                let mut scratch = s.clone();
                head.loss(&mut scratch, hg.view(), hc_check.view(), &labels)
                    .unwrap()
                    .0
            },
            &format!("alignment[{instance}]"),
        );
        check_input_grads(
            &hg.clone().into_dyn(),
            &dhg.into_dyn(),
            |hp| {
                let h2: Array2<f64> = hp.clone().into_dimensionality().unwrap();
                let mut scratch = store.clone();
                head.loss(&mut scratch, h2.view(), hc.view(), &labels).unwrap().0
            },
            &format!("alignment-hg[{instance}]"),
        );
    }
}

#[test]
fn generative_model_end_to_end_gradients() {
    // Composite check: embedder → recurrent encoder → transformer decoder →
    // reconstruction loss, every parameter at once.
    for instance in 0..INSTANCES {
        let mut rng = ChaCha12Rng::seed_from_u64(500 + instance as u64);
        let schema = tiny_schema(rng.random_range(2..=4));
        let config = tiny_model_config(&mut rng);
        let model = GenerativeModel::new(&schema, &config).unwrap();
        let mut store = ParameterStore::new();
        model.init(&mut store, &mut rng).unwrap();
        let batch = random_batch(&schema, &mut rng);

        store.zero_grads();
        let (output, cache) = model.forward(&store, &batch).unwrap();
        let (_, _, grads) = lm_loss(&output, &batch, &schema).unwrap();
        model.backward(&mut store, &batch, &cache, &grads, None);

        check_param_grads(
            &mut store,
            |s| {
                let (output, _) = model.forward(s, &batch).unwrap();
                lm_loss(&output, &batch, &schema).unwrap().0
            },
            &format!("generative[{instance}]"),
        );
    }
}

#[test]
fn contrastive_model_end_to_end_gradients() {
    for instance in 0..INSTANCES {
        let mut rng = ChaCha12Rng::seed_from_u64(600 + instance as u64);
        let schema = tiny_schema(rng.random_range(2..=4));
        let config = tiny_model_config(&mut rng);
        let model = ContrastiveModel::new(&schema, &config).unwrap();
        let mut store = ParameterStore::new();
        model.init(&mut store, &mut rng).unwrap();
        let batch = random_batch(&schema, &mut rng);
        let b = batch.batch_size();
        let origins: Vec<usize> = (0..b).flat_map(|i| [i, i]).collect();
        let labels = PairLabels::from_origins(&origins);

        // Duplicate the batch rows to mimic two views per sequence.
        let doubled = {
            let seqs = evseq::data::unpad_batch(&batch);
            let mut views = Vec::new();
            for s in &seqs {
                views.push(s.clone());
                views.push(s.clone());
            }
            let refs: Vec<&EventSequence> = views.iter().collect();
            pad_batch(&schema, &refs).unwrap()
        };
        let rho = 0.8;

        store.zero_grads();
        let (z, enc_cache, proj_cache) = model.forward(&store, &doubled).unwrap();
        let (_, dz) = contrastive_loss(z.view(), &labels, rho).unwrap();
        model.backward(&mut store, &doubled, &enc_cache, &proj_cache, dz.view());

        check_param_grads(
            &mut store,
            |s| {
                let (z, _, _) = model.forward(s, &doubled).unwrap();
                contrastive_loss(z.view(), &labels, rho).unwrap().0
            },
            &format!("contrastive-model[{instance}]"),
        );
    }
}

#[test]
fn supervised_model_gradients() {
    for instance in 0..INSTANCES {
        let mut rng = ChaCha12Rng::seed_from_u64(700 + instance as u64);
        let schema = tiny_schema(3);
        let config = tiny_model_config(&mut rng);
        let model = SupervisedModel::new(&schema, &config).unwrap();
        let mut store = ParameterStore::new();
        model.init(&mut store, &mut rng).unwrap();
        let batch = random_batch(&schema, &mut rng);

        store.zero_grads();
        let (scores, h, cache) = model.forward(&store, &batch).unwrap();
        let (_, dscores) =
            supervised_loss(scores.view(), &batch.targets, TargetKind::Regression).unwrap();
        let dh = model.head.backward(&mut store, h.view(), dscores.view());
        model.enc.backward(&mut store, &batch, &cache, dh.view(), None);

        check_param_grads(
            &mut store,
            |s| {
                let (scores, _, _) = model.forward(s, &batch).unwrap();
                supervised_loss(scores.view(), &batch.targets, TargetKind::Regression)
                    .unwrap()
                    .0
            },
            &format!("supervised[{instance}]"),
        );
    }
}

#[test]
fn mlem_composite_gradients_including_alignment_path() {
    // Generative loss plus alignment to a fixed partner matrix: gradients
    // must flow through both the decoder outputs and the embedding itself.
    for instance in 0..10 {
        let mut rng = ChaCha12Rng::seed_from_u64(800 + instance as u64);
        let schema = tiny_schema(3);
        let config = tiny_model_config(&mut rng);
        let model = evseq::train::MlemModel::new(&schema, &config).unwrap();
        let mut store = ParameterStore::new();
        model.init(&mut store, &mut rng).unwrap();
        store.value_mut("align.log_t").as_slice_mut().unwrap()[0] = 0.3;
        store.value_mut("align.b").as_slice_mut().unwrap()[0] = -0.2;
        let batch = random_batch(&schema, &mut rng);
        let b = batch.batch_size();
        let hc = random_matrix(b, config.encoder.hidden_size, &mut rng);
        let labels = PairLabels::identity(b);
        let (alpha, beta) = (1.0, 10.0);

        let total = |s: &ParameterStore| -> f64 {
            let mut scratch = s.clone();
            let (output, cache) = model.gen.forward(s, &batch).unwrap();
            let (lm, _, _) = lm_loss(&output, &batch, &schema).unwrap();
            let (align, _) = model
                .align
                .loss(&mut scratch, cache.h.view(), hc.view(), &labels)
                .unwrap();
            evseq::objectives::mlem_loss(lm, align, alpha, beta)
        };

        store.zero_grads();
        let (output, cache) = model.gen.forward(&store, &batch).unwrap();
        let (_, _, mut grads) = lm_loss(&output, &batch, &schema).unwrap();
        scale_grads(&mut grads, alpha);
        let (_, dh_align) = model
            .align
            .loss(&mut store, cache.h.view(), hc.view(), &labels)
            .unwrap();
        // α scaling is already in `grads`; β scales the alignment path.
        let mut dh_extra = dh_align;
        dh_extra.mapv_inplace(|v| v * beta);
        scale_align_param_grads(&mut store, beta);
        model
            .gen
            .backward(&mut store, &batch, &cache, &grads, Some(dh_extra.view()));

        check_param_grads(&mut store, total, &format!("mlem[{instance}]"));
    }
}

fn scale_grads(grads: &mut evseq::nn::DecoderOutputGrads, factor: f64) {
    for g in &mut grads.cat_logits {
        g.mapv_inplace(|v| v * factor);
    }
    for g in &mut grads.num_preds {
        g.mapv_inplace(|v| v * factor);
    }
    grads.dt_preds.mapv_inplace(|v| v * factor);
}

fn scale_align_param_grads(store: &mut ParameterStore, beta: f64) {
    for name in ["align.log_t", "align.b"] {
        let scaled = store.grad(name).to_owned() * beta;
        let current = store.grad(name).to_owned();
        store.add_grad(name, (scaled - current).view());
    }
}
