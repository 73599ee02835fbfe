use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::data::{Dataset, EventSequence, FeatureSchema, NumericFeature, TargetKind};
use crate::error::{Error, Result};
use crate::synth::hawkes::{sample_hawkes, HawkesParams};
use crate::synth::pendulum::{simulate_pendulum, PendulumParams};

/// Settings for the synthetic pendulum dataset.
///
/// Each sequence observes one damped pendulum (length drawn from
/// U(0.5, 5) m, initial angle and angular velocity from U(1, 9)) at event
/// times drawn from a self-exciting point process with μ=10, α=0.2, β=1.
/// Features are the unit-normalized bob coordinates; the target is the
/// pendulum length.
#[derive(Debug, Clone, Copy)]
pub struct PendulumDatasetConfig {
    pub hawkes: HawkesParams,
    pub damping: f64,
    pub mass: f64,
    pub gravity: f64,
    pub length_range: (f64, f64),
    pub init_range: (f64, f64),
}

impl Default for PendulumDatasetConfig {
    fn default() -> Self {
        PendulumDatasetConfig {
            hawkes: HawkesParams {
                mu: 10.0,
                alpha: 0.2,
                beta: 1.0,
                horizon: 7.0,
            },
            damping: 0.5,
            mass: 1.0,
            gravity: 9.81,
            length_range: (0.5, 5.0),
            init_range: (1.0, 9.0),
        }
    }
}

/// Schema of the generated dataset: no categorical features, two numeric
/// coordinate features, regression target.
pub fn pendulum_schema() -> FeatureSchema {
    FeatureSchema {
        categorical: vec![],
        numeric: vec![
            NumericFeature { name: "x".into() },
            NumericFeature { name: "y".into() },
        ],
        time_unit: "seconds".into(),
        target_kind: TargetKind::Regression,
    }
}

/// Generates `n_sequences` pendulum observation sequences.
///
/// Each sequence gets its own RNG stream derived from (seed, index), so
/// generation is reproducible and independent of evaluation order.
pub fn generate_pendulum_dataset(n_sequences: usize, seed: u64) -> Result<Dataset> {
    generate_pendulum_dataset_with(n_sequences, seed, &PendulumDatasetConfig::default())
}

pub fn generate_pendulum_dataset_with(
    n_sequences: usize,
    seed: u64,
    config: &PendulumDatasetConfig,
) -> Result<Dataset> {
    if n_sequences == 0 {
        return Err(Error::InvalidArgument("n_sequences must be >= 1".into()));
    }
    config.hawkes.validate()?;
    let mut sequences = Vec::with_capacity(n_sequences);
    for index in 0..n_sequences {
        sequences.push(generate_one(index, seed, config)?);
    }
    Dataset::new(pendulum_schema(), sequences)
}

fn generate_one(index: usize, seed: u64, config: &PendulumDatasetConfig) -> Result<EventSequence> {
    let mut rng = ChaCha12Rng::seed_from_u64(crate::util::derive_seed(seed, index as u64));
    let length = rng.random_range(config.length_range.0..config.length_range.1);
    let theta0 = rng.random_range(config.init_range.0..config.init_range.1);
    let omega0 = rng.random_range(config.init_range.0..config.init_range.1);

    let mut times = sample_hawkes(&config.hawkes, &mut rng)?;
    if times.is_empty() {
        // A horizon long enough for μ=10 makes this vanishingly rare, but a
        // valid sequence needs at least one event.
        times.push(config.hawkes.horizon * 0.5);
    }

    let pendulum = PendulumParams {
        damping: config.damping,
        mass: config.mass,
        gravity: config.gravity,
        length,
        theta0,
        omega0,
    };
    let coords = simulate_pendulum(&pendulum, &times)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = coords.into_iter().unzip();

    Ok(EventSequence {
        id: format!("pendulum-{index}"),
        times,
        cat_values: vec![],
        num_values: vec![xs, ys],
        target: Some(length),
    })
}
