//! Synthetic pendulum dataset generation: self-exciting event times paired
//! with damped-pendulum coordinates.

mod dataset;
mod hawkes;
mod pendulum;

pub use dataset::{
    generate_pendulum_dataset, generate_pendulum_dataset_with, pendulum_schema, PendulumDatasetConfig,
};
pub use hawkes::{hawkes_intensity, sample_hawkes, HawkesParams};
pub use pendulum::{
    integrate_pendulum, simulate_pendulum, simulate_pendulum_with_step, PendulumParams,
    PendulumTrajectory, RK4_STEP,
};
