use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

/// Parameters of a univariate self-exciting point process with
/// exponentially decaying excitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HawkesParams {
    /// Base intensity (events per unit time).
    pub mu: f64,
    /// Excitation added by each event.
    pub alpha: f64,
    /// Exponential decay rate of the excitation.
    pub beta: f64,
    /// Simulation horizon.
    pub horizon: f64,
}

impl HawkesParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidArgument(format!("mu must be > 0, got {}", self.mu)));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.alpha / self.beta >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "supercritical process: alpha/beta = {} >= 1",
                self.alpha / self.beta
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Branching ratio alpha/beta; the process is subcritical below 1.
    pub fn branching_ratio(&self) -> f64 {
        self.alpha / self.beta
    }

    /// Stationary event rate mu / (1 - alpha/beta).
    pub fn stationary_rate(&self) -> f64 {
        self.mu / (1.0 - self.branching_ratio())
    }
}

/// Conditional intensity λ(t) = μ + Σ_{tᵢ < t} α·exp(−β(t − tᵢ)).
pub fn hawkes_intensity(params: &HawkesParams, history: &[f64], t: f64) -> f64 {
    let excitation: f64 = history
        .iter()
        .take_while(|&&ti| ti < t)
        .map(|&ti| params.alpha * (-params.beta * (t - ti)).exp())
        .sum();
    params.mu + excitation
}

/// Samples event times on [0, horizon] by thinning.
///
/// Between events the intensity only decays, so λ evaluated just after the
/// current time is a valid piecewise-constant upper bound; candidates drawn
/// from it are accepted with probability λ(candidate)/λ_upper. The running
/// excitation is tracked in closed form rather than re-summed.
pub fn sample_hawkes(params: &HawkesParams, rng: &mut impl Rng) -> Result<Vec<f64>> {
    params.validate()?;
    let mut events = Vec::new();
    let mut t = 0.0_f64;
    // Excitation component of λ(t⁺): Σ α·exp(−β(t − tᵢ)) over past events.
    let mut excitation = 0.0_f64;
    loop {
        let upper = params.mu + excitation;
        let wait = Exp::new(upper).expect("positive rate").sample(rng);
        let candidate = t + wait;
        if candidate > params.horizon {
            break;
        }
        let decayed = excitation * (-params.beta * wait).exp();
        let intensity = params.mu + decayed;
        let u: f64 = rng.random();
        t = candidate;
        excitation = decayed;
        if u * upper <= intensity {
            debug_assert!(u * upper <= intensity + 1e-12);
            if let Some(&last) = events.last() {
                // Exp(λ) waits are positive, but guard exact float ties.
                if candidate <= last {
                    continue;
                }
            }
            events.push(candidate);
            excitation += params.alpha;
        }
    }
    Ok(events)
}
