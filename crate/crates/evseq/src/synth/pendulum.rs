use crate::error::{Error, Result};

/// Physical parameters of a damped pendulum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    /// Damping factor.
    pub damping: f64,
    /// Bob mass in kg.
    pub mass: f64,
    /// Gravitational acceleration in m/s².
    pub gravity: f64,
    /// Pendulum length in m.
    pub length: f64,
    /// Initial angular displacement in rad.
    pub theta0: f64,
    /// Initial angular velocity in rad/s.
    pub omega0: f64,
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !(self.length > 0.0) || !(self.gravity > 0.0) || self.damping < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "invalid pendulum parameters: m={}, L={}, g={}, b={}",
                self.mass, self.length, self.gravity, self.damping
            )));
        }
        Ok(())
    }

    fn acceleration(&self, theta: f64, omega: f64) -> f64 {
        -(self.damping / self.mass) * omega - (self.gravity / self.length) * theta.sin()
    }

    /// Mechanical energy ½mL²θ'² + mgL(1 − cos θ).
    pub fn energy(&self, theta: f64, omega: f64) -> f64 {
        0.5 * self.mass * self.length * self.length * omega * omega
            + self.mass * self.gravity * self.length * (1.0 - theta.cos())
    }
}

/// Default integration step (seconds) for the dense RK4 grid.
pub const RK4_STEP: f64 = 1e-3;

/// Angular state (θ, θ') on a dense time grid.
pub struct PendulumTrajectory {
    pub step: f64,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
}

/// Integrates θ'' = −(b/m)θ' − (g/L)sin θ with classical RK4 on a fixed
/// grid covering [0, t_end].
pub fn integrate_pendulum(params: &PendulumParams, t_end: f64, step: f64) -> Result<PendulumTrajectory> {
    params.validate()?;
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {step}")));
    }
    let n_steps = (t_end / step).ceil() as usize;
    let mut theta = Vec::with_capacity(n_steps + 1);
    let mut omega = Vec::with_capacity(n_steps + 1);
    let mut th = params.theta0;
    let mut om = params.omega0;
    theta.push(th);
    omega.push(om);
    for _ in 0..n_steps {
        let k1t = om;
        let k1o = params.acceleration(th, om);
        let k2t = om + 0.5 * step * k1o;
        let k2o = params.acceleration(th + 0.5 * step * k1t, om + 0.5 * step * k1o);
        let k3t = om + 0.5 * step * k2o;
        let k3o = params.acceleration(th + 0.5 * step * k2t, om + 0.5 * step * k2o);
        let k4t = om + step * k3o;
        let k4o = params.acceleration(th + step * k3t, om + step * k3o);
        th += step / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
        om += step / 6.0 * (k1o + 2.0 * k2o + 2.0 * k3o + k4o);
        theta.push(th);
        omega.push(om);
    }
    Ok(PendulumTrajectory { step, theta, omega })
}

impl PendulumTrajectory {
    /// θ at time `t` (clamped to the grid), via cubic Hermite interpolation
    /// using the stored angular velocities as endpoint derivatives. Keeps the
    /// between-node error at the same order as the integrator itself.
    pub fn theta_at(&self, t: f64) -> f64 {
        let pos = (t / self.step).max(0.0);
        let i = (pos.floor() as usize).min(self.theta.len() - 1);
        if i + 1 >= self.theta.len() {
            return self.theta[self.theta.len() - 1];
        }
        let s = pos - i as f64;
        let (p0, p1) = (self.theta[i], self.theta[i + 1]);
        let (m0, m1) = (self.omega[i] * self.step, self.omega[i + 1] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * m1
    }

    /// Linear interpolation of θ' at time `t`.
    pub fn omega_at(&self, t: f64) -> f64 {
        let pos = (t / self.step).max(0.0);
        let i = (pos.floor() as usize).min(self.omega.len() - 1);
        if i + 1 >= self.omega.len() {
            return self.omega[self.omega.len() - 1];
        }
        let frac = pos - i as f64;
        self.omega[i] * (1.0 - frac) + self.omega[i + 1] * frac
    }
}

/// Unit-normalized bob coordinates x = sin θ, y = −cos θ at the requested
/// times (pivot at the origin, rest position at (0, −1)).
pub fn simulate_pendulum(params: &PendulumParams, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    simulate_pendulum_with_step(params, times, RK4_STEP)
}

pub fn simulate_pendulum_with_step(params: &PendulumParams, times: &[f64], step: f64) -> Result<Vec<(f64, f64)>> {
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let trajectory = integrate_pendulum(params, t_end, step)?;
    Ok(times
        .iter()
        .map(|&t| {
            let theta = trajectory.theta_at(t);
            (theta.sin(), -theta.cos())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(length: f64, theta0: f64, omega0: f64, damping: f64) -> PendulumParams {
        PendulumParams {
            damping,
            mass: 1.0,
            gravity: 9.81,
            length,
            theta0,
            omega0,
        }
    }

    #[test]
    fn equilibrium_stays_at_rest() {
        let p = base(2.0, 0.0, 0.0, 0.5);
        let times = [0.0, 0.5, 1.0, 3.0];
        for (x, y) in simulate_pendulum(&p, &times).unwrap() {
            assert_eq!(x, 0.0);
            assert_eq!(y, -1.0);
        }
    }

    #[test]
    fn small_angle_period_matches_analytic() {
        // L = g makes the small-angle period 2π, so x zero-crossings are
        // spaced π apart.
        let p = base(9.81, 0.01, 0.0, 0.0);
        let trajectory = integrate_pendulum(&p, 20.0, RK4_STEP).unwrap();
        let mut crossings = Vec::new();
        for i in 1..trajectory.theta.len() {
            let (a, b) = (trajectory.theta[i - 1], trajectory.theta[i]);
            if a == 0.0 || a.signum() == b.signum() {
                continue;
            }
            let frac = a / (a - b);
            crossings.push((i as f64 - 1.0 + frac) * RK4_STEP);
        }
        assert!(crossings.len() >= 4);
        for w in crossings.windows(2) {
            let gap = w[1] - w[0];
            assert!(
                (gap - std::f64::consts::PI).abs() / std::f64::consts::PI < 0.01,
                "crossing gap {gap}"
            );
        }
    }

    #[test]
    fn undamped_energy_conserved() {
        let p = base(2.0, 1.2, 0.3, 0.0);
        let trajectory = integrate_pendulum(&p, 5.0, RK4_STEP).unwrap();
        let e0 = p.energy(trajectory.theta[0], trajectory.omega[0]);
        for (&th, &om) in trajectory.theta.iter().zip(&trajectory.omega) {
            let e = p.energy(th, om);
            assert!(((e - e0) / e0).abs() < 5e-6, "energy drift {}", (e - e0) / e0);
        }
    }

    #[test]
    fn damped_energy_non_increasing() {
        let p = base(1.5, 2.0, 3.0, 0.5);
        let trajectory = integrate_pendulum(&p, 5.0, RK4_STEP).unwrap();
        let mut prev = f64::INFINITY;
        for (&th, &om) in trajectory.theta.iter().zip(&trajectory.omega) {
            let e = p.energy(th, om);
            assert!(e <= prev * (1.0 + 1e-12), "energy increased: {e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn step_halving_changes_little() {
        let p = base(0.7, 5.0, 8.0, 0.5);
        let times: Vec<f64> = (0..70).map(|k| k as f64 * 0.1).collect();
        let coarse = simulate_pendulum_with_step(&p, &times, 1e-3).unwrap();
        let fine = simulate_pendulum_with_step(&p, &times, 5e-4).unwrap();
        for ((x1, y1), (x2, y2)) in coarse.iter().zip(&fine) {
            assert!((x1 - x2).abs() < 1e-6 && (y1 - y2).abs() < 1e-6);
        }
    }

    #[test]
    fn coordinates_on_unit_circle() {
        let p = base(3.0, 4.0, 2.0, 0.5);
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.13).collect();
        for (x, y) in simulate_pendulum(&p, &times).unwrap() {
            assert!((x * x + y * y - 1.0).abs() < 1e-12);
        }
    }
}
