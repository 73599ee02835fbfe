use std::collections::BTreeMap;

use ndarray::ArrayD;

use crate::error::{Error, Result};
use crate::nn::params::ParameterStore;

/// Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m: BTreeMap<String, ArrayD<f64>>,
    v: BTreeMap<String, ArrayD<f64>>,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update from the gradients accumulated in `store`.
    pub fn step(&mut self, store: &mut ParameterStore) -> Result<()> {
        self.step += 1;
        let bias1 = 1.0 - self.beta1.powi(self.step as i32);
        let bias2 = 1.0 - self.beta2.powi(self.step as i32);
        for (name, value, grad) in store.iter_with_grads_mut() {
            if grad.shape() != value.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "gradient shape {:?} does not match parameter `{name}` {:?}",
                    grad.shape(),
                    value.shape()
                )));
            }
            let m = self
                .m
                .entry(name.to_owned())
                .or_insert_with(|| ArrayD::zeros(value.raw_dim()));
            let v = self
                .v
                .entry(name.to_owned())
                .or_insert_with(|| ArrayD::zeros(value.raw_dim()));
            if m.shape() != value.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "optimizer state shape {:?} does not match parameter `{name}` {:?}",
                    m.shape(),
                    value.shape()
                )));
            }
            azip(m, v, value, grad, |m, v, p, g| {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= self.lr * self.weight_decay * *p;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            });
        }
        Ok(())
    }
}

fn azip(
    m: &mut ArrayD<f64>,
    v: &mut ArrayD<f64>,
    p: &mut ArrayD<f64>,
    g: &ArrayD<f64>,
    mut f: impl FnMut(&mut f64, &mut f64, &mut f64, f64),
) {
    let gs = g.as_slice().expect("contiguous");
    let ms = m.as_slice_mut().expect("contiguous");
    let vs = v.as_slice_mut().expect("contiguous");
    let ps = p.as_slice_mut().expect("contiguous");
    for i in 0..gs.len() {
        f(&mut ms[i], &mut vs[i], &mut ps[i], gs[i]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::IxDyn;

    #[test]
    fn zero_gradient_zero_decay_is_a_noop() {
        let mut store = ParameterStore::new();
        store
            .register("w", ArrayD::from_elem(IxDyn(&[2]), 1.5))
            .unwrap();
        let mut opt = AdamW::new(0.1, 0.0);
        opt.step(&mut store).unwrap();
        for &v in store.value("w").iter() {
            assert_eq!(v, 1.5);
        }
    }

    #[test]
    fn descends_a_quadratic() {
        // f(w) = w²/2, gradient w; |w| must shrink.
        let mut store = ParameterStore::new();
        store
            .register("w", ArrayD::from_elem(IxDyn(&[1]), 1.0))
            .unwrap();
        let mut opt = AdamW::new(0.1, 0.0);
        let g = ArrayD::from_elem(IxDyn(&[1]), 1.0);
        store.add_grad("w", g.view());
        opt.step(&mut store).unwrap();
        let w = store.value("w")[0];
        assert!(w.abs() < 1.0, "w = {w}");
    }

    #[test]
    fn weight_decay_shrinks_parameters() {
        let mut store = ParameterStore::new();
        store
            .register("w", ArrayD::from_elem(IxDyn(&[1]), 2.0))
            .unwrap();
        let mut opt = AdamW::new(0.1, 3e-3);
        opt.step(&mut store).unwrap();
        let w = store.value("w")[0];
        assert!((w - 2.0 * (1.0 - 0.1 * 3e-3)).abs() < 1e-12);
    }
}
