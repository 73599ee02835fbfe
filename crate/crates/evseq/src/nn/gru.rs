use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::math::{matmul, matmul_acc, sigmoid};
use crate::nn::params::{orthogonal, uniform_fan_in, uniform_vec, ParameterStore};

/// Single-layer gated recurrent unit over left-aligned padded batches.
///
/// Gate layout in the fused weight matrices is [reset | update | candidate].
/// At padded positions the hidden state is carried through unchanged, so the
/// state after the last step equals the state at each row's last valid event
/// and padding can never leak into the sequence embedding.
#[derive(Debug, Clone)]
pub struct Gru {
    pub prefix: String,
    pub input_dim: usize,
    pub hidden: usize,
}

pub struct GruCache {
    x_flat: Array2<f64>,
    mask: Array2<bool>,
    r: Array3<f64>,
    z: Array3<f64>,
    n: Array3<f64>,
    /// Pre-activation of the hidden half of the candidate gate, W_hn·h + b_hn.
    ghn: Array3<f64>,
    /// Hidden states h_0..h_T (T+1 slices, h_0 = 0).
    h: Array3<f64>,
}

impl Gru {
    pub fn new(prefix: impl Into<String>, input_dim: usize, hidden: usize) -> Self {
        Gru {
            prefix: prefix.into(),
            input_dim,
            hidden,
        }
    }

    fn wx(&self) -> String {
        format!("{}.wx", self.prefix)
    }

    fn wh(&self) -> String {
        format!("{}.wh", self.prefix)
    }

    fn bx(&self) -> String {
        format!("{}.bx", self.prefix)
    }

    fn bh(&self) -> String {
        format!("{}.bh", self.prefix)
    }

    pub fn init(&self, store: &mut ParameterStore, rng: &mut impl Rng) -> Result<()> {
        store.register(&self.wx(), uniform_fan_in(self.input_dim, 3 * self.hidden, rng))?;
        // Orthogonal block per gate for the recurrent kernel.
        let mut wh = ndarray::Array2::zeros((self.hidden, 3 * self.hidden));
        for gate in 0..3 {
            let block = orthogonal(self.hidden, rng);
            wh.slice_mut(s![.., gate * self.hidden..(gate + 1) * self.hidden])
                .assign(&block);
        }
        store.register(&self.wh(), wh.into_dyn())?;
        store.register(&self.bx(), uniform_vec(3 * self.hidden, self.hidden, rng))?;
        store.register(&self.bh(), uniform_vec(3 * self.hidden, self.hidden, rng))?;
        Ok(())
    }

    /// Runs the recurrence and returns the hidden state at each row's last
    /// valid position, shape (B, hidden).
    pub fn forward(
        &self,
        store: &ParameterStore,
        x: ArrayView3<f64>,
        mask: ArrayView2<bool>,
    ) -> Result<(Array2<f64>, GruCache)> {
        let (b, t, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if d != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "gru expects input dim {}, got {d}",
                self.input_dim
            )));
        }
        for i in 0..b {
            if !mask[(i, 0)] {
                return Err(Error::EmptyBatch);
            }
        }
        let h_dim = self.hidden;

        // Input-side projections for every step at once.
        let x_flat = x
            .to_shape((b * t, d))
            .expect("contiguous input")
            .to_owned();
        let mut gates_x = matmul(x_flat.view(), store.mat(&self.wx()));
        let bx = store.vec(&self.bx());
        for mut row in gates_x.rows_mut() {
            row += &bx;
        }

        let wh = store.mat(&self.wh());
        let bh = store.vec(&self.bh()).to_owned();

        let mut cache = GruCache {
            x_flat,
            mask: mask.to_owned(),
            r: Array3::zeros((b, t, h_dim)),
            z: Array3::zeros((b, t, h_dim)),
            n: Array3::zeros((b, t, h_dim)),
            ghn: Array3::zeros((b, t, h_dim)),
            h: Array3::zeros((b, t + 1, h_dim)),
        };

        let mut h_prev: Array2<f64> = Array2::zeros((b, h_dim));
        for step in 0..t {
            let gates_h = {
                let mut g = matmul(h_prev.view(), wh);
                for mut row in g.rows_mut() {
                    row += &bh;
                }
                g
            };
            for i in 0..b {
                if !mask[(i, step)] {
                    // Carry the state through padding.
                    for k in 0..h_dim {
                        cache.h[(i, step + 1, k)] = h_prev[(i, k)];
                    }
                    continue;
                }
                for k in 0..h_dim {
                    let flat = i * t + step;
                    let gxr = gates_x[(flat, k)];
                    let gxz = gates_x[(flat, h_dim + k)];
                    let gxn = gates_x[(flat, 2 * h_dim + k)];
                    let ghr = gates_h[(i, k)];
                    let ghz = gates_h[(i, h_dim + k)];
                    let ghn = gates_h[(i, 2 * h_dim + k)];
                    let r = sigmoid(gxr + ghr);
                    let z = sigmoid(gxz + ghz);
                    let n = (gxn + r * ghn).tanh();
                    let h_new = (1.0 - z) * n + z * h_prev[(i, k)];
                    cache.r[(i, step, k)] = r;
                    cache.z[(i, step, k)] = z;
                    cache.n[(i, step, k)] = n;
                    cache.ghn[(i, step, k)] = ghn;
                    cache.h[(i, step + 1, k)] = h_new;
                }
            }
            h_prev.assign(&cache.h.index_axis(Axis(1), step + 1));
        }

        Ok((h_prev, cache))
    }

    /// Backward through time. Returns the input gradient, shape (B, T, D).
    pub fn backward(
        &self,
        store: &mut ParameterStore,
        cache: &GruCache,
        dh_last: ArrayView2<f64>,
    ) -> Array3<f64> {
        let (b, t, h_dim) = (cache.r.shape()[0], cache.r.shape()[1], self.hidden);
        let wh = store.mat(&self.wh()).to_owned();

        let mut d_gates_x = Array2::<f64>::zeros((b * t, 3 * h_dim));
        let mut dwh = Array2::<f64>::zeros((h_dim, 3 * h_dim));
        let mut dbh = ndarray::Array1::<f64>::zeros(3 * h_dim);

        let mut dh = dh_last.to_owned();
        let mut d_gates_h = Array2::<f64>::zeros((b, 3 * h_dim));
        for step in (0..t).rev() {
            d_gates_h.fill(0.0);
            for i in 0..b {
                if !cache.mask[(i, step)] {
                    continue; // dh passes straight to h_{t-1}
                }
                let flat = i * t + step;
                for k in 0..h_dim {
                    let r = cache.r[(i, step, k)];
                    let z = cache.z[(i, step, k)];
                    let n = cache.n[(i, step, k)];
                    let ghn = cache.ghn[(i, step, k)];
                    let h_prev = cache.h[(i, step, k)];
                    let g = dh[(i, k)];

                    let dz = g * (h_prev - n) * z * (1.0 - z);
                    let dn = g * (1.0 - z) * (1.0 - n * n);
                    let dr = dn * ghn * r * (1.0 - r);

                    d_gates_x[(flat, k)] = dr;
                    d_gates_x[(flat, h_dim + k)] = dz;
                    d_gates_x[(flat, 2 * h_dim + k)] = dn;
                    d_gates_h[(i, k)] = dr;
                    d_gates_h[(i, h_dim + k)] = dz;
                    d_gates_h[(i, 2 * h_dim + k)] = dn * r;

                    // Direct path through the update gate.
                    dh[(i, k)] = g * z;
                }
            }
            // dh_{t-1} += d_gates_h · W_hᵀ ; accumulate recurrent weight grads.
            let h_prev_slice = cache.h.index_axis(Axis(1), step);
            matmul_acc(&mut dwh, h_prev_slice.t(), d_gates_h.view());
            for i in 0..b {
                if cache.mask[(i, step)] {
                    for g in 0..3 * h_dim {
                        dbh[g] += d_gates_h[(i, g)];
                    }
                }
            }
            matmul_acc(&mut dh, d_gates_h.view(), wh.t());
        }

        // Input-side gradients in one pass.
        let dwx = matmul(cache.x_flat.t(), d_gates_x.view());
        let dbx = d_gates_x.sum_axis(Axis(0));
        let dx_flat = matmul(d_gates_x.view(), store.mat(&self.wx()).t());

        store.add_grad(&self.wx(), dwx.view().into_dyn());
        store.add_grad(&self.wh(), dwh.view().into_dyn());
        store.add_grad(&self.bx(), dbx.view().into_dyn());
        store.add_grad(&self.bh(), dbh.view().into_dyn());

        dx_flat
            .into_shape_with_order((b, t, self.input_dim))
            .expect("known shape")
    }
}
