//! Shared test support: central finite-difference gradient checking.
//!
//! The finite-difference side only ever calls the forward pass, so it stays
//! independent of the hand-written backward implementations it verifies.

use evseq::nn::ParameterStore;

pub const FD_EPS: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

/// Semi-relative error: absolute for small gradients, relative for large.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1.0f64.max(analytic.abs()).max(numeric.abs())
}

/// Checks every parameter coordinate of `store` against central finite
/// differences of `loss` (forward only). Analytic gradients must already be
/// accumulated in the store by the caller's forward+backward pass.
pub fn check_param_grads(store: &mut ParameterStore, loss: impl Fn(&ParameterStore) -> f64, context: &str) {
    let names: Vec<String> = store.names().map(String::from).collect();
    for name in &names {
        let len = store.value(name).len();
        for idx in 0..len {
            let original = store.value_mut(name).as_slice_mut().unwrap()[idx];
            store.value_mut(name).as_slice_mut().unwrap()[idx] = original + FD_EPS;
            let up = loss(store);
            store.value_mut(name).as_slice_mut().unwrap()[idx] = original - FD_EPS;
            let down = loss(store);
            store.value_mut(name).as_slice_mut().unwrap()[idx] = original;

            let numeric = (up - down) / (2.0 * FD_EPS);
            let analytic = store.grad(name).as_slice().unwrap()[idx];
            let err = rel_err(analytic, numeric);
            assert!(
                err < FD_TOL,
                "{context}: parameter `{name}`[{idx}]: analytic {analytic:.3e}, fd {numeric:.3e}, rel err {err:.3e}"
            );
        }
    }
}

/// Checks an input gradient against central finite differences: `loss`
/// recomputes the scalar from a perturbed copy of the input.
pub fn check_input_grads(
    input: &ndarray::ArrayD<f64>,
    analytic: &ndarray::ArrayD<f64>,
    loss: impl Fn(&ndarray::ArrayD<f64>) -> f64,
    context: &str,
) {
    assert_eq!(input.shape(), analytic.shape(), "{context}: grad shape");
    let mut work = input.clone();
    for idx in 0..input.len() {
        let original = work.as_slice_mut().unwrap()[idx];
        work.as_slice_mut().unwrap()[idx] = original + FD_EPS;
        let up = loss(&work);
        work.as_slice_mut().unwrap()[idx] = original - FD_EPS;
        let down = loss(&work);
        work.as_slice_mut().unwrap()[idx] = original;

        let numeric = (up - down) / (2.0 * FD_EPS);
        let a = analytic.as_slice().unwrap()[idx];
        let err = rel_err(a, numeric);
        assert!(
            err < FD_TOL,
            "{context}: input[{idx}]: analytic {a:.3e}, fd {numeric:.3e}, rel err {err:.3e}"
        );
    }
}
