//! Shared dense-math helpers used by the network blocks.

use ndarray::{linalg::general_mat_mul, Array2, ArrayView1, ArrayView2, ArrayViewMut2};

/// C = A·B.
pub fn matmul(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let mut c = Array2::zeros((a.nrows(), b.ncols()));
    general_mat_mul(1.0, &a, &b, 0.0, &mut c);
    c
}

/// C += A·B.
pub fn matmul_acc(c: &mut Array2<f64>, a: ArrayView2<f64>, b: ArrayView2<f64>) {
    general_mat_mul(1.0, &a, &b, 1.0, c);
}

pub fn add_row_bias(x: &mut Array2<f64>, bias: ArrayView1<f64>) {
    for mut row in x.rows_mut() {
        row += &bias;
    }
}

/// Column sums, i.e. the bias gradient of a row-wise affine.
pub fn column_sums(x: ArrayView2<f64>) -> ndarray::Array1<f64> {
    x.sum_axis(ndarray::Axis(0))
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable log σ(x) = −softplus(−x).
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -((-x).exp()).ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Row-wise softmax in place.
pub fn softmax_rows_inplace(mut x: ArrayViewMut2<f64>) {
    for mut row in x.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Stable log-softmax of one row.
pub fn log_softmax_row(row: ArrayView1<f64>) -> ndarray::Array1<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.mapv(|v| v - max - log_sum)
}
