use std::f64::consts::PI;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `ln √(2π)`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Rows per parallel work unit; fixed so sums do not depend on the thread count.
const ROW_CHUNK: usize = 128;

/// Fully connected layer computing `x · W + b` for row vectors `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `inputs × outputs`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weights: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub(crate) fn random<R: Rng>(inputs: usize, outputs: usize, std: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std).expect("valid normal");
        Dense {
            weights: Array2::from_shape_simple_fn((inputs, outputs), || normal.sample(rng)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Forward pass: ReLU after every layer but the last.
pub(crate) fn forward(layers: &[Dense], x: ArrayView2<f64>) -> Array2<f64> {
    let mut a = x.to_owned();
    for (i, layer) in layers.iter().enumerate() {
        let mut z = a.dot(&layer.weights);
        z += &layer.bias;
        if i + 1 < layers.len() {
            z.mapv_inplace(|v| v.max(0.0));
        }
        a = z;
    }
    a
}

/// Split a head row into mixture weights, means and standard deviations.
pub(crate) fn heads_to_mixture(row: ArrayView1<f64>, k: usize, sigma_floor: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let logits = row.slice(s![..k]);
    let lse = log_sum_exp(logits.iter().copied());
    let pi = logits.iter().map(|a| (a - lse).exp()).collect();
    let mu = row.slice(s![k..2 * k]).to_vec();
    let sigma = row
        .slice(s![2 * k..3 * k])
        .iter()
        .map(|v| sigma_floor + v.exp())
        .collect();
    (pi, mu, sigma)
}

pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Negative log-likelihood of `y` under one head row, writing `∂NLL/∂row` into `grad`.
pub(crate) fn head_loss_grad(
    row: ArrayView1<f64>,
    y: f64,
    k: usize,
    sigma_floor: f64,
    mut grad: ArrayViewMut1<f64>,
) -> f64 {
    let logits = row.slice(s![..k]);
    let lse_a = log_sum_exp(logits.iter().copied());
    let mut joint = vec![0.0; k];
    let mut z = vec![0.0; k];
    let mut sigma = vec![0.0; k];
    for j in 0..k {
        let spread = row[2 * k + j].exp();
        sigma[j] = sigma_floor + spread;
        z[j] = (y - row[k + j]) / sigma[j];
        joint[j] = logits[j] - lse_a - 0.5 * z[j] * z[j] - sigma[j].ln() - LN_SQRT_2PI;
    }
    let lse = log_sum_exp(joint.iter().copied());
    for j in 0..k {
        let resp = (joint[j] - lse).exp();
        let pi = (logits[j] - lse_a).exp();
        grad[j] = pi - resp;
        grad[k + j] = -resp * z[j] / sigma[j];
        grad[2 * k + j] = resp * (1.0 - z[j] * z[j]) / sigma[j] * (sigma[j] - sigma_floor);
    }
    -lse
}

/// Summed NLL over the rows of `x` and its gradient for every layer.
pub(crate) fn loss_and_gradient(
    layers: &[Dense],
    x: ArrayView2<f64>,
    y: &[f64],
    k: usize,
    sigma_floor: f64,
) -> (f64, Vec<Dense>) {
    let n = x.nrows();
    let chunks: Vec<usize> = (0..n).step_by(ROW_CHUNK).collect();
    let parts: Vec<(f64, Vec<Dense>)> = chunks
        .par_iter()
        .map(|&lo| {
            let hi = (lo + ROW_CHUNK).min(n);
            chunk_gradient(layers, x.slice(s![lo..hi, ..]), &y[lo..hi], k, sigma_floor)
        })
        .collect();
    let mut total = 0.0;
    let mut grads: Vec<Dense> = layers.iter().map(|l| Dense::zeros(l.inputs(), l.outputs())).collect();
    for (loss, g) in parts {
        total += loss;
        for (acc, part) in grads.iter_mut().zip(g) {
            acc.weights += &part.weights;
            acc.bias += &part.bias;
        }
    }
    (total, grads)
}

fn chunk_gradient(layers: &[Dense], x: ArrayView2<f64>, y: &[f64], k: usize, sigma_floor: f64) -> (f64, Vec<Dense>) {
    let mut acts = vec![x.to_owned()];
    for (i, layer) in layers.iter().enumerate() {
        let mut z = acts[i].dot(&layer.weights);
        z += &layer.bias;
        if i + 1 < layers.len() {
            z.mapv_inplace(|v| v.max(0.0));
        }
        acts.push(z);
    }
    let heads = acts.pop().expect("output layer");
    let mut dz = Array2::zeros(heads.raw_dim());
    let mut loss = 0.0;
    for (i, row) in heads.outer_iter().enumerate() {
        loss += head_loss_grad(row, y[i], k, sigma_floor, dz.row_mut(i));
    }
    let mut grads = Vec::with_capacity(layers.len());
    for l in (0..layers.len()).rev() {
        let a = &acts[l];
        let g = Dense {
            weights: a.t().dot(&dz),
            bias: dz.sum_axis(Axis(0)),
        };
        if l > 0 {
            let mut da = dz.dot(&layers[l].weights.t());
            ndarray::Zip::from(&mut da).and(a).for_each(|d, &v| {
                if v <= 0.0 {
                    *d = 0.0;
                }
            });
            dz = da;
        }
        grads.push(g);
    }
    grads.reverse();
    (loss, grads)
}

pub(crate) fn num_params(layers: &[Dense]) -> usize {
    layers.iter().map(Dense::num_params).sum()
}

/// All weights then biases, layer by layer, in logical row-major order.
pub(crate) fn to_flat(layers: &[Dense]) -> Vec<f64> {
    let mut v = Vec::with_capacity(num_params(layers));
    for l in layers {
        v.extend(l.weights.iter());
        v.extend(l.bias.iter());
    }
    v
}

pub(crate) fn set_flat(layers: &mut [Dense], v: &[f64]) {
    assert_eq!(v.len(), num_params(layers), "flat parameter length");
    let mut it = v.iter();
    for l in layers {
        l.weights
            .iter_mut()
            .chain(l.bias.iter_mut())
            .for_each(|p| *p = *it.next().expect("length checked"));
    }
}

/// Gaussian density, used by tests and oracles.
pub fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}
