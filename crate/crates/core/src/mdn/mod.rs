//! The "standard coder": a mixture density network over change features.
//!
//! A ReLU network maps standardized `log(1 + count)` features to the
//! parameters of a K-component Gaussian mixture over coding time in hours.
//! Predictions are summarized by the mean of the mixture truncated to an
//! interval, by default `[0, 1]` hour; that mean is the change's effort in
//! Standard Coding Hours (SCH).

mod network;
mod train;

use std::f64::consts::SQRT_2;
use std::path::Path;

use libm::erfc;
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenizer::ChangeFeatures;

pub use network::{normal_pdf, Dense, LN_SQRT_2PI};
pub use train::{train_mdn, MdnConfig, TrainingLog};

pub const DEFAULT_COMPONENTS: usize = 20;
pub const DEFAULT_HIDDEN: [usize; 5] = [256, 64, 64, 64, 64];
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-3;
/// Default truncation interval in hours.
pub const SCH_BOUNDS: (f64, f64) = (0.0, 1.0);

/// Gaussian mixture over coding time in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixturePrediction {
    pub pi: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl MixturePrediction {
    /// Validated mixture: equal lengths, finite entries, positive weights summing to 1, positive σ.
    pub fn new(pi: Vec<f64>, mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let k = pi.len();
        if k == 0 || mu.len() != k || sigma.len() != k {
            return Err(Error::InvalidInput(
                "mixture parameter lengths differ or are empty".into(),
            ));
        }
        let finite = pi.iter().chain(&mu).chain(&sigma).all(|v| v.is_finite());
        if !finite || pi.iter().any(|&p| p <= 0.0) || sigma.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidInput(
                "mixture needs finite entries, π > 0 and σ > 0".into(),
            ));
        }
        if (pi.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("mixture weights must sum to 1".into()));
        }
        Ok(MixturePrediction { pi, mu, sigma })
    }

    pub fn components(&self) -> usize {
        self.pi.len()
    }

    /// Untruncated mixture mean `Σ π_k μ_k`.
    pub fn mean(&self) -> f64 {
        self.pi.iter().zip(&self.mu).map(|(p, m)| p * m).sum()
    }

    pub fn density(&self, y: f64) -> f64 {
        (0..self.components())
            .map(|k| self.pi[k] * normal_pdf(y, self.mu[k], self.sigma[k]))
            .sum()
    }
}

/// Negative log-likelihood of `y`, via a max-shifted log-sum-exp over components.
pub fn mdn_loss(pred: &MixturePrediction, y: f64) -> f64 {
    let terms = (0..pred.components()).map(|k| {
        let z = (y - pred.mu[k]) / pred.sigma[k];
        pred.pi[k].ln() - 0.5 * z * z - pred.sigma[k].ln() - LN_SQRT_2PI
    });
    -network::log_sum_exp(terms)
}

fn std_normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal mass in `[lo, hi]`, taken from whichever tail keeps precision.
fn std_normal_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        std_normal_cdf(-lo) - std_normal_cdf(-hi)
    } else if hi <= 0.0 {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    } else {
        1.0 - std_normal_cdf(-hi) - std_normal_cdf(lo)
    }
}

/// Mean of the mixture conditioned on `[a, b]`.
///
/// Each component contributes its truncated-normal mean, weighted by its
/// prior weight times its mass inside the interval. Infinite bounds are allowed.
pub fn truncated_mixture_mean(pred: &MixturePrediction, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidInput(format!(
            "truncation bounds must satisfy a < b, got [{a}, {b}]"
        )));
    }
    let mut mass = 0.0;
    let mut moment = 0.0;
    for k in 0..pred.components() {
        let (mu, sigma) = (pred.mu[k], pred.sigma[k]);
        let lo = (a - mu) / sigma;
        let hi = (b - mu) / sigma;
        let z = std_normal_mass(lo, hi);
        if z <= 0.0 {
            continue;
        }
        let w = pred.pi[k] * z;
        mass += w;
        moment += w * (mu + sigma * (std_normal_pdf(lo) - std_normal_pdf(hi)) / z);
    }
    if !(mass >= 1e-300) {
        return Err(Error::NoMass { lo: a, hi: b });
    }
    Ok((moment / mass).clamp(a, b))
}

/// SCH expressed in minutes.
pub fn sch_minutes(hours: f64) -> f64 {
    hours * 60.0
}

/// Per-feature z-scoring fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(width: usize) -> Self {
        Standardizer {
            mean: vec![0.0; width],
            scale: vec![1.0; width],
        }
    }

    /// Fit on the rows of `x`; constant columns keep unit scale.
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut mean = vec![0.0; x.ncols()];
        let mut scale = vec![1.0; x.ncols()];
        for (j, col) in x.columns().into_iter().enumerate() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            mean[j] = m;
            if var.sqrt() > 1e-12 {
                scale[j] = var.sqrt();
            }
        }
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }
}

/// A trained standard coder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdnModel {
    pub input_width: usize,
    pub hidden: Vec<usize>,
    pub components: usize,
    pub sigma_floor: f64,
    /// Hidden layers followed by the `3K`-wide head: logits, means, log-spreads.
    pub layers: Vec<Dense>,
    pub standardizer: Standardizer,
    /// Content hash of the token dictionary the features were built with.
    pub dictionary_hash: Option<String>,
    pub training: Option<TrainingLog>,
}

impl MdnModel {
    /// All-zero weights with identity standardization.
    pub fn zeros(input_width: usize, hidden: &[usize], components: usize, sigma_floor: f64) -> Self {
        let mut widths = vec![input_width];
        widths.extend(hidden);
        widths.push(3 * components);
        MdnModel {
            input_width,
            hidden: hidden.to_vec(),
            components,
            sigma_floor,
            layers: widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            standardizer: Standardizer::identity(input_width),
            dictionary_hash: None,
            training: None,
        }
    }

    /// He-initialized hidden layers; a small-weight head whose mean biases are
    /// spread evenly over `mean_range`.
    pub fn init<R: Rng>(
        input_width: usize,
        hidden: &[usize],
        components: usize,
        sigma_floor: f64,
        mean_range: (f64, f64),
        rng: &mut R,
    ) -> Self {
        let mut m = Self::zeros(input_width, hidden, components, sigma_floor);
        let last = m.layers.len() - 1;
        for (i, layer) in m.layers.iter_mut().enumerate() {
            let fan_in = layer.inputs() as f64;
            let std = if i == last {
                0.1 / fan_in.sqrt()
            } else {
                (2.0 / fan_in).sqrt()
            };
            *layer = Dense::random(layer.inputs(), layer.outputs(), std, rng);
        }
        let k = components;
        let head = &mut m.layers[last].bias;
        for j in 0..k {
            let frac = if k > 1 { j as f64 / (k - 1) as f64 } else { 0.5 };
            head[k + j] = mean_range.0 + frac * (mean_range.1 - mean_range.0);
            head[2 * k + j] = (0.25f64).ln();
        }
        m
    }

    pub fn num_params(&self) -> usize {
        network::num_params(&self.layers)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        network::to_flat(&self.layers)
    }

    pub fn set_flat(&mut self, v: &[f64]) {
        network::set_flat(&mut self.layers, v)
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.input_width {
            return Err(Error::WidthMismatch {
                expected: self.input_width,
                got: width,
            });
        }
        Ok(())
    }

    /// Standardized model input for one change.
    pub fn prepare(&self, features: &ChangeFeatures) -> Result<Vec<f64>> {
        self.check_width(features.width())?;
        let mut x = features.transformed();
        self.standardizer.apply(&mut x);
        Ok(x)
    }

    fn mixtures(&self, x: ArrayView2<f64>) -> Vec<MixturePrediction> {
        let heads = network::forward(&self.layers, x);
        heads
            .outer_iter()
            .map(|row| {
                let (pi, mu, sigma) = network::heads_to_mixture(row, self.components, self.sigma_floor);
                MixturePrediction { pi, mu, sigma }
            })
            .collect()
    }

    /// Mixture for inputs that are already transformed and standardized.
    pub fn forward_prepared(&self, x: &[f64]) -> Result<MixturePrediction> {
        self.check_width(x.len())?;
        let x = ArrayView2::from_shape((1, x.len()), x).expect("row shape");
        Ok(self.mixtures(x).remove(0))
    }

    pub fn forward(&self, features: &ChangeFeatures) -> Result<MixturePrediction> {
        let x = self.prepare(features)?;
        self.forward_prepared(&x)
    }

    /// Mixtures for many changes, evaluated in parallel.
    pub fn forward_batch(&self, features: &[ChangeFeatures]) -> Result<Vec<MixturePrediction>> {
        let rows = features.iter().map(|f| self.prepare(f)).collect::<Result<Vec<_>>>()?;
        Ok(self.forward_rows(&rows))
    }

    pub(crate) fn forward_rows(&self, rows: &[Vec<f64>]) -> Vec<MixturePrediction> {
        rows.par_chunks(256)
            .flat_map_iter(|chunk| {
                let x = Array2::from_shape_fn((chunk.len(), self.input_width), |(i, j)| chunk[i][j]);
                self.mixtures(x.view())
            })
            .collect()
    }

    /// Mean NLL of `y` given standardized rows `x`, and its gradient in [`to_flat`](Self::to_flat) order.
    pub fn loss_and_gradient(&self, x: ArrayView2<f64>, y: &[f64]) -> (f64, Vec<f64>) {
        let n = x.nrows().max(1) as f64;
        let (total, grads) = network::loss_and_gradient(&self.layers, x, y, self.components, self.sigma_floor);
        let flat = network::to_flat(&grads).into_iter().map(|g| g / n).collect();
        (total / n, flat)
    }

    pub fn mean_loss(&self, x: ArrayView2<f64>, y: &[f64]) -> f64 {
        let n = x.nrows().max(1) as f64;
        let preds = self.mixtures(x);
        preds.iter().zip(y).map(|(p, &t)| mdn_loss(p, t)).sum::<f64>() / n
    }

    /// Truncated-mean prediction in hours.
    pub fn predict_sch(&self, features: &ChangeFeatures, bounds: (f64, f64)) -> Result<f64> {
        truncated_mixture_mean(&self.forward(features)?, bounds.0, bounds.1)
    }

    pub fn predict_sch_batch(&self, features: &[ChangeFeatures], bounds: (f64, f64)) -> Result<Vec<f64>> {
        self.forward_batch(features)?
            .par_iter()
            .map(|m| truncated_mixture_mean(m, bounds.0, bounds.1))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: MdnModel = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<mdn model>".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let expected = 3 * m.components;
        let shapes_ok = m.layers.first().is_some_and(|l| l.inputs() == m.input_width)
            && m.layers.last().is_some_and(|l| l.outputs() == expected)
            && m.layers.windows(2).all(|w| w[0].outputs() == w[1].inputs())
            && m.standardizer.mean.len() == m.input_width;
        if !shapes_ok {
            return Err(Error::InvalidInput("model layer shapes are inconsistent".into()));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            other => other,
        })
    }
}
