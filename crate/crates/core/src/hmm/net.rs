use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::timeline::TimeFeatures;

pub const INPUTS: usize = 5;
pub const DEFAULT_HIDDEN: usize = 16;
pub const DEFAULT_EPSILON: f64 = 1e-4;

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Weights of the 5 → H (tanh) → 2 transition network plus the commit logit.
///
/// Output 0 drives the start-coding probability S, output 1 the end-coding
/// probability E. Every probability is squashed into `[ε, 1 − ε]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmParams {
    pub hidden: usize,
    /// Row-major `hidden × 5`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Row-major `2 × hidden`.
    pub w2: Vec<f64>,
    pub b2: [f64; 2],
    pub commit_logit: f64,
    pub epsilon: f64,
}

/// Hidden activations and raw outputs of one network evaluation.
pub(crate) struct NetTrace {
    pub hidden: Vec<f64>,
    pub out: [f64; 2],
}

impl HmmParams {
    pub fn zeros(hidden: usize, epsilon: f64) -> Self {
        HmmParams {
            hidden,
            w1: vec![0.0; hidden * INPUTS],
            b1: vec![0.0; hidden],
            w2: vec![0.0; 2 * hidden],
            b2: [0.0; 2],
            commit_logit: 0.0,
            epsilon,
        }
    }

    /// Random first layer, small second layer, output biases at the given S, E and C.
    pub fn init<R: Rng>(hidden: usize, epsilon: f64, start: f64, end: f64, commit: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(hidden, epsilon);
        let w1 = Normal::new(0.0, 1.0).expect("valid normal");
        let w2 = Normal::new(0.0, 0.1).expect("valid normal");
        p.w1.iter_mut().for_each(|w| *w = w1.sample(rng));
        p.b1.iter_mut().for_each(|b| *b = w1.sample(rng) * 0.5);
        p.w2.iter_mut().for_each(|w| *w = w2.sample(rng));
        p.b2 = [p.logit_for(start), p.logit_for(end)];
        p.commit_logit = p.logit_for(commit);
        p
    }

    pub fn clamp(&self, raw: f64) -> f64 {
        self.epsilon + (1.0 - 2.0 * self.epsilon) * logistic(raw)
    }

    /// Derivative of [`clamp`](Self::clamp) with respect to its argument.
    pub fn clamp_slope(&self, raw: f64) -> f64 {
        let s = logistic(raw);
        (1.0 - 2.0 * self.epsilon) * s * (1.0 - s)
    }

    /// Pre-clamp value that maps to probability `p`.
    pub fn logit_for(&self, p: f64) -> f64 {
        logit((p - self.epsilon) / (1.0 - 2.0 * self.epsilon))
    }

    /// Per-minute commit probability while coding.
    pub fn commit_prob(&self) -> f64 {
        self.clamp(self.commit_logit)
    }

    pub(crate) fn trace(&self, x: &TimeFeatures) -> NetTrace {
        let h = self.hidden;
        let mut hidden = Vec::with_capacity(h);
        for j in 0..h {
            let row = &self.w1[j * INPUTS..(j + 1) * INPUTS];
            let a: f64 = self.b1[j] + row.iter().zip(&x.0).map(|(w, v)| w * v).sum::<f64>();
            hidden.push(a.tanh());
        }
        let mut out = self.b2;
        for (k, o) in out.iter_mut().enumerate() {
            *o += self.w2[k * h..(k + 1) * h]
                .iter()
                .zip(&hidden)
                .map(|(w, v)| w * v)
                .sum::<f64>();
        }
        NetTrace { hidden, out }
    }

    /// Start-coding and end-coding probabilities `(S, E)` for one minute.
    pub fn transition_probs(&self, x: &TimeFeatures) -> (f64, f64) {
        let t = self.trace(x);
        (self.clamp(t.out[0]), self.clamp(t.out[1]))
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 2 + 1
    }

    /// Parameters as one flat vector: w1, b1, w2, b2, commit logit.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.extend(self.b2);
        v.push(self.commit_logit);
        v
    }

    pub fn set_flat(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.num_params(), "flat parameter length");
        let (a, rest) = v.split_at(self.w1.len());
        self.w1.copy_from_slice(a);
        let (a, rest) = rest.split_at(self.b1.len());
        self.b1.copy_from_slice(a);
        let (a, rest) = rest.split_at(self.w2.len());
        self.w2.copy_from_slice(a);
        self.b2 = [rest[0], rest[1]];
        self.commit_logit = rest[2];
    }
}

/// `tanh` derivative given the activation value.
pub(crate) fn tanh_slope(h: f64) -> f64 {
    1.0 - h * h
}
