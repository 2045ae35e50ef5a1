//! Neural hidden Markov model of a developer's coding activity.
//!
//! Each minute the developer is either coding or not. A commit can only be
//! emitted while coding, with a learned per-minute probability C. The start and
//! end transition probabilities S(t) and E(t) come from a small network over
//! clock features, which lets the chain learn daily and weekly habits and slow
//! drifts. Inference is exact forward–backward with per-step normalization.

mod chain;
mod net;
mod timeline;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use chain::{
    emission_prob, gradient as chain_gradient, log_likelihood as chain_log_likelihood, ChainGradient, ChainSchedule,
    CodingPosterior, Inference, State, CODING, NOT_CODING,
};
pub use net::{logistic, logit, HmmParams, DEFAULT_EPSILON, DEFAULT_HIDDEN, INPUTS};
pub use timeline::{
    minute_of_week, time_features, DeveloperTimeline, TimeFeatures, MAX_WINDOW_MINUTES, MINUTES_PER_DAY,
    MINUTES_PER_WEEK,
};
pub use train::{train_hmm, train_hmm_observed, HmmModel, StopReason, TrainConfig};

const CHUNK: usize = 4096;

pub fn transition_probs(params: &HmmParams, tf: &TimeFeatures) -> (f64, f64) {
    params.transition_probs(tf)
}

/// Per-minute transition schedule of `params` over a timeline's window.
pub fn schedule(params: &HmmParams, timeline: &DeveloperTimeline) -> ChainSchedule {
    let pairs: Vec<(f64, f64)> = (0..timeline.len)
        .into_par_iter()
        .with_min_len(CHUNK)
        .map(|t| params.transition_probs(&TimeFeatures::at(timeline.window_start, t, timeline.len)))
        .collect();
    let (start, end) = pairs.into_iter().unzip();
    ChainSchedule {
        start,
        end,
        commit: params.commit_prob(),
    }
}

pub fn infer(timeline: &DeveloperTimeline, params: &HmmParams) -> Result<Inference> {
    Inference::run(schedule(params, timeline), timeline.observations())
}

/// Smoothed and filtered coding probabilities for every minute of the window.
pub fn forward_backward(timeline: &DeveloperTimeline, params: &HmmParams) -> Result<CodingPosterior> {
    infer(timeline, params).map(|i| i.posterior())
}

/// Live-mode probabilities: P(coding at t | commits up to and including t).
pub fn filtered_probs(timeline: &DeveloperTimeline, params: &HmmParams) -> Result<Vec<f64>> {
    infer(timeline, params).map(|i| i.filtered())
}

/// Hours of expected coding over minutes `(a, b]`: the area under the smoothed curve.
pub fn expected_coding_time(posterior: &CodingPosterior, a: usize, b: usize) -> Result<f64> {
    if b >= posterior.smoothed.len() || a > b {
        return Err(Error::OutOfRange {
            index: b,
            len: posterior.smoothed.len(),
        });
    }
    if a == b {
        return Ok(0.0);
    }
    Ok(posterior.smoothed[a + 1..=b].iter().sum::<f64>() / 60.0)
}

/// Posterior draws of coding hours in `(a, b]`, reproducible for a given seed.
pub fn sample_coding_times_with(inference: &Inference, a: usize, b: usize, n: usize, seed: u64) -> Vec<f64> {
    if a >= b {
        return vec![0.0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| inference.sample_coding_minutes(a + 1, b, &mut rng) as f64 / 60.0)
        .collect()
}

pub fn sample_coding_times(
    timeline: &DeveloperTimeline,
    params: &HmmParams,
    interval: (usize, usize),
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let (a, b) = interval;
    if b >= timeline.len || a > b {
        return Err(Error::OutOfRange {
            index: b,
            len: timeline.len,
        });
    }
    let inf = infer(timeline, params)?;
    Ok(sample_coding_times_with(&inf, a, b, n, seed))
}

/// Precomputed clock features for repeated gradient evaluations.
pub struct PreparedTimeline<'a> {
    pub timeline: &'a DeveloperTimeline,
    features: Vec<TimeFeatures>,
}

impl<'a> PreparedTimeline<'a> {
    pub fn new(timeline: &'a DeveloperTimeline) -> Self {
        let features = (0..timeline.len)
            .map(|t| TimeFeatures::at(timeline.window_start, t, timeline.len))
            .collect();
        PreparedTimeline { timeline, features }
    }

    fn schedule(&self, params: &HmmParams) -> ChainSchedule {
        let pairs: Vec<(f64, f64)> = self
            .features
            .par_iter()
            .with_min_len(CHUNK)
            .map(|x| params.transition_probs(x))
            .collect();
        let (start, end) = pairs.into_iter().unzip();
        ChainSchedule {
            start,
            end,
            commit: params.commit_prob(),
        }
    }

    pub fn log_likelihood(&self, params: &HmmParams) -> Result<f64> {
        chain_log_likelihood(&self.schedule(params), self.timeline.observations())
    }

    /// Log-likelihood and its gradient in [`HmmParams::to_flat`] order.
    pub fn gradient(&self, params: &HmmParams) -> Result<(f64, Vec<f64>)> {
        let g = chain_gradient(&self.schedule(params), self.timeline.observations())?;
        let h = params.hidden;
        let n_w1 = h * INPUTS;
        let n_params = params.num_params();
        // Fixed chunking keeps the floating-point summation order independent of threads.
        let partials: Vec<Vec<f64>> = self
            .features
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(ci, xs)| {
                let mut acc = vec![0.0; n_params];
                let (w1g, rest) = acc.split_at_mut(n_w1);
                let (b1g, rest) = rest.split_at_mut(h);
                let (w2g, rest) = rest.split_at_mut(2 * h);
                let mut dh = vec![0.0; h];
                for (k, x) in xs.iter().enumerate() {
                    let t = ci * CHUNK + k;
                    let tr = params.trace(x);
                    let gz = [
                        g.d_start[t] * params.clamp_slope(tr.out[0]),
                        g.d_end[t] * params.clamp_slope(tr.out[1]),
                    ];
                    rest[0] += gz[0];
                    rest[1] += gz[1];
                    for j in 0..h {
                        w2g[j] += gz[0] * tr.hidden[j];
                        w2g[h + j] += gz[1] * tr.hidden[j];
                        dh[j] = (gz[0] * params.w2[j] + gz[1] * params.w2[h + j]) * net::tanh_slope(tr.hidden[j]);
                    }
                    for j in 0..h {
                        b1g[j] += dh[j];
                        for i in 0..INPUTS {
                            w1g[j * INPUTS + i] += dh[j] * x.0[i];
                        }
                    }
                }
                acc
            })
            .collect();
        let mut grad = vec![0.0; n_params];
        for p in partials {
            for (a, b) in grad.iter_mut().zip(p) {
                *a += b;
            }
        }
        grad[n_params - 1] = g.d_commit * params.clamp_slope(params.commit_logit);
        Ok((g.log_likelihood, grad))
    }
}
