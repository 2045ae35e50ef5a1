use serde::{Deserialize, Serialize};

use super::net::{HmmParams, DEFAULT_EPSILON, DEFAULT_HIDDEN};
use super::timeline::DeveloperTimeline;
use super::PreparedTimeline;
use crate::error::{Error, Result};
use crate::optim::Adam;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub min_commits: usize,
    /// Stop after this many consecutive epochs of relative improvement below `tolerance`.
    pub patience: usize,
    pub tolerance: f64,
    pub init_start: f64,
    pub init_end: f64,
    pub init_commit: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: DEFAULT_HIDDEN,
            epsilon: DEFAULT_EPSILON,
            learning_rate: 1e-2,
            max_epochs: 800,
            min_commits: 50,
            patience: 20,
            tolerance: 1e-6,
            init_start: 0.01,
            init_end: 0.05,
            init_commit: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    Converged,
}

/// A trained per-author model with its window and training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    pub author: String,
    pub params: HmmParams,
    pub window_start: i64,
    pub window_len: usize,
    pub commits: usize,
    /// Log-likelihood after each optimizer step count, starting from the initialization.
    pub training_log: Vec<f64>,
    pub best_log_likelihood: f64,
    pub stop_reason: StopReason,
    pub config: TrainConfig,
}

/// Maximum-likelihood fit by gradient ascent through the forward–backward pass.
///
/// The returned parameters are the best evaluated during training, so the final
/// likelihood is never below the initial one.
pub fn train_hmm(timeline: &DeveloperTimeline, config: &TrainConfig) -> Result<HmmModel> {
    train_hmm_observed(timeline, config, |_, _, _| {})
}

/// [`train_hmm`] calling `observe(epoch, params, log_likelihood)` on the
/// parameters reached after `epoch` optimizer steps, including the last.
pub fn train_hmm_observed<F>(timeline: &DeveloperTimeline, config: &TrainConfig, mut observe: F) -> Result<HmmModel>
where
    F: FnMut(usize, &HmmParams, f64),
{
    let commits = timeline.commit_minutes.len();
    if commits < config.min_commits {
        return Err(Error::InsufficientCommits {
            author: timeline.author_id.clone(),
            got: commits,
            need: config.min_commits,
        });
    }
    let mut rng = crate::seed::rng(config.seed);
    let mut params = HmmParams::init(
        config.hidden,
        config.epsilon,
        config.init_start,
        config.init_end,
        config.init_commit,
        &mut rng,
    );
    let prep = PreparedTimeline::new(timeline);
    let mut flat = params.to_flat();
    let mut opt = Adam::new(flat.len(), config.learning_rate);
    let mut log = Vec::with_capacity(config.max_epochs + 1);
    let mut best = (f64::NEG_INFINITY, params.clone());
    let mut stalled = 0;
    let mut stop_reason = StopReason::MaxEpochs;
    for epoch in 0..=config.max_epochs {
        let last = epoch == config.max_epochs;
        let (ll, grad) = if last {
            (prep.log_likelihood(&params)?, Vec::new())
        } else {
            prep.gradient(&params)?
        };
        observe(epoch, &params, ll);
        if let Some(&prev) = log.last() {
            let gain: f64 = ll - prev;
            if gain < config.tolerance * f64::abs(prev) {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        log.push(ll);
        if ll > best.0 {
            best = (ll, params.clone());
        }
        if last {
            break;
        }
        if stalled >= config.patience {
            stop_reason = StopReason::Converged;
            break;
        }
        let descent: Vec<f64> = grad.iter().map(|g| -g).collect();
        opt.step(&mut flat, &descent);
        params.set_flat(&flat);
    }
    Ok(HmmModel {
        author: timeline.author_id.clone(),
        params: best.1,
        window_start: timeline.window_start,
        window_len: timeline.len,
        commits,
        training_log: log,
        best_log_likelihood: best.0,
        stop_reason,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_small_timelines() {
        let tl = DeveloperTimeline::new("a", 0, 100, vec![1, 5, 9]).unwrap();
        let err = train_hmm(&tl, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientCommits { got: 3, need: 50, .. }));
    }

    #[test]
    fn likelihood_never_decreases_overall() {
        let commits: Vec<usize> = (0..60).map(|i| i * 37 + (i * i) % 11).collect();
        let tl = DeveloperTimeline::new("a", 0, 2400, commits).unwrap();
        let cfg = TrainConfig {
            max_epochs: 40,
            hidden: 4,
            ..Default::default()
        };
        let m = train_hmm(&tl, &cfg).unwrap();
        assert!(m.best_log_likelihood >= m.training_log[0]);
        assert_eq!(m.training_log.len(), 41);
        let mut seen = Vec::new();
        train_hmm_observed(&tl, &cfg, |e, _, ll| seen.push((e, ll))).unwrap();
        assert_eq!(seen.len(), 41);
        assert_eq!(seen[40].1, m.training_log[40]);
        let again = train_hmm(&tl, &cfg).unwrap();
        assert_eq!(again, m);
    }
}
