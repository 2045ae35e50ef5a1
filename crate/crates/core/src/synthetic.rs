//! Synthetic code changes with planted coding-time effects.
//!
//! The mean coding time is a smooth function of the features:
//! `base + Σ effect_j · ln(1 + count_j) + lines · ln(1 + added) + per_file · (files − 1)`,
//! observed with Gaussian noise whose spread grows with the mean. Negative
//! draws are reflected at zero.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::tokenizer::ChangeFeatures;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeGenerator {
    /// Dictionary width D.
    pub tokens: usize,
    pub base_hours: f64,
    /// `(token slot, hours per unit of ln(1 + count))`.
    pub token_effects: Vec<(usize, f64)>,
    /// Hours per unit of `ln(1 + lines added)`.
    pub lines_hours: f64,
    /// Hours per file beyond the first.
    pub per_file_hours: f64,
    pub max_files: u32,
    /// Probability that a token slot is present in a change.
    pub token_presence: f64,
    pub noise_sd: f64,
    /// Extra noise spread per hour of mean.
    pub noise_slope: f64,
}

impl Default for ChangeGenerator {
    fn default() -> Self {
        ChangeGenerator {
            tokens: 20,
            base_hours: 0.05,
            token_effects: vec![(0, 0.06), (1, 0.04), (2, -0.02)],
            lines_hours: 0.04,
            per_file_hours: 0.0,
            max_files: 6,
            token_presence: 0.4,
            noise_sd: 0.02,
            noise_slope: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticChange {
    pub features: ChangeFeatures,
    pub mean_hours: f64,
    pub hours: f64,
}

impl ChangeGenerator {
    pub fn mean_hours(&self, f: &ChangeFeatures) -> f64 {
        let tokens: f64 = self
            .token_effects
            .iter()
            .map(|&(j, e)| e * (f.token_counts[j] as f64).ln_1p())
            .sum();
        let files = f.files_touched.saturating_sub(1) as f64;
        (self.base_hours + tokens + self.lines_hours * (f.lines_added as f64).ln_1p() + self.per_file_hours * files)
            .max(0.0)
    }

    pub fn sample_features<R: Rng>(&self, id: usize, rng: &mut R) -> ChangeFeatures {
        let mut f = ChangeFeatures::zeros(&format!("synthetic-{id}"), self.tokens);
        for c in f.token_counts.iter_mut() {
            if rng.random::<f64>() < self.token_presence {
                *c = rng.random_range(1..12);
            }
        }
        f.files_touched = rng.random_range(1..=self.max_files.max(1));
        f.lines_added = rng.random_range(1..120);
        f.lines_deleted = rng.random_range(0..60);
        f.total_tokens = f.token_counts.iter().sum::<u32>() + rng.random_range(0..200);
        f.whitespace_count = f.total_tokens / 2 + rng.random_range(0..100);
        f
    }

    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<SyntheticChange> {
        let unit = Normal::new(0.0, 1.0).expect("valid normal");
        (0..n)
            .map(|i| {
                let features = self.sample_features(i, rng);
                let mean_hours = self.mean_hours(&features);
                let sd = self.noise_sd + self.noise_slope * mean_hours;
                let hours = (mean_hours + sd * unit.sample(rng)).abs();
                SyntheticChange {
                    features,
                    mean_hours,
                    hours,
                }
            })
            .collect()
    }
}
