use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::CodingPosterior;
use crate::stats::binomial_set_probability;

/// Positive-part counts that flag a decile as systematically corrected.
pub const DEFAULT_FLAG_COUNTS: [u64; 4] = [0, 1, 9, 10];
/// False-positive rate quoted for the flag rule in the original study, kept for reference.
pub const REFERENCE_FALSE_POSITIVE_RATE: f64 = 0.0552;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionConfig {
    pub parts: usize,
    pub deciles: usize,
    pub flag_counts: Vec<u64>,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig {
            parts: 10,
            deciles: 10,
            flag_counts: DEFAULT_FLAG_COUNTS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileCorrection {
    pub decile: usize,
    /// Mean of `smoothed − filtered` per window part; `None` where the part has no minute in this decile.
    pub part_means: Vec<Option<f64>>,
    /// Minutes in this decile across the whole window.
    pub minutes: usize,
    /// Mean correction over the whole window.
    pub mean_correction: Option<f64>,
    /// Parts with a positive mean; `None` when any part lacks data.
    pub positive_parts: Option<u64>,
    pub flagged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub deciles: Vec<DecileCorrection>,
    /// Per window part, how many deciles have a positive mean correction.
    pub positive_deciles_per_part: Vec<usize>,
    pub tested: usize,
    pub flagged: usize,
    /// Exact probability that an unbiased decile is flagged by the rule.
    pub expected_false_positive_rate: f64,
    pub reference_false_positive_rate: f64,
}

/// Decile of a live probability, the top decile including 1.
pub fn decile_of(p: f64, deciles: usize) -> usize {
    ((p * deciles as f64).floor() as usize).min(deciles - 1)
}

/// Compare hindsight and live coding probabilities across window parts.
///
/// Minutes are grouped by the decile of their live probability; within each
/// of `parts` equal slices of the window the mean correction `smoothed −
/// filtered` is taken. A decile is flagged when the number of parts with a
/// positive mean is in the configured set.
pub fn probability_correction_test(posterior: &CodingPosterior, config: &CorrectionConfig) -> Result<CorrectionReport> {
    let n = posterior.smoothed.len();
    if n == 0 || posterior.filtered.len() != n {
        return Err(Error::InvalidInput("posterior is empty or inconsistent".into()));
    }
    if config.parts == 0 || config.deciles == 0 {
        return Err(Error::InvalidInput("parts and deciles must be positive".into()));
    }
    let (p, d) = (config.parts, config.deciles);
    let mut sums = vec![vec![0.0; p]; d];
    let mut counts = vec![vec![0usize; p]; d];
    for t in 0..n {
        let part = t * p / n;
        let dec = decile_of(posterior.filtered[t], d);
        sums[dec][part] += posterior.smoothed[t] - posterior.filtered[t];
        counts[dec][part] += 1;
    }
    let mut deciles = Vec::with_capacity(d);
    let mut positive_deciles_per_part = vec![0usize; p];
    for dec in 0..d {
        let part_means: Vec<Option<f64>> = (0..p)
            .map(|k| (counts[dec][k] > 0).then(|| sums[dec][k] / counts[dec][k] as f64))
            .collect();
        for (k, m) in part_means.iter().enumerate() {
            if m.is_some_and(|v| v > 0.0) {
                positive_deciles_per_part[k] += 1;
            }
        }
        let minutes: usize = counts[dec].iter().sum();
        let positive_parts = part_means
            .iter()
            .all(Option::is_some)
            .then(|| part_means.iter().filter(|m| m.is_some_and(|v| v > 0.0)).count() as u64);
        deciles.push(DecileCorrection {
            decile: dec,
            minutes,
            mean_correction: (minutes > 0).then(|| sums[dec].iter().sum::<f64>() / minutes as f64),
            flagged: positive_parts.map(|c| config.flag_counts.contains(&c)),
            part_means,
            positive_parts,
        });
    }
    let tested = deciles.iter().filter(|x| x.flagged.is_some()).count();
    let flagged = deciles.iter().filter(|x| x.flagged == Some(true)).count();
    Ok(CorrectionReport {
        deciles,
        positive_deciles_per_part,
        tested,
        flagged,
        expected_false_positive_rate: binomial_set_probability(&config.flag_counts, p as u64, 0.5)?,
        reference_false_positive_rate: REFERENCE_FALSE_POSITIVE_RATE,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn posterior(smoothed: Vec<f64>, filtered: Vec<f64>) -> CodingPosterior {
        CodingPosterior {
            smoothed,
            filtered,
            log_likelihood: 0.0,
        }
    }

    #[test]
    fn identical_curves_give_zero_corrections() {
        let f: Vec<f64> = (0..1000).map(|i| (i % 97) as f64 / 96.0).collect();
        let r = probability_correction_test(&posterior(f.clone(), f), &CorrectionConfig::default()).unwrap();
        for d in &r.deciles {
            assert!(d.part_means.iter().flatten().all(|&m| m == 0.0));
            assert_eq!(d.positive_parts, Some(0));
            assert_eq!(d.flagged, Some(true));
        }
        assert_relative_eq!(r.expected_false_positive_rate, 22.0 / 1024.0, epsilon = 1e-14);
        assert_eq!(r.reference_false_positive_rate, 0.0552);
    }

    #[test]
    fn single_minute_window() {
        let r = probability_correction_test(&posterior(vec![0.3], vec![0.3]), &CorrectionConfig::default()).unwrap();
        assert_eq!(r.deciles[3].minutes, 1);
        assert_eq!(r.deciles[3].mean_correction, Some(0.0));
        assert_eq!(r.tested, 0);
    }

    #[test]
    fn counts_positive_parts_per_decile() {
        // Live probability 0.55 everywhere; hindsight higher in the first 7 parts.
        let n = 100;
        let filtered = vec![0.55; n];
        let smoothed: Vec<f64> = (0..n).map(|t| if t < 70 { 0.6 } else { 0.5 }).collect();
        let r = probability_correction_test(&posterior(smoothed, filtered), &CorrectionConfig::default()).unwrap();
        let d = &r.deciles[5];
        assert_eq!(d.positive_parts, Some(7));
        assert_eq!(d.flagged, Some(false));
        assert!(r.deciles[0].positive_parts.is_none());
        assert_eq!(r.tested, 1);
        assert_eq!(r.positive_deciles_per_part, [1, 1, 1, 1, 1, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn top_decile_includes_certainty() {
        assert_eq!(decile_of(1.0, 10), 9);
        assert_eq!(decile_of(0.0, 10), 0);
        assert_eq!(decile_of(0.35, 10), 3);
    }
}
