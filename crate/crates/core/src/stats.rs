//! Correlations and significance tests used by the analyses.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, Discrete, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub method: CorrelationMethod,
    pub coefficient: f64,
    pub n: usize,
    /// Two-sided t-test p-value; absent below three points.
    pub p_value: Option<f64>,
    /// Least-squares slope of y on x (Pearson only).
    pub slope: Option<f64>,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Degenerate("need at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value".into()));
    }
    Ok(())
}

fn correlation_p_value(r: f64, n: usize) -> Option<f64> {
    if n < 3 {
        return None;
    }
    if r.abs() >= 1.0 {
        return Some(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    Some((2.0 * dist.sf(t.abs())).min(1.0))
}

/// Product-moment correlation and least-squares slope.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationReport> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("constant vector".into()));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(CorrelationReport {
        method: CorrelationMethod::Pearson,
        coefficient: r,
        n: x.len(),
        p_value: correlation_p_value(r, x.len()),
        slope: Some(sxy / sxx),
    })
}

/// 1-based ranks with ties sharing their average rank.
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Rank correlation: Pearson on mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationReport> {
    check_pair(x, y)?;
    let r = pearson(&mid_ranks(x), &mid_ranks(y))?;
    Ok(CorrelationReport {
        method: CorrelationMethod::Spearman,
        slope: None,
        ..r
    })
}

/// Exact two-sided binomial test: total probability of outcomes no more likely than the observed one.
pub fn binomial_sign_test(successes: u64, n: u64, p0: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("binomial test needs n > 0".into()));
    }
    if successes > n {
        return Err(Error::InvalidInput(format!("{successes} successes out of {n}")));
    }
    let dist = Binomial::new(p0, n).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let observed = dist.pmf(successes);
    let p: f64 = (0..=n)
        .map(|k| dist.pmf(k))
        .filter(|&q| q <= observed * (1.0 + 1e-7))
        .sum();
    Ok(p.min(1.0))
}

/// Probability under Binomial(n, p0) that the outcome lands in `set`.
pub fn binomial_set_probability(set: &[u64], n: u64, p0: f64) -> Result<f64> {
    let dist = Binomial::new(p0, n).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(set.iter().filter(|&&k| k <= n).map(|&k| dist.pmf(k)).sum())
}

const BOOTSTRAP_CHUNK: usize = 1000;

fn resample_mean<R: Rng>(xs: &[f64], rng: &mut R) -> f64 {
    (0..xs.len()).map(|_| xs[rng.random_range(0..xs.len())]).sum::<f64>() / xs.len() as f64
}

/// Two-sided bootstrap p-value for `mean(ab) − mean(ba) = 0`.
///
/// Each resample redraws both samples with replacement; the p-value is twice
/// the smaller fraction of resampled differences on either side of zero.
pub fn bootstrap_mean_difference(ab: &[f64], ba: &[f64], resamples: usize, seed: u64) -> Result<f64> {
    if ab.is_empty() || ba.is_empty() || resamples == 0 {
        return Err(Error::InvalidInput("bootstrap needs two nonempty samples".into()));
    }
    let chunks = resamples.div_ceil(BOOTSTRAP_CHUNK);
    let (le, ge) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = crate::seed::rng(crate::seed::derive(seed, &["bootstrap", &c.to_string()]));
            let count = BOOTSTRAP_CHUNK.min(resamples - c * BOOTSTRAP_CHUNK);
            let (mut le, mut ge) = (0usize, 0usize);
            for _ in 0..count {
                let d = resample_mean(ab, &mut rng) - resample_mean(ba, &mut rng);
                le += usize::from(d <= 0.0);
                ge += usize::from(d >= 0.0);
            }
            (le, ge)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let frac = le.min(ge) as f64 / resamples as f64;
    Ok((2.0 * frac).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedRankResult {
    /// Sum of ranks of positive deltas.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Nonzero deltas used.
    pub n: usize,
    pub z: f64,
    pub p_value: f64,
}

/// Paired Wilcoxon signed-rank test with a tie-corrected normal approximation.
///
/// Zero deltas are dropped; tied magnitudes share their average rank.
pub fn wilcoxon_signed_rank(deltas: &[f64]) -> Result<SignedRankResult> {
    let nonzero: Vec<f64> = deltas.iter().copied().filter(|d| *d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::Degenerate("all paired differences are zero".into()));
    }
    if nonzero.len() < 6 {
        return Err(Error::InvalidInput(format!(
            "signed-rank test needs at least 6 nonzero differences, got {}",
            nonzero.len()
        )));
    }
    let mags: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = mid_ranks(&mags);
    let w_plus: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = nonzero.len() as f64;
    let total = n * (n + 1.0) / 2.0;
    let mut sorted = mags.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    for run in sorted.chunk_by(|a, b| a == b) {
        let t = run.len() as f64;
        ties += t * t * t - t;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    let z = if var > 0.0 {
        (w_plus - total / 2.0) / var.sqrt()
    } else {
        0.0
    };
    Ok(SignedRankResult {
        w_plus,
        w_minus: total - w_plus,
        n: nonzero.len(),
        z,
        p_value: libm::erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0),
    })
}

/// Coefficient of determination of a straight-line fit: the squared Pearson r.
pub fn r_squared(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(x, y).map(|r| r.coefficient * r.coefficient)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}
