use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdn::MdnModel;
use crate::stats::{bootstrap_mean_difference, mean, quantile, wilcoxon_signed_rank};
use crate::tokenizer::{ChangeFeatures, TokenDictionary};

const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadLevel {
    pub files: u32,
    pub mean_sch_hours: f64,
    /// Mean change against each change's factual prediction, in seconds.
    pub mean_delta_vs_factual_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadStep {
    pub from_files: u32,
    pub to_files: u32,
    pub mean_delta_seconds: f64,
    pub q25_seconds: f64,
    pub q75_seconds: f64,
    /// Paired signed-rank p-value; absent with fewer than 6 nonzero deltas.
    pub wilcoxon_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileSpreadReport {
    pub eligible: usize,
    pub levels: Vec<SpreadLevel>,
    pub steps: Vec<SpreadStep>,
    /// Mean of all one-file steps, in seconds.
    pub mean_per_file_seconds: f64,
}

/// Re-predict every change as if spread over 1..=`max_files` files, token features fixed.
///
/// Changes with churn below `max_files` lines are skipped, since they could
/// not touch that many files.
pub fn file_spread_counterfactual(
    model: &MdnModel,
    changes: &[ChangeFeatures],
    max_files: u32,
    bounds: (f64, f64),
) -> Result<FileSpreadReport> {
    if max_files < 2 {
        return Err(Error::InvalidInput("file spread needs max_files ≥ 2".into()));
    }
    let eligible: Vec<&ChangeFeatures> = changes.iter().filter(|c| c.churn() >= max_files).collect();
    if eligible.is_empty() {
        return Err(Error::EmptySelection(format!("no change with churn ≥ {max_files}")));
    }
    let factual: Vec<ChangeFeatures> = eligible.iter().map(|c| (*c).clone()).collect();
    let base = model.predict_sch_batch(&factual, bounds)?;
    let mut per_k = Vec::with_capacity(max_files as usize);
    for k in 1..=max_files {
        let spread: Vec<ChangeFeatures> = eligible.iter().map(|c| c.with_files_touched(k)).collect();
        per_k.push(model.predict_sch_batch(&spread, bounds)?);
    }
    let levels = per_k
        .iter()
        .enumerate()
        .map(|(i, preds)| SpreadLevel {
            files: i as u32 + 1,
            mean_sch_hours: mean(preds),
            mean_delta_vs_factual_seconds: mean(
                &preds
                    .iter()
                    .zip(&base)
                    .map(|(p, b)| (p - b) * SECONDS_PER_HOUR)
                    .collect::<Vec<_>>(),
            ),
        })
        .collect();
    let mut steps = Vec::new();
    let mut all = Vec::new();
    for i in 0..per_k.len() - 1 {
        let deltas: Vec<f64> = per_k[i + 1]
            .iter()
            .zip(&per_k[i])
            .map(|(b, a)| (b - a) * SECONDS_PER_HOUR)
            .collect();
        steps.push(SpreadStep {
            from_files: i as u32 + 1,
            to_files: i as u32 + 2,
            mean_delta_seconds: mean(&deltas),
            q25_seconds: quantile(&deltas, 0.25),
            q75_seconds: quantile(&deltas, 0.75),
            wilcoxon_p: wilcoxon_signed_rank(&deltas).ok().map(|w| w.p_value),
        });
        all.extend(deltas);
    }
    Ok(FileSpreadReport {
        eligible: eligible.len(),
        levels,
        steps,
        mean_per_file_seconds: mean(&all),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// The token present in the selected changes.
    pub from_token: String,
    /// The token it is swapped for.
    pub to_token: String,
    pub mean_delta_seconds: f64,
    pub p_value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSwapReport {
    /// Changes with `a` but no `b`, after moving the `a` count onto `b`.
    pub a_to_b: CostReport,
    pub b_to_a: CostReport,
}

fn swap_deltas(
    model: &MdnModel,
    changes: &[&ChangeFeatures],
    a: usize,
    b: usize,
    bounds: (f64, f64),
) -> Result<Vec<f64>> {
    let orig: Vec<ChangeFeatures> = changes.iter().map(|c| (*c).clone()).collect();
    let swapped: Vec<ChangeFeatures> = changes.iter().map(|c| c.swapped(a, b)).collect();
    let before = model.predict_sch_batch(&orig, bounds)?;
    let after = model.predict_sch_batch(&swapped, bounds)?;
    Ok(after
        .iter()
        .zip(&before)
        .map(|(x, y)| (x - y) * SECONDS_PER_HOUR)
        .collect())
}

/// Mean SCH change from exchanging two tokens' counts, in both directions.
///
/// The `a → b` run uses changes containing `a` but not `b`; the reverse run
/// the mirror selection. Significance compares the two delta samples by
/// bootstrap.
#[allow(clippy::too_many_arguments)]
pub fn token_swap_cost(
    model: &MdnModel,
    dict: &TokenDictionary,
    changes: &[ChangeFeatures],
    token_a: &str,
    token_b: &str,
    resamples: usize,
    seed: u64,
    bounds: (f64, f64),
) -> Result<TokenSwapReport> {
    let index = |t: &str| {
        dict.index_of(t)
            .ok_or_else(|| Error::InvalidInput(format!("token {t:?} is not in the dictionary")))
    };
    let (a, b) = (index(token_a)?, index(token_b)?);
    let select = |x: usize, y: usize| -> Vec<&ChangeFeatures> {
        changes
            .iter()
            .filter(|c| c.token_counts[x] > 0 && (x == y || c.token_counts[y] == 0))
            .collect()
    };
    let (sel_ab, sel_ba) = (select(a, b), select(b, a));
    if sel_ab.is_empty() || sel_ba.is_empty() {
        return Err(Error::EmptySelection(format!(
            "tokens {token_a:?}/{token_b:?}: {} changes with only {token_a:?}, {} with only {token_b:?}",
            sel_ab.len(),
            sel_ba.len()
        )));
    }
    let ab = swap_deltas(model, &sel_ab, a, b, bounds)?;
    let ba = swap_deltas(model, &sel_ba, b, a, bounds)?;
    let p = bootstrap_mean_difference(&ab, &ba, resamples, seed)?;
    let report = |from: &str, to: &str, d: &[f64]| CostReport {
        from_token: from.to_string(),
        to_token: to.to_string(),
        mean_delta_seconds: mean(d),
        p_value: p,
        n: d.len(),
    };
    Ok(TokenSwapReport {
        a_to_b: report(token_a, token_b, &ab),
        b_to_a: report(token_b, token_a, &ba),
    })
}
