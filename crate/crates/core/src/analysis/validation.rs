use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{pearson, spearman, CorrelationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YyBin {
    pub count: usize,
    pub mean_predicted: f64,
    pub mean_actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YyReport {
    pub bins_requested: usize,
    pub bins: Vec<YyBin>,
    /// Squared Pearson correlation of the bin means.
    pub r_squared: f64,
}

/// Sort by prediction, cut into equal-count bins and correlate the bin means.
///
/// With fewer points than bins, one point per bin is used.
pub fn yy_binning(predicted: &[f64], actual: &[f64], bins: usize) -> Result<YyReport> {
    if predicted.len() != actual.len() || predicted.is_empty() || bins == 0 {
        return Err(Error::InvalidInput(
            "yy binning needs equal, nonempty inputs and bins > 0".into(),
        ));
    }
    let n = predicted.len();
    let used = if n < bins {
        log::warn!("{n} holdout points for {bins} bins; using {n} bins");
        n
    } else {
        bins
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| predicted[a].total_cmp(&predicted[b]).then(a.cmp(&b)));
    let out: Vec<YyBin> = (0..used)
        .map(|i| {
            let idx = &order[i * n / used..(i + 1) * n / used];
            let c = idx.len() as f64;
            YyBin {
                count: idx.len(),
                mean_predicted: idx.iter().map(|&j| predicted[j]).sum::<f64>() / c,
                mean_actual: idx.iter().map(|&j| actual[j]).sum::<f64>() / c,
            }
        })
        .collect();
    let xs: Vec<f64> = out.iter().map(|b| b.mean_predicted).collect();
    let ys: Vec<f64> = out.iter().map(|b| b.mean_actual).collect();
    let r = pearson(&xs, &ys)?.coefficient;
    Ok(YyReport {
        bins_requested: bins,
        bins: out,
        r_squared: r * r,
    })
}

/// Surface metrics and model outputs for one holdout change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeOutcome {
    pub files_touched: f64,
    pub whitespace: f64,
    pub tokens: f64,
    pub lines_added: f64,
    pub lines_deleted: f64,
    pub prediction: f64,
    pub coding_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorCorrelation {
    pub predictor: String,
    pub vs_coding_time: CorrelationReport,
    pub vs_prediction: CorrelationReport,
}

/// Rank correlations of simple size measures and the model prediction with
/// coding time and with the prediction itself.
pub fn predictor_correlations(rows: &[ChangeOutcome]) -> Result<Vec<PredictorCorrelation>> {
    let col = |f: fn(&ChangeOutcome) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let time = col(|r| r.coding_time);
    let pred = col(|r| r.prediction);
    let predictors: [(&str, Vec<f64>); 6] = [
        ("files touched", col(|r| r.files_touched)),
        ("spaces", col(|r| r.whitespace)),
        ("tokens", col(|r| r.tokens)),
        ("lines added + deleted", col(|r| r.lines_added + r.lines_deleted)),
        ("lines added", col(|r| r.lines_added)),
        ("standard coder prediction", pred.clone()),
    ];
    predictors
        .into_iter()
        .map(|(name, x)| {
            Ok(PredictorCorrelation {
                predictor: name.to_string(),
                vs_coding_time: spearman(&x, &time)?,
                vs_prediction: spearman(&x, &pred)?,
            })
        })
        .collect()
}

/// One commit as seen by the project-level study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectCommit {
    pub project: String,
    pub author: String,
    /// HMM expected coding time; absent for commits without an interval.
    pub expected_hours: Option<f64>,
    pub sch_hours: Option<f64>,
    pub lines_added: f64,
    pub churn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRow {
    pub project: String,
    pub main_contributors: Vec<String>,
    pub test_commits: usize,
    pub mean_expected_hours: f64,
    pub mean_sch_hours: f64,
    pub mean_lines_added: f64,
    pub mean_churn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectStudy {
    pub projects: Vec<ProjectRow>,
    pub standard_coder: CorrelationReport,
    pub lines_added: CorrelationReport,
    pub churn: CorrelationReport,
}

/// Smallest set of authors, largest first, covering at least `share` of the commits.
pub fn main_contributors<'a>(authors: impl Iterator<Item = &'a str>, share: f64) -> BTreeSet<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in authors {
        *counts.entry(a).or_default() += 1;
    }
    let total: usize = counts.values().sum();
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut out = BTreeSet::new();
    let mut covered = 0;
    for (a, c) in ranked {
        if covered as f64 >= share * total as f64 {
            break;
        }
        covered += c;
        out.insert(a.to_string());
    }
    out
}

/// Per-project mean coding time versus mean SCH, with size baselines.
///
/// Only commits by a project's main contributors (80% commit coverage) that
/// have both estimates count; projects need `min_commits` of them.
pub fn project_correlation_study(commits: &[ProjectCommit], min_commits: usize) -> Result<ProjectStudy> {
    let mut by_project: BTreeMap<&str, Vec<&ProjectCommit>> = BTreeMap::new();
    for c in commits {
        by_project.entry(&c.project).or_default().push(c);
    }
    let mut projects = Vec::new();
    for (project, cs) in by_project {
        let main = main_contributors(cs.iter().map(|c| c.author.as_str()), 0.8);
        let test: Vec<(&ProjectCommit, f64, f64)> = cs
            .iter()
            .filter(|c| main.contains(&c.author))
            .filter_map(|c| Some((*c, c.expected_hours?, c.sch_hours?)))
            .collect();
        if test.len() < min_commits || test.is_empty() {
            continue;
        }
        let n = test.len() as f64;
        projects.push(ProjectRow {
            project: project.to_string(),
            main_contributors: main.into_iter().collect(),
            test_commits: test.len(),
            mean_expected_hours: test.iter().map(|t| t.1).sum::<f64>() / n,
            mean_sch_hours: test.iter().map(|t| t.2).sum::<f64>() / n,
            mean_lines_added: test.iter().map(|t| t.0.lines_added).sum::<f64>() / n,
            mean_churn: test.iter().map(|t| t.0.churn).sum::<f64>() / n,
        });
    }
    if projects.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no project has {min_commits} test commits"
        )));
    }
    let col = |f: fn(&ProjectRow) -> f64| projects.iter().map(f).collect::<Vec<f64>>();
    let time = col(|p| p.mean_expected_hours);
    Ok(ProjectStudy {
        standard_coder: pearson(&col(|p| p.mean_sch_hours), &time)?,
        lines_added: pearson(&col(|p| p.mean_lines_added), &time)?,
        churn: pearson(&col(|p| p.mean_churn), &time)?,
        projects,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSearch {
    pub beta: f64,
    pub spearman: f64,
    /// Every grid point with its coefficient; `None` where the composite was constant.
    pub grid: Vec<(f64, Option<f64>)>,
}

/// Grid β ∈ {−1, −0.995, …, 1}, endpoints exact.
pub fn beta_grid() -> Vec<f64> {
    (-200..=200).map(|i| i as f64 / 200.0).collect()
}

/// β maximizing Spearman(coding time, added + β·deleted); ties prefer small |β|, then smaller β.
pub fn beta_grid_search(added: &[f64], deleted: &[f64], coding_time: &[f64]) -> Result<BetaSearch> {
    if added.is_empty() || added.len() != deleted.len() || added.len() != coding_time.len() {
        return Err(Error::InvalidInput("beta search needs equal, nonempty columns".into()));
    }
    let grid: Vec<(f64, Option<f64>)> = beta_grid()
        .into_iter()
        .map(|beta| {
            let x: Vec<f64> = added.iter().zip(deleted).map(|(a, d)| a + beta * d).collect();
            (beta, spearman(coding_time, &x).ok().map(|r| r.coefficient))
        })
        .collect();
    let best = grid
        .iter()
        .filter_map(|&(b, r)| r.map(|r| (b, r)))
        .max_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(b.0.abs().total_cmp(&a.0.abs()))
                .then(b.0.total_cmp(&a.0))
        })
        .ok_or_else(|| Error::Degenerate("composite constant at every β".into()))?;
    Ok(BetaSearch {
        beta: best.0,
        spearman: best.1,
        grid,
    })
}
