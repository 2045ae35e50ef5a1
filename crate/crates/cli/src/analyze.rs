//! `analyze` subcommands: a JSON report plus a plot-data CSV each.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use stdcoder::analysis::{
    beta_grid_search, file_spread_counterfactual, predictor_correlations, probability_correction_test,
    project_correlation_study, reference, token_swap_cost, yy_binning, ChangeOutcome, CorrectionConfig,
    CorrectionReport, ProjectCommit,
};
use stdcoder::hmm;
use stdcoder::seed;
use stdcoder::stats::binomial_sign_test;
use stdcoder::tokenizer::ChangeFeatures;

use crate::args::*;
use crate::commands::{
    author_timeline, check_dictionary, load_corpus, load_dict, load_features, load_hmm_models, load_intervals,
    load_mdn, IntervalRecord,
};
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt_f64, manifest_path, CsvTable, ManifestBuilder};

/// A finished analysis before it is written.
pub struct Report {
    pub json: Value,
    pub plot: CsvTable,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn write_report<A: Serialize>(
    name: &str,
    args: &A,
    out: &ReportOut,
    inputs: &[&Path],
    seed: u64,
    r: Report,
) -> CliResult<()> {
    let m = ManifestBuilder::start(&format!("analyze {name}"), seed);
    let plot = out.plot_path();
    io::write_atomic(&out.out, &io::to_json_pretty(&r.json))?;
    io::write_atomic(&plot, &r.plot.into_bytes())?;
    m.finish(
        &manifest_path(&out.out),
        &json!({ "args": args }),
        inputs,
        &[&out.out, &plot],
    )?;
    Ok(())
}

pub fn run(analysis: &Analysis, root: u64) -> CliResult<()> {
    match analysis {
        Analysis::Yy(a) => write_report("yy", a, &a.report, &[&a.model, &a.features, &a.coding_times], 0, yy(a)?),
        Analysis::Correction(a) => write_report(
            "correction",
            a,
            &a.report,
            &[&a.corpus, &a.models_dir],
            0,
            correction(a)?,
        ),
        Analysis::ProjectCorr(a) => write_report(
            "project-corr",
            a,
            &a.report,
            &[&a.corpus, &a.coding_times, &a.features, &a.model],
            0,
            project_corr(a)?,
        ),
        Analysis::Table1(a) => write_report(
            "table1",
            a,
            &a.report,
            &[&a.model, &a.features, &a.coding_times],
            0,
            table1(a)?,
        ),
        Analysis::Beta(a) => write_report("beta", a, &a.report, &[&a.corpus, &a.coding_times], 0, beta(a)?),
        Analysis::FileSpread(a) => write_report(
            "file-spread",
            a,
            &a.report,
            &[&a.model, &a.features],
            0,
            file_spread(a)?,
        ),
        Analysis::TokenSwap(a) => write_report(
            "token-swap",
            a,
            &a.report,
            &[&a.model, &a.dict, &a.features],
            root,
            token_swap(a, root)?,
        ),
    }
}

/// Holdout commits recorded in the model, or an error if it kept none.
fn holdout_commits(model: &stdcoder::mdn::MdnModel, path: &Path) -> CliResult<std::collections::HashSet<String>> {
    let commits: std::collections::HashSet<String> = model
        .training
        .as_ref()
        .map(|t| t.holdout_commits.iter().cloned().collect())
        .unwrap_or_default();
    if commits.is_empty() {
        return Err(CliError::Data(format!(
            "{}: model records no holdout commits; train with a nonzero holdout fraction",
            path.display()
        )));
    }
    Ok(commits)
}

pub fn yy(a: &YyArgs) -> CliResult<Report> {
    let model = load_mdn(&a.model)?;
    let holdout = holdout_commits(&model, &a.model)?;
    let intervals: HashMap<String, IntervalRecord> = load_intervals(&a.coding_times)?
        .into_iter()
        .map(|r| (r.commit.clone(), r))
        .collect();
    let (features, actual): (Vec<ChangeFeatures>, Vec<f64>) = load_features(&a.features)?
        .into_iter()
        .filter(|f| holdout.contains(&f.commit))
        .filter_map(|f| {
            let r = intervals.get(&f.commit)?;
            (r.interval_minutes < a.max_interval_minutes).then(|| (f, r.interval_minutes as f64 / 60.0))
        })
        .unzip();
    if features.is_empty() {
        return Err(CliError::Data(format!(
            "no holdout commit has an interval under {} minutes",
            a.max_interval_minutes
        )));
    }
    let predicted = model.predict_sch_batch(&features, a.bounds.pair())?;
    let result = yy_binning(&predicted, &actual, a.bins)?;
    let mut plot = CsvTable::new(&["bin", "count", "mean_predicted_hours", "mean_actual_hours"]);
    for (i, b) in result.bins.iter().enumerate() {
        plot.row(&[
            i.to_string(),
            b.count.to_string(),
            fmt_f64(b.mean_predicted),
            fmt_f64(b.mean_actual),
        ]);
    }
    Ok(Report {
        json: json!({
            "analysis": "yy",
            "holdout_rows": features.len(),
            "max_interval_minutes": a.max_interval_minutes,
            "result": result,
            "reference": { "r_squared": reference::YY_R_SQUARED },
        }),
        plot,
    })
}

#[derive(Serialize)]
struct AuthorCorrection {
    author: String,
    report: CorrectionReport,
}

pub fn correction(a: &CorrectionArgs) -> CliResult<Report> {
    let corpus = load_corpus(&a.corpus)?;
    let models: Vec<_> = load_hmm_models(&a.models_dir)?
        .into_iter()
        .filter(|m| a.author.as_ref().is_none_or(|x| *x == m.author))
        .filter(|m| m.commits >= a.min_commits && !corpus.by_author(&m.author).is_empty())
        .collect();
    if models.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no eligible author model",
            a.models_dir.display()
        )));
    }
    let cfg = CorrectionConfig::default();
    let per_author: Vec<AuthorCorrection> = models
        .par_iter()
        .map(|m| {
            let tl = author_timeline(&corpus, &m.author)?;
            if tl.window_start != m.window_start || tl.len != m.window_len {
                return Err(CliError::Data(format!(
                    "model for author {} covers a different window than the corpus",
                    m.author
                )));
            }
            let posterior = hmm::forward_backward(&tl, &m.params)?;
            Ok(AuthorCorrection {
                author: m.author.clone(),
                report: probability_correction_test(&posterior, &cfg)?,
            })
        })
        .collect::<CliResult<_>>()?;
    let tested: usize = per_author.iter().map(|r| r.report.tested).sum();
    let flagged: usize = per_author.iter().map(|r| r.report.flagged).sum();
    let expected = per_author[0].report.expected_false_positive_rate;
    let p_value = if tested > 0 {
        Some(binomial_sign_test(flagged as u64, tested as u64, expected)?)
    } else {
        None
    };
    let mut plot = CsvTable::new(&[
        "author",
        "decile",
        "minutes",
        "mean_correction",
        "positive_parts",
        "flagged",
    ]);
    for r in &per_author {
        for d in &r.report.deciles {
            plot.row(&[
                r.author.clone(),
                d.decile.to_string(),
                d.minutes.to_string(),
                opt(d.mean_correction),
                d.positive_parts.map(|v| v.to_string()).unwrap_or_default(),
                d.flagged.map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
    }
    Ok(Report {
        json: json!({
            "analysis": "correction",
            "config": cfg,
            "authors": per_author,
            "author_decile_units": { "tested": tested, "flagged": flagged },
            "author_part_units": per_author.iter().map(|r| json!({
                "author": r.author,
                "positive_deciles_per_part": r.report.positive_deciles_per_part,
            })).collect::<Vec<_>>(),
            "flag_rate": if tested > 0 { Some(flagged as f64 / tested as f64) } else { None },
            "expected_false_positive_rate": expected,
            "binomial_p_value": p_value,
            "reference": { "false_positive_rate": stdcoder::analysis::REFERENCE_FALSE_POSITIVE_RATE },
        }),
        plot,
    })
}

pub fn project_corr(a: &ProjectCorrArgs) -> CliResult<Report> {
    let corpus = load_corpus(&a.corpus)?;
    let model = load_mdn(&a.model)?;
    let intervals: HashMap<String, IntervalRecord> = load_intervals(&a.coding_times)?
        .into_iter()
        .map(|r| (r.commit.clone(), r))
        .collect();
    let features = load_features(&a.features)?;
    let sch = model.predict_sch_batch(&features, a.bounds.pair())?;
    let sch: HashMap<&str, f64> = features.iter().map(|f| f.commit.as_str()).zip(sch).collect();
    let commits: Vec<ProjectCommit> = corpus
        .commits
        .iter()
        .map(|c| ProjectCommit {
            project: c.project_id.clone(),
            author: c.author_id.clone(),
            expected_hours: intervals.get(&c.commit_id).map(|r| r.expected_hours),
            sch_hours: sch.get(c.commit_id.as_str()).copied(),
            lines_added: c.lines_added() as f64,
            churn: c.churn() as f64,
        })
        .collect();
    let study = project_correlation_study(&commits, a.min_commits)?;
    let mut plot = CsvTable::new(&[
        "project",
        "test_commits",
        "mean_expected_hours",
        "mean_sch_hours",
        "mean_lines_added",
        "mean_churn",
    ]);
    for p in &study.projects {
        plot.row(&[
            p.project.clone(),
            p.test_commits.to_string(),
            fmt_f64(p.mean_expected_hours),
            fmt_f64(p.mean_sch_hours),
            fmt_f64(p.mean_lines_added),
            fmt_f64(p.mean_churn),
        ]);
    }
    Ok(Report {
        json: json!({
            "analysis": "project-corr",
            "min_commits": a.min_commits,
            "result": study,
            "reference": {
                "standard_coder_pearson": reference::PROJECT_PEARSON,
                "standard_coder_slope": reference::PROJECT_SLOPE,
                "lines_added_pearson": reference::LOC_BASELINE_PEARSON,
                "churn_pearson": reference::CHURN_BASELINE_PEARSON,
            },
        }),
        plot,
    })
}

pub fn table1(a: &Table1Args) -> CliResult<Report> {
    let model = load_mdn(&a.model)?;
    let holdout = if a.all_commits {
        None
    } else {
        Some(holdout_commits(&model, &a.model)?)
    };
    let intervals: HashMap<String, IntervalRecord> = load_intervals(&a.coding_times)?
        .into_iter()
        .map(|r| (r.commit.clone(), r))
        .collect();
    let (features, times): (Vec<ChangeFeatures>, Vec<f64>) = load_features(&a.features)?
        .into_iter()
        .filter(|f| holdout.as_ref().is_none_or(|h| h.contains(&f.commit)))
        .filter_map(|f| intervals.get(&f.commit).map(|r| (f, r.expected_hours)))
        .unzip();
    if features.is_empty() {
        return Err(CliError::Data("no featurized commit has a coding time".into()));
    }
    let predictions = model.predict_sch_batch(&features, a.bounds.pair())?;
    let rows: Vec<ChangeOutcome> = features
        .iter()
        .zip(&predictions)
        .zip(&times)
        .map(|((f, &p), &t)| ChangeOutcome {
            files_touched: f.files_touched as f64,
            whitespace: f.whitespace_count as f64,
            tokens: f.total_tokens as f64,
            lines_added: f.lines_added as f64,
            lines_deleted: f.lines_deleted as f64,
            prediction: p,
            coding_time: t,
        })
        .collect();
    let table = predictor_correlations(&rows)?;
    let mut plot = CsvTable::new(&[
        "predictor",
        "vs_coding_time",
        "vs_coding_time_p",
        "vs_prediction",
        "vs_prediction_p",
        "reference_vs_coding_time",
        "reference_vs_prediction",
    ]);
    for (row, (_, r_time, r_pred)) in table.iter().zip(reference::TABLE1) {
        plot.row(&[
            row.predictor.clone(),
            fmt_f64(row.vs_coding_time.coefficient),
            opt(row.vs_coding_time.p_value),
            fmt_f64(row.vs_prediction.coefficient),
            opt(row.vs_prediction.p_value),
            fmt_f64(r_time),
            fmt_f64(r_pred),
        ]);
    }
    Ok(Report {
        json: json!({
            "analysis": "table1",
            "rows": rows.len(),
            "holdout_only": !a.all_commits,
            "result": table,
            "reference": reference::TABLE1.iter().map(|(n, t, p)| json!({
                "predictor": n, "vs_coding_time": t, "vs_prediction": p,
            })).collect::<Vec<_>>(),
        }),
        plot,
    })
}

pub fn beta(a: &BetaArgs) -> CliResult<Report> {
    let corpus = load_corpus(&a.corpus)?;
    let intervals: HashMap<String, IntervalRecord> = load_intervals(&a.coding_times)?
        .into_iter()
        .map(|r| (r.commit.clone(), r))
        .collect();
    let (mut added, mut deleted, mut time) = (Vec::new(), Vec::new(), Vec::new());
    for c in &corpus.commits {
        if let Some(r) = intervals.get(&c.commit_id) {
            added.push(c.lines_added() as f64);
            deleted.push(c.lines_deleted() as f64);
            time.push(r.expected_hours);
        }
    }
    if time.is_empty() {
        return Err(CliError::Data("no corpus commit has a coding time".into()));
    }
    let search = beta_grid_search(&added, &deleted, &time)?;
    let mut plot = CsvTable::new(&["beta", "spearman"]);
    for (b, s) in &search.grid {
        plot.row(&[fmt_f64(*b), opt(*s)]);
    }
    Ok(Report {
        json: json!({
            "analysis": "beta",
            "rows": time.len(),
            "beta": search.beta,
            "spearman": search.spearman,
            "reference": { "beta": reference::BEST_BETA },
        }),
        plot,
    })
}

pub fn file_spread(a: &FileSpreadArgs) -> CliResult<Report> {
    let model = load_mdn(&a.model)?;
    let features = load_features(&a.features)?;
    let r = file_spread_counterfactual(&model, &features, a.max_files, a.bounds.pair())?;
    let mut plot = CsvTable::new(&[
        "files",
        "mean_sch_hours",
        "mean_delta_vs_factual_seconds",
        "step_mean_delta_seconds",
        "step_q25_seconds",
        "step_q75_seconds",
        "step_wilcoxon_p",
    ]);
    for level in &r.levels {
        let step = r.steps.iter().find(|s| s.to_files == level.files);
        plot.row(&[
            level.files.to_string(),
            fmt_f64(level.mean_sch_hours),
            fmt_f64(level.mean_delta_vs_factual_seconds),
            opt(step.map(|s| s.mean_delta_seconds)),
            opt(step.map(|s| s.q25_seconds)),
            opt(step.map(|s| s.q75_seconds)),
            opt(step.and_then(|s| s.wilcoxon_p)),
        ]);
    }
    Ok(Report {
        json: json!({
            "analysis": "file-spread",
            "max_files": a.max_files,
            "result": r,
            "reference": { "seconds_per_extra_file": reference::SECONDS_PER_EXTRA_FILE },
        }),
        plot,
    })
}

pub fn token_swap(a: &TokenSwapArgs, root: u64) -> CliResult<Report> {
    let model = load_mdn(&a.model)?;
    let dict = load_dict(&a.dict)?;
    check_dictionary(&model, &dict, &a.dict)?;
    let features = load_features(&a.features)?;
    let seed = seed::derive(root, &["token-swap", &a.token_a, &a.token_b]);
    let r = token_swap_cost(
        &model,
        &dict,
        &features,
        &a.token_a,
        &a.token_b,
        a.resamples,
        seed,
        a.bounds.pair(),
    )?;
    let mut plot = CsvTable::new(&["from", "to", "mean_delta_seconds", "p_value", "n"]);
    for c in [&r.a_to_b, &r.b_to_a] {
        plot.row(&[
            c.from_token.clone(),
            c.to_token.clone(),
            fmt_f64(c.mean_delta_seconds),
            fmt_f64(c.p_value),
            c.n.to_string(),
        ]);
    }
    let published: Vec<Value> = reference::TOKEN_SWAP_SECONDS
        .iter()
        .filter(|(f, t, _)| {
            (*f, *t) == (a.token_a.as_str(), a.token_b.as_str()) || (*f, *t) == (a.token_b.as_str(), a.token_a.as_str())
        })
        .map(|(f, t, s)| json!({ "from": f, "to": t, "seconds": s }))
        .collect();
    Ok(Report {
        json: json!({
            "analysis": "token-swap",
            "resamples": a.resamples,
            "result": r,
            "reference": published,
        }),
        plot,
    })
}
