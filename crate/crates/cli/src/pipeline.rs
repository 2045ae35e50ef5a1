//! Whole-pipeline runs from one config file, with a per-stage content cache.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use stdcoder::hmm::TrainConfig;
use stdcoder::mdn::MdnConfig;

use crate::analyze;
use crate::args::*;
use crate::commands::{self, AuthorState, AuthorStatus};
use crate::error::{CliError, CliResult};
use crate::io::{self, manifest_path, FileHash, ManifestBuilder};

pub const ANALYSES: [&str; 7] = [
    "yy",
    "correction",
    "project-corr",
    "table1",
    "beta",
    "file-spread",
    "token-swap",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    /// Directory for every artifact; relative paths resolve against the config file.
    pub work_dir: PathBuf,
    /// Git working copies or NDJSON commit exports.
    pub inputs: Vec<PathBuf>,
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub mode: Streams,
    /// Authors to model; all authors when omitted.
    #[serde(default)]
    pub authors: Option<Vec<String>>,
    #[serde(default)]
    pub hmm: TrainConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub language: String,
    #[serde(default)]
    pub top_n: Option<usize>,
    #[serde(default)]
    pub mdn: MdnConfig,
    #[serde(default)]
    pub bounds: BoundsArgs,
    #[serde(default)]
    pub analyses: AnalysisPlan,
}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisPlan {
    pub run: Vec<String>,
    pub yy_bins: usize,
    pub max_interval_minutes: usize,
    pub correction_min_commits: usize,
    pub min_project_commits: usize,
    pub table1_all_commits: bool,
    pub max_files: u32,
    /// `(from, to)` token pairs.
    pub token_swaps: Vec<(String, String)>,
    pub resamples: usize,
}

impl Default for AnalysisPlan {
    fn default() -> Self {
        AnalysisPlan {
            run: ["yy", "correction", "table1", "beta", "file-spread"]
                .map(String::from)
                .to_vec(),
            yy_bins: 250,
            max_interval_minutes: 60,
            correction_min_commits: 0,
            min_project_commits: 50,
            table1_all_commits: false,
            max_files: 5,
            token_swaps: Vec::new(),
            resamples: 10_000,
        }
    }
}

/// Fixed artifact layout inside the work directory.
pub struct Layout {
    pub corpus: PathBuf,
    pub models: PathBuf,
    pub hmm_status: PathBuf,
    pub intervals: PathBuf,
    pub dict: PathBuf,
    pub features: PathBuf,
    pub mdn: PathBuf,
    pub predictions: PathBuf,
    pub analyses: PathBuf,
    pub cache: PathBuf,
}

impl Layout {
    pub fn new(work: &Path) -> Self {
        Layout {
            corpus: work.join("corpus.ndjson"),
            models: work.join("models"),
            hmm_status: work.join("hmm_status.json"),
            intervals: work.join("intervals.ndjson"),
            dict: work.join("dict.json"),
            features: work.join("features.ndjson"),
            mdn: work.join("mdn.model"),
            predictions: work.join("predictions.ndjson"),
            analyses: work.join("analyses"),
            cache: work.join("cache"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageState {
    Ran,
    Cached,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: String,
    pub status: StageState,
    pub message: Option<String>,
}

/// Printed to standard output when the pipeline ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub stages: Vec<StageStatus>,
    pub authors: Vec<AuthorStatus>,
    pub exit_code: i32,
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    outputs: Vec<FileHash>,
}

struct Runner {
    cache_dir: PathBuf,
    seed: u64,
    stages: Vec<StageStatus>,
}

impl Runner {
    fn key(&self, stage: &str, config: &Value, inputs: &[&Path]) -> CliResult<String> {
        let hashes: Vec<String> = inputs.iter().map(|p| io::sha256_path(p)).collect::<CliResult<_>>()?;
        let doc = json!({ "stage": stage, "config": config, "inputs": hashes, "seed": self.seed });
        Ok(io::sha256_bytes(doc.to_string().as_bytes()))
    }

    fn entry_path(&self, stage: &str) -> PathBuf {
        self.cache_dir.join(format!("{stage}.json"))
    }

    fn is_fresh(&self, stage: &str, key: &str, outputs: &[&Path]) -> bool {
        let Ok(entry) = io::read_json::<CacheEntry>(&self.entry_path(stage)) else {
            return false;
        };
        entry.key == key
            && entry.outputs.len() == outputs.len()
            && outputs
                .iter()
                .zip(&entry.outputs)
                .all(|(p, h)| p.exists() && io::sha256_path(p).is_ok_and(|s| s == h.sha256))
    }

    /// Run `f` unless the stage's inputs, config and seed match the cached run.
    fn stage<F>(&mut self, stage: &str, config: Value, inputs: &[&Path], outputs: &[&Path], f: F) -> CliResult<()>
    where
        F: FnOnce() -> CliResult<()>,
    {
        let key = self.key(stage, &config, inputs)?;
        if self.is_fresh(stage, &key, outputs) {
            log::info!("stage {stage}: unchanged, skipped");
            self.push(stage, StageState::Cached, None);
            return Ok(());
        }
        log::info!("stage {stage}: running");
        if let Err(e) = f() {
            self.push(stage, StageState::Failed, Some(e.to_string()));
            return Err(e);
        }
        let entry = CacheEntry {
            key,
            outputs: outputs.iter().map(|p| FileHash::of(p)).collect::<CliResult<_>>()?,
        };
        io::write_atomic(&self.entry_path(stage), &io::to_json_pretty(&entry))?;
        self.push(stage, StageState::Ran, None);
        Ok(())
    }

    fn push(&mut self, stage: &str, status: StageState, message: Option<String>) {
        self.stages.push(StageStatus {
            stage: stage.to_string(),
            status,
            message,
        });
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_config(path: &Path) -> CliResult<PipelineConfig> {
    let mut cfg: PipelineConfig = io::read_config(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    cfg.work_dir = resolve(base, &cfg.work_dir);
    cfg.inputs = cfg.inputs.iter().map(|p| resolve(base, p)).collect();
    cfg.rules = cfg.rules.as_deref().map(|p| resolve(base, p));
    commands::parse_language(&cfg.language)
        .map_err(|_| CliError::Data(format!("{}: unknown language {:?}", path.display(), cfg.language)))?;
    if let Some(bad) = cfg.analyses.run.iter().find(|a| !ANALYSES.contains(&a.as_str())) {
        return Err(CliError::Data(format!("{}: unknown analysis {bad:?}", path.display())));
    }
    if cfg.inputs.is_empty() {
        return Err(CliError::Data(format!("{}: no inputs listed", path.display())));
    }
    Ok(cfg)
}

/// Run every stage; later stages are not reached after a stage fails.
pub fn pipeline(args: &PipelineArgs, cli_seed: Option<u64>) -> CliResult<PipelineSummary> {
    let cfg = load_config(&args.config)?;
    let seed = cli_seed.unwrap_or(cfg.seed);
    let l = Layout::new(&cfg.work_dir);
    let mut runner = Runner {
        cache_dir: l.cache.clone(),
        seed,
        stages: Vec::new(),
    };
    let mut summary = PipelineSummary {
        stages: Vec::new(),
        authors: Vec::new(),
        exit_code: 0,
    };
    let result = run_stages(&cfg, seed, &l, &mut runner, &mut summary);
    summary.stages = runner.stages;
    match result {
        Ok(()) => Ok(summary),
        Err(e) => {
            log::error!("pipeline stopped: {e}");
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            Err(e)
        }
    }
}

fn run_stages(
    cfg: &PipelineConfig,
    seed: u64,
    l: &Layout,
    runner: &mut Runner,
    summary: &mut PipelineSummary,
) -> CliResult<()> {
    let mut ingest_inputs: Vec<&Path> = cfg.inputs.iter().map(PathBuf::as_path).collect();
    ingest_inputs.extend(cfg.rules.as_deref());
    let ingest = IngestArgs {
        inputs: cfg.inputs.clone(),
        rules: cfg.rules.clone(),
        mode: cfg.mode,
        out: l.corpus.clone(),
    };
    runner.stage(
        "ingest",
        json!({ "mode": cfg.mode }),
        &ingest_inputs,
        &[&l.corpus],
        || commands::ingest(&ingest, seed).map(|_| ()),
    )?;

    let hmm_config = json!({ "hmm": cfg.hmm, "authors": cfg.authors });
    runner.stage(
        "train-hmm",
        hmm_config,
        &[&l.corpus],
        &[&l.models, &l.hmm_status],
        || {
            let m = ManifestBuilder::start("train-hmm", seed);
            let corpus = commands::load_corpus(&l.corpus)?;
            let authors = cfg.authors.clone().unwrap_or_else(|| corpus.authors());
            if l.models.exists() {
                std::fs::remove_dir_all(&l.models).map_err(|e| CliError::io(&l.models, e))?;
            }
            let statuses = commands::train_all(&corpus, &authors, &cfg.hmm, seed, &l.models)?;
            io::write_atomic(&l.hmm_status, &io::to_json_pretty(&statuses))?;
            m.finish(
                &manifest_path(&l.models),
                &json!({ "train": cfg.hmm, "authors": authors }),
                &[&l.corpus],
                &[&l.models, &l.hmm_status],
            )?;
            Ok(())
        },
    )?;
    summary.authors = io::read_json(&l.hmm_status)?;
    if summary.authors.iter().any(|a| a.status == AuthorState::Failed) {
        summary.exit_code = 2;
    }

    let ct = CodingTimesArgs {
        corpus: l.corpus.clone(),
        models_dir: l.models.clone(),
        samples: cfg.samples,
        mode: cfg.mode,
        out: l.intervals.clone(),
    };
    let ct_config = json!({ "samples": cfg.samples, "mode": cfg.mode });
    runner.stage(
        "coding-times",
        ct_config,
        &[&l.corpus, &l.models],
        &[&l.intervals],
        || commands::coding_times(&ct, seed).map(|_| ()),
    )?;

    let bd = BuildDictArgs {
        corpus: l.corpus.clone(),
        language: cfg.language.clone(),
        top_n: cfg.top_n,
        out: l.dict.clone(),
    };
    let bd_config = json!({ "language": cfg.language, "top_n": cfg.top_n });
    runner.stage("build-dict", bd_config, &[&l.corpus], &[&l.dict], || {
        commands::build_dict(&bd, seed).map(|_| ())
    })?;

    let fz = FeaturizeArgs {
        corpus: l.corpus.clone(),
        dict: l.dict.clone(),
        out: l.features.clone(),
    };
    runner.stage("featurize", json!({}), &[&l.corpus, &l.dict], &[&l.features], || {
        commands::featurize_cmd(&fz, seed).map(|_| ())
    })?;

    let mdn_inputs: [&Path; 3] = [&l.features, &l.intervals, &l.dict];
    runner.stage("train-mdn", json!({ "mdn": cfg.mdn }), &mdn_inputs, &[&l.mdn], || {
        let m = ManifestBuilder::start("train-mdn", seed);
        let features = commands::load_features(&l.features)?;
        let intervals = commands::load_intervals(&l.intervals)?;
        let dict = commands::load_dict(&l.dict)?;
        let model = commands::train_mdn_model(&features, &intervals, &cfg.mdn, Some(&dict), seed)?;
        io::write_atomic(&l.mdn, model.to_json().as_bytes())?;
        m.finish(
            &manifest_path(&l.mdn),
            &json!({ "train": cfg.mdn }),
            &mdn_inputs,
            &[&l.mdn],
        )?;
        Ok(())
    })?;

    let pr = PredictArgs {
        model: l.mdn.clone(),
        dict: Some(l.dict.clone()),
        patch: None,
        features: Some(l.features.clone()),
        out: Some(l.predictions.clone()),
        bounds: cfg.bounds,
    };
    let pr_inputs: [&Path; 3] = [&l.mdn, &l.features, &l.dict];
    runner.stage(
        "predict",
        json!({ "bounds": cfg.bounds }),
        &pr_inputs,
        &[&l.predictions],
        || commands::predict(&pr, seed),
    )?;

    for (name, analysis) in analyses(cfg, l) {
        let (inputs, out) = analysis_io(&analysis);
        let plot = out.plot_path();
        let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
        let config = analysis_config(&analysis);
        let r = runner.stage(&name, config, &input_refs, &[&out.out, &plot], || {
            analyze::run(&analysis, seed)
        });
        if let Err(e) = r {
            log::error!("{name}: {e}");
            summary.exit_code = 2;
        }
    }
    Ok(())
}

fn analyses(cfg: &PipelineConfig, l: &Layout) -> Vec<(String, Analysis)> {
    let plan = &cfg.analyses;
    let report = |name: &str| ReportOut {
        out: l.analyses.join(format!("{name}.json")),
        plot_data: Some(l.analyses.join(format!("{name}.csv"))),
    };
    let mut out = Vec::new();
    for name in &plan.run {
        let a = match name.as_str() {
            "yy" => Analysis::Yy(YyArgs {
                model: l.mdn.clone(),
                features: l.features.clone(),
                coding_times: l.intervals.clone(),
                bins: plan.yy_bins,
                max_interval_minutes: plan.max_interval_minutes,
                bounds: cfg.bounds,
                report: report(name),
            }),
            "correction" => Analysis::Correction(CorrectionArgs {
                corpus: l.corpus.clone(),
                models_dir: l.models.clone(),
                author: None,
                min_commits: plan.correction_min_commits,
                report: report(name),
            }),
            "project-corr" => Analysis::ProjectCorr(ProjectCorrArgs {
                corpus: l.corpus.clone(),
                coding_times: l.intervals.clone(),
                features: l.features.clone(),
                model: l.mdn.clone(),
                min_commits: plan.min_project_commits,
                bounds: cfg.bounds,
                report: report(name),
            }),
            "table1" => Analysis::Table1(Table1Args {
                model: l.mdn.clone(),
                features: l.features.clone(),
                coding_times: l.intervals.clone(),
                all_commits: plan.table1_all_commits,
                bounds: cfg.bounds,
                report: report(name),
            }),
            "beta" => Analysis::Beta(BetaArgs {
                corpus: l.corpus.clone(),
                coding_times: l.intervals.clone(),
                report: report(name),
            }),
            "file-spread" => Analysis::FileSpread(FileSpreadArgs {
                model: l.mdn.clone(),
                features: l.features.clone(),
                max_files: plan.max_files,
                bounds: cfg.bounds,
                report: report(name),
            }),
            _ => {
                for (i, (a, b)) in plan.token_swaps.iter().enumerate() {
                    let stage = format!("token-swap-{i}");
                    out.push((
                        format!("analyze-{stage}"),
                        Analysis::TokenSwap(TokenSwapArgs {
                            model: l.mdn.clone(),
                            dict: l.dict.clone(),
                            features: l.features.clone(),
                            token_a: a.clone(),
                            token_b: b.clone(),
                            resamples: plan.resamples,
                            bounds: cfg.bounds,
                            report: report(&stage),
                        }),
                    ));
                }
                continue;
            }
        };
        out.push((format!("analyze-{name}"), a));
    }
    out
}

fn analysis_io(a: &Analysis) -> (Vec<PathBuf>, ReportOut) {
    match a {
        Analysis::Yy(x) => (
            vec![x.model.clone(), x.features.clone(), x.coding_times.clone()],
            x.report.clone(),
        ),
        Analysis::Correction(x) => (vec![x.corpus.clone(), x.models_dir.clone()], x.report.clone()),
        Analysis::ProjectCorr(x) => (
            vec![
                x.corpus.clone(),
                x.coding_times.clone(),
                x.features.clone(),
                x.model.clone(),
            ],
            x.report.clone(),
        ),
        Analysis::Table1(x) => (
            vec![x.model.clone(), x.features.clone(), x.coding_times.clone()],
            x.report.clone(),
        ),
        Analysis::Beta(x) => (vec![x.corpus.clone(), x.coding_times.clone()], x.report.clone()),
        Analysis::FileSpread(x) => (vec![x.model.clone(), x.features.clone()], x.report.clone()),
        Analysis::TokenSwap(x) => (
            vec![x.model.clone(), x.dict.clone(), x.features.clone()],
            x.report.clone(),
        ),
    }
}

fn analysis_config(a: &Analysis) -> Value {
    let v = match a {
        Analysis::Yy(x) => serde_json::to_value(x),
        Analysis::Correction(x) => serde_json::to_value(x),
        Analysis::ProjectCorr(x) => serde_json::to_value(x),
        Analysis::Table1(x) => serde_json::to_value(x),
        Analysis::Beta(x) => serde_json::to_value(x),
        Analysis::FileSpread(x) => serde_json::to_value(x),
        Analysis::TokenSwap(x) => serde_json::to_value(x),
    };
    v.expect("analysis args serialize")
}
