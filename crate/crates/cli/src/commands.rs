//! Artifact-producing commands. Each writes its outputs atomically plus one manifest.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stdcoder::corpus::{self, Commit, CommitCorpus, FilterRules, IngestStats, Language, StreamMode};
use stdcoder::hmm::{self, train_hmm, DeveloperTimeline, HmmModel, TrainConfig};
use stdcoder::mdn::{sch_minutes, train_mdn, truncated_mixture_mean, MdnConfig, MdnModel};
use stdcoder::seed;
use stdcoder::simulator::{regime_change_scenario, simulate_developer, SimScenario, SimulatedDeveloper};
use stdcoder::tokenizer::{build_dictionary, default_top_n, featurize, ChangeFeatures, TokenDictionary};

use crate::args::*;
use crate::error::{at_path, CliError, CliResult};
use crate::io::{self, manifest_path, ManifestBuilder};

pub fn load_corpus(path: &Path) -> CliResult<CommitCorpus> {
    at_path(path, CommitCorpus::read_ndjson(path))
}

pub fn load_dict(path: &Path) -> CliResult<TokenDictionary> {
    at_path(path, TokenDictionary::read(path))
}

pub fn load_mdn(path: &Path) -> CliResult<MdnModel> {
    at_path(path, MdnModel::read(path))
}

pub fn load_features(path: &Path) -> CliResult<Vec<ChangeFeatures>> {
    io::read_ndjson(path)
}

pub fn load_intervals(path: &Path) -> CliResult<Vec<IntervalRecord>> {
    io::read_ndjson(path)
}

/// Every `*.json` model below `dir`, ordered by author.
pub fn load_hmm_models(dir: &Path) -> CliResult<Vec<HmmModel>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut models: Vec<HmmModel> = paths.iter().map(|p| io::read_json(p)).collect::<CliResult<_>>()?;
    models.sort_by(|a, b| a.author.cmp(&b.author));
    if let Some(w) = models.windows(2).find(|w| w[0].author == w[1].author) {
        return Err(CliError::Data(format!(
            "{}: two models for author {}",
            dir.display(),
            w[0].author
        )));
    }
    Ok(models)
}

/// Check that a dictionary matches the one a model was trained with.
pub fn check_dictionary(model: &MdnModel, dict: &TokenDictionary, dict_path: &Path) -> CliResult<()> {
    match &model.dictionary_hash {
        Some(h) if *h != dict.content_hash() => Err(CliError::Data(format!(
            "{}: dictionary differs from the one the model was trained with",
            dict_path.display()
        ))),
        _ => Ok(()),
    }
}

fn check_bounds(b: &BoundsArgs) -> CliResult<()> {
    if !(b.lower < b.upper) || !b.lower.is_finite() || !b.upper.is_finite() {
        return Err(CliError::Usage(format!(
            "--lower {} must be below --upper {}",
            b.lower, b.upper
        )));
    }
    Ok(())
}

pub fn ingest(args: &IngestArgs, _seed: u64) -> CliResult<IngestStats> {
    let m = ManifestBuilder::start("ingest", 0);
    let rules = match &args.rules {
        Some(p) => at_path(p, FilterRules::from_json_file(p))?,
        None => FilterRules::default(),
    };
    let mut commits = Vec::new();
    let mut stats = IngestStats::default();
    for input in &args.inputs {
        if !input.exists() {
            return Err(CliError::Data(format!(
                "{}: no such file or directory",
                input.display()
            )));
        }
        let c = at_path(input, corpus::ingest(input, &rules, args.mode.into()))?;
        stats.commits_seen += c.stats.commits_seen;
        stats.files_filtered += c.stats.files_filtered;
        stats.files_undecodable += c.stats.files_undecodable;
        stats.commits_squashed += c.stats.commits_squashed;
        commits.extend(c.commits);
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = commits.iter().find(|c| !seen.insert(c.commit_id.clone())) {
        return Err(CliError::Data(format!(
            "commit {} appears in more than one input",
            dup.commit_id
        )));
    }
    let corpus = CommitCorpus::new(commits);
    io::write_atomic(&args.out, &io::to_ndjson(&corpus.commits))?;
    log::info!(
        "ingested {} commits ({} seen, {} squashed, {} files filtered, {} undecodable)",
        corpus.len(),
        stats.commits_seen,
        stats.commits_squashed,
        stats.files_filtered,
        stats.files_undecodable
    );
    let config = serde_json::json!({ "args": args, "rules": rules, "stats": stats });
    let inputs: Vec<&Path> = args
        .inputs
        .iter()
        .map(PathBuf::as_path)
        .chain(args.rules.as_deref())
        .collect();
    m.finish(&manifest_path(&args.out), &config, &inputs, &[&args.out])?;
    Ok(stats)
}

/// One simulated developer: commit minutes and ground-truth coding runs `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub author: String,
    pub window_start: i64,
    pub len: usize,
    pub commit_minutes: Vec<usize>,
    pub coding_runs: Vec<(usize, usize)>,
}

impl SimRecord {
    pub fn from_developer(d: &SimulatedDeveloper) -> Self {
        let mut runs = Vec::new();
        let mut start = None;
        for (t, &c) in d.coding.iter().enumerate() {
            match (c, start) {
                (true, None) => start = Some(t),
                (false, Some(s)) => {
                    runs.push((s, t));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, d.coding.len()));
        }
        SimRecord {
            author: d.timeline.author_id.clone(),
            window_start: d.timeline.window_start,
            len: d.timeline.len,
            commit_minutes: d.timeline.commit_minutes.clone(),
            coding_runs: runs,
        }
    }

    /// Dense ground-truth mask.
    pub fn coding_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len];
        for &(a, b) in &self.coding_runs {
            mask[a..b].iter_mut().for_each(|m| *m = true);
        }
        mask
    }
}

pub fn simulate(args: &SimulateArgs, root: u64) -> CliResult<Vec<SimRecord>> {
    let m = ManifestBuilder::start("simulate", root);
    let mut scenario = match (&args.config, args.scenario) {
        (Some(p), _) => io::read_config::<SimScenario>(p)?,
        (None, ScenarioKind::Default) => SimScenario::default(),
        (None, ScenarioKind::Regime) => regime_change_scenario(args.weeks.unwrap_or(13)),
    };
    if let Some(w) = args.weeks {
        scenario.weeks = if scenario.regime_change { 2 * w } else { w };
    }
    scenario.validate().map_err(|e| CliError::Data(e.to_string()))?;
    if args.developers == 0 {
        return Err(CliError::Usage("--developers must be at least 1".into()));
    }
    let records: Vec<SimRecord> = (0..args.developers)
        .into_par_iter()
        .map(|i| {
            let author = format!("sim-{i:03}");
            let mut rng = seed::rng(seed::derive(root, &["simulate", &author]));
            SimRecord::from_developer(&simulate_developer(&scenario, &author, &mut rng))
        })
        .collect();
    io::write_atomic(&args.out, &io::to_ndjson(&records))?;
    let mut outputs = vec![args.out.as_path()];
    if let Some(p) = &args.corpus_out {
        let commits: Vec<Commit> = records
            .iter()
            .flat_map(|r| {
                r.commit_minutes.iter().map(move |&t| Commit {
                    commit_id: format!("{}-{t}", r.author),
                    author_id: r.author.clone(),
                    project_id: "simulated".into(),
                    author_time: r.window_start + t as i64,
                    file_diffs: Vec::new(),
                })
            })
            .collect();
        io::write_atomic(p, &io::to_ndjson(&CommitCorpus::new(commits).commits))?;
        outputs.push(p);
    }
    let config = serde_json::json!({ "args": args, "scenario": scenario });
    let inputs: Vec<&Path> = args.config.iter().map(PathBuf::as_path).collect();
    m.finish(&manifest_path(&args.out), &config, &inputs, &outputs)?;
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorState {
    Trained,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorStatus {
    pub author: String,
    pub status: AuthorState,
    pub commits: usize,
    pub message: Option<String>,
    pub model: Option<String>,
}

pub fn hmm_config(flags: &HmmFlags) -> CliResult<TrainConfig> {
    let mut cfg = match &flags.config {
        Some(p) => io::read_config::<TrainConfig>(p)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = flags.epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = flags.hidden {
        cfg.hidden = v;
    }
    if let Some(v) = flags.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = flags.min_commits {
        cfg.min_commits = v;
    }
    Ok(cfg)
}

/// The author's whole commit history on one grid.
pub fn author_timeline(corpus: &CommitCorpus, author: &str) -> stdcoder::Result<DeveloperTimeline> {
    let times: Vec<i64> = corpus.by_author(author).iter().map(|c| c.author_time).collect();
    DeveloperTimeline::from_commit_times(author, &times)
}

pub fn train_author(corpus: &CommitCorpus, author: &str, cfg: &TrainConfig, root: u64) -> stdcoder::Result<HmmModel> {
    let tl = author_timeline(corpus, author)?;
    let cfg = TrainConfig {
        seed: seed::derive(root, &["train-hmm", author]),
        ..cfg.clone()
    };
    train_hmm(&tl, &cfg)
}

/// File name for an author's model; unsafe characters are replaced and a hash keeps names distinct.
pub fn model_file_name(author: &str) -> String {
    let safe: String = author
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-@+".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if safe == author && !author.starts_with('.') && !author.is_empty() {
        format!("{safe}.json")
    } else {
        format!("{safe}-{}.json", &io::sha256_bytes(author.as_bytes())[..8])
    }
}

fn model_bytes(model: &HmmModel) -> Vec<u8> {
    io::to_json_pretty(model)
}

/// Returns the per-author status; the caller maps failures to the exit code.
pub fn train_hmm_cmd(args: &TrainHmmArgs, root: u64) -> CliResult<Vec<AuthorStatus>> {
    let m = ManifestBuilder::start("train-hmm", root);
    let cfg = hmm_config(&args.train)?;
    let mut inputs = vec![args.corpus.as_path()];
    inputs.extend(args.train.config.as_deref());
    match (&args.author, args.all) {
        (Some(author), false) => {
            let out = args
                .out
                .as_ref()
                .ok_or_else(|| CliError::Usage("--author needs --out".into()))?;
            let corpus = load_corpus(&args.corpus)?;
            if corpus.by_author(author).is_empty() {
                return Err(CliError::Data(format!(
                    "{}: no commits by author {author}",
                    args.corpus.display()
                )));
            }
            let model = train_author(&corpus, author, &cfg, root)?;
            io::write_atomic(out, &model_bytes(&model))?;
            m.finish(
                &manifest_path(out),
                &serde_json::json!({ "args": args, "train": cfg }),
                &inputs,
                &[out],
            )?;
            Ok(vec![AuthorStatus {
                author: author.clone(),
                status: AuthorState::Trained,
                commits: model.commits,
                message: None,
                model: Some(out.display().to_string()),
            }])
        }
        (None, true) => {
            let dir = args
                .models_dir
                .as_ref()
                .ok_or_else(|| CliError::Usage("--all needs --models-dir".into()))?;
            let corpus = load_corpus(&args.corpus)?;
            let statuses = train_all(&corpus, &corpus.authors(), &cfg, root, dir)?;
            let mut outputs = vec![dir.as_path()];
            if let Some(s) = &args.status {
                io::write_atomic(s, &io::to_json_pretty(&statuses))?;
                outputs.push(s);
            }
            m.finish(
                &manifest_path(dir),
                &serde_json::json!({ "args": args, "train": cfg }),
                &inputs,
                &outputs,
            )?;
            Ok(statuses)
        }
        _ => Err(CliError::Usage("give exactly one of --author or --all".into())),
    }
}

/// Train each author in parallel; per-author errors are recorded, not raised.
pub fn train_all(
    corpus: &CommitCorpus,
    authors: &[String],
    cfg: &TrainConfig,
    root: u64,
    dir: &Path,
) -> CliResult<Vec<AuthorStatus>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    authors
        .par_iter()
        .map(|author| {
            let commits = corpus.by_author(author).len();
            let status = |status, message: Option<String>, model: Option<String>| AuthorStatus {
                author: author.clone(),
                status,
                commits,
                message,
                model,
            };
            match train_author(corpus, author, cfg, root) {
                Ok(model) => {
                    let name = model_file_name(author);
                    io::write_atomic(&dir.join(&name), &model_bytes(&model))?;
                    Ok(status(AuthorState::Trained, None, Some(name)))
                }
                Err(e @ stdcoder::Error::InsufficientCommits { .. }) => {
                    log::info!("{e}; skipped");
                    Ok(status(AuthorState::Skipped, Some(e.to_string()), None))
                }
                Err(e) => {
                    log::error!("training {author} failed: {e}");
                    Ok(status(AuthorState::Failed, Some(e.to_string()), None))
                }
            }
        })
        .collect()
}

/// Coding time accrued between a commit and the previous one in its stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub commit: String,
    pub author: String,
    pub project: String,
    pub interval_minutes: usize,
    pub expected_hours: f64,
    pub samples: Vec<f64>,
}

/// Interval records for one author, in corpus order.
pub fn author_intervals(
    corpus: &CommitCorpus,
    model: &HmmModel,
    samples: usize,
    mode: StreamMode,
    root: u64,
) -> CliResult<Vec<IntervalRecord>> {
    let author = &model.author;
    let tl = author_timeline(corpus, author)?;
    if tl.window_start != model.window_start || tl.len != model.window_len {
        return Err(CliError::Data(format!(
            "model for author {author} covers a different window than the corpus; retrain it"
        )));
    }
    let inference = hmm::infer(&tl, &model.params)?;
    let posterior = inference.posterior();
    let mut last: HashMap<(String, String), i64> = HashMap::new();
    let mut out = Vec::new();
    for c in corpus.by_author(author) {
        let prev = last.insert(mode.key(c), c.author_time);
        let Some(prev) = prev else { continue };
        let (Some(a), Some(b)) = (tl.index_of_epoch_minute(prev), tl.index_of_epoch_minute(c.author_time)) else {
            continue;
        };
        let expected = hmm::expected_coding_time(&posterior, a, b)?;
        let draws = hmm::sample_coding_times_with(
            &inference,
            a,
            b,
            samples,
            seed::derive(root, &["coding-times", &c.commit_id]),
        );
        out.push(IntervalRecord {
            commit: c.commit_id.clone(),
            author: author.clone(),
            project: c.project_id.clone(),
            interval_minutes: b - a,
            expected_hours: expected,
            samples: draws,
        });
    }
    Ok(out)
}

pub fn coding_times_records(
    corpus: &CommitCorpus,
    models: &[HmmModel],
    samples: usize,
    mode: StreamMode,
    root: u64,
) -> CliResult<Vec<IntervalRecord>> {
    let known: std::collections::HashSet<&str> = models.iter().map(|m| m.author.as_str()).collect();
    for a in corpus.authors() {
        if !known.contains(a.as_str()) {
            log::warn!("no model for author {a}; their commits get no coding time");
        }
    }
    let per_author: Vec<Vec<IntervalRecord>> = models
        .par_iter()
        .filter(|m| !corpus.by_author(&m.author).is_empty())
        .map(|m| author_intervals(corpus, m, samples, mode, root))
        .collect::<CliResult<_>>()?;
    let order: HashMap<&str, usize> = corpus
        .commits
        .iter()
        .enumerate()
        .map(|(i, c)| (c.commit_id.as_str(), i))
        .collect();
    let mut all: Vec<IntervalRecord> = per_author.into_iter().flatten().collect();
    all.sort_by_key(|r| order[r.commit.as_str()]);
    Ok(all)
}

pub fn coding_times(args: &CodingTimesArgs, root: u64) -> CliResult<usize> {
    let m = ManifestBuilder::start("coding-times", root);
    let corpus = load_corpus(&args.corpus)?;
    let models = load_hmm_models(&args.models_dir)?;
    let records = coding_times_records(&corpus, &models, args.samples, args.mode.into(), root)?;
    io::write_atomic(&args.out, &io::to_ndjson(&records))?;
    m.finish(
        &manifest_path(&args.out),
        &serde_json::json!({ "args": args }),
        &[&args.corpus, &args.models_dir],
        &[&args.out],
    )?;
    Ok(records.len())
}

pub fn parse_language(name: &str) -> CliResult<Language> {
    Language::parse(name)
        .filter(|l| *l != Language::Other)
        .ok_or_else(|| CliError::Usage(format!("--lang: unknown language {name:?}")))
}

pub fn build_dict(args: &BuildDictArgs, _seed: u64) -> CliResult<TokenDictionary> {
    let m = ManifestBuilder::start("build-dict", 0);
    let language = parse_language(&args.language)?;
    let corpus = load_corpus(&args.corpus)?;
    let top_n = args.top_n.unwrap_or_else(|| default_top_n(language));
    let dict = at_path(&args.corpus, build_dictionary(&corpus, language, top_n))?;
    let mut bytes = dict.to_json().into_bytes();
    bytes.push(b'\n');
    io::write_atomic(&args.out, &bytes)?;
    m.finish(
        &manifest_path(&args.out),
        &serde_json::json!({ "args": args, "top_n": top_n }),
        &[&args.corpus],
        &[&args.out],
    )?;
    Ok(dict)
}

/// Features of every commit touching at least one file in the dictionary's language.
pub fn featurize_corpus(corpus: &CommitCorpus, dict: &TokenDictionary) -> Vec<ChangeFeatures> {
    corpus
        .commits
        .par_iter()
        .map(|c| featurize(c, dict))
        .filter(|f| f.files_touched > 0)
        .collect()
}

pub fn featurize_cmd(args: &FeaturizeArgs, _seed: u64) -> CliResult<usize> {
    let m = ManifestBuilder::start("featurize", 0);
    let corpus = load_corpus(&args.corpus)?;
    let dict = load_dict(&args.dict)?;
    let features = featurize_corpus(&corpus, &dict);
    io::write_atomic(&args.out, &io::to_ndjson(&features))?;
    m.finish(
        &manifest_path(&args.out),
        &serde_json::json!({ "args": args }),
        &[&args.corpus, &args.dict],
        &[&args.out],
    )?;
    Ok(features.len())
}

pub fn mdn_config(flags: &MdnFlags) -> CliResult<MdnConfig> {
    let mut cfg = match &flags.config {
        Some(p) => io::read_config::<MdnConfig>(p)?,
        None => MdnConfig::default(),
    };
    if let Some(v) = flags.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = flags.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = flags.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = flags.components {
        cfg.components = v;
    }
    if let Some(v) = &flags.hidden {
        cfg.hidden = v.clone();
    }
    if let Some(v) = flags.holdout_fraction {
        cfg.holdout_fraction = v;
    }
    Ok(cfg)
}

/// Pair features with coding-time samples by commit; the expected value stands in for missing samples.
pub fn join_targets(features: &[ChangeFeatures], intervals: &[IntervalRecord]) -> (Vec<ChangeFeatures>, Vec<Vec<f64>>) {
    let by_commit: HashMap<&str, &IntervalRecord> = intervals.iter().map(|r| (r.commit.as_str(), r)).collect();
    features
        .iter()
        .filter_map(|f| {
            by_commit.get(f.commit.as_str()).map(|r| {
                let y = if r.samples.is_empty() {
                    vec![r.expected_hours]
                } else {
                    r.samples.clone()
                };
                (f.clone(), y)
            })
        })
        .unzip()
}

pub fn train_mdn_model(
    features: &[ChangeFeatures],
    intervals: &[IntervalRecord],
    cfg: &MdnConfig,
    dict: Option<&TokenDictionary>,
    root: u64,
) -> CliResult<MdnModel> {
    let (x, y) = join_targets(features, intervals);
    if x.is_empty() {
        return Err(CliError::Data("no featurized commit has a coding time".into()));
    }
    let cfg = MdnConfig {
        seed: seed::derive(root, &["train-mdn"]),
        ..cfg.clone()
    };
    let mut model = train_mdn(&x, &y, &cfg)?;
    model.dictionary_hash = dict.map(TokenDictionary::content_hash);
    Ok(model)
}

pub fn train_mdn_cmd(args: &TrainMdnArgs, root: u64) -> CliResult<MdnModel> {
    let m = ManifestBuilder::start("train-mdn", root);
    let cfg = mdn_config(&args.train)?;
    let features = load_features(&args.features)?;
    let intervals = load_intervals(&args.coding_times)?;
    let dict = args.dict.as_deref().map(load_dict).transpose()?;
    let model = train_mdn_model(&features, &intervals, &cfg, dict.as_ref(), root)?;
    io::write_atomic(&args.out, model.to_json().as_bytes())?;
    let mut inputs = vec![args.features.as_path(), args.coding_times.as_path()];
    inputs.extend(args.dict.as_deref());
    inputs.extend(args.train.config.as_deref());
    m.finish(
        &manifest_path(&args.out),
        &serde_json::json!({ "args": args, "train": cfg }),
        &inputs,
        &[&args.out],
    )?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub commit: String,
    pub sch_hours: f64,
    pub sch_minutes: f64,
}

pub fn predict_records(
    model: &MdnModel,
    features: &[ChangeFeatures],
    bounds: (f64, f64),
) -> CliResult<Vec<PredictionRecord>> {
    let sch = model.predict_sch_batch(features, bounds)?;
    Ok(features
        .iter()
        .zip(sch)
        .map(|(f, h)| PredictionRecord {
            commit: f.commit.clone(),
            sch_hours: h,
            sch_minutes: sch_minutes(h),
        })
        .collect())
}

/// Score a unified diff and render the result as one JSON line.
pub fn predict_patch(model: &MdnModel, dict: &TokenDictionary, patch: &str, bounds: (f64, f64)) -> CliResult<String> {
    let commit = Commit {
        commit_id: "patch".into(),
        author_id: String::new(),
        project_id: String::new(),
        author_time: 0,
        file_diffs: corpus::parse_unified_diff(patch, &FilterRules::default()),
    };
    let features = featurize(&commit, dict);
    if features.files_touched == 0 {
        log::warn!("patch touches no {} file; scoring an empty change", dict.language);
    }
    let mixture = model.forward(&features)?;
    let h = truncated_mixture_mean(&mixture, bounds.0, bounds.1)?;
    let out = serde_json::json!({
        "sch_hours": h,
        "sch_minutes": sch_minutes(h),
        "mixture": mixture,
    });
    Ok(out.to_string())
}

pub fn predict(args: &PredictArgs, _seed: u64) -> CliResult<()> {
    check_bounds(&args.bounds)?;
    let model = load_mdn(&args.model)?;
    let dict = args.dict.as_deref().map(load_dict).transpose()?;
    if let (Some(d), Some(p)) = (&dict, &args.dict) {
        check_dictionary(&model, d, p)?;
    }
    match (&args.patch, &args.features) {
        (Some(patch), None) => {
            let dict = dict.ok_or_else(|| CliError::Usage("--patch needs --dict".into()))?;
            let text = io::read_to_string(patch)?;
            println!("{}", predict_patch(&model, &dict, &text, args.bounds.pair())?);
            Ok(())
        }
        (None, Some(features_path)) => {
            let m = ManifestBuilder::start("predict", 0);
            let out = args
                .out
                .as_ref()
                .ok_or_else(|| CliError::Usage("--features needs --out".into()))?;
            let features = load_features(features_path)?;
            let records = predict_records(&model, &features, args.bounds.pair())?;
            io::write_atomic(out, &io::to_ndjson(&records))?;
            let mut inputs = vec![args.model.as_path(), features_path.as_path()];
            inputs.extend(args.dict.as_deref());
            m.finish(
                &manifest_path(out),
                &serde_json::json!({ "args": args }),
                &inputs,
                &[out],
            )?;
            Ok(())
        }
        _ => Err(CliError::Usage("give exactly one of --patch or --features".into())),
    }
}

/// Interval records keyed by commit.
pub fn intervals_by_commit(records: Vec<IntervalRecord>) -> BTreeMap<String, IntervalRecord> {
    records.into_iter().map(|r| (r.commit.clone(), r)).collect()
}
