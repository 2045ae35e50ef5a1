//! Canonical commit corpus: timestamped commits with filtered per-file line diffs.
//!
//! A corpus is produced either from a git repository (see [`ingest_git_log`]) or
//! from an NDJSON export with one commit per line. Either way the same filter
//! rules and sub-threshold squashing apply.

mod diff;
mod filter;
mod git;
mod patch;
mod squash;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diff::{compute_diff, LineDiff};
pub use filter::{FileVerdict, FilterRules};
pub use git::ingest_git_log;
pub use patch::parse_unified_diff;
pub use squash::{squash_commits, squash_corpus, StreamMode, DEFAULT_SQUASH_MINUTES};

/// Source language of a file, decided by extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    Python,
    Javascript,
    Typescript,
    C,
    Cpp,
    Csharp,
    Go,
    Rust,
    Other,
}

impl Language {
    pub const ALL: [Language; 10] = [
        Language::Java,
        Language::Python,
        Language::Javascript,
        Language::Typescript,
        Language::C,
        Language::Cpp,
        Language::Csharp,
        Language::Go,
        Language::Rust,
        Language::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Language::Java => "java",
            Language::Python => "python",
            Language::Javascript => "javascript",
            Language::Typescript => "typescript",
            Language::C => "c",
            Language::Cpp => "cpp",
            Language::Csharp => "csharp",
            Language::Go => "go",
            Language::Rust => "rust",
            Language::Other => "other",
        }
    }

    pub fn parse(name: &str) -> Option<Language> {
        Language::ALL.into_iter().find(|l| l.name().eq_ignore_ascii_case(name))
    }

    pub fn default_extensions(self) -> &'static [&'static str] {
        match self {
            Language::Java => &["java"],
            Language::Python => &["py"],
            Language::Javascript => &["js", "jsx", "mjs", "cjs"],
            Language::Typescript => &["ts", "tsx"],
            Language::C => &["c", "h"],
            Language::Cpp => &["cc", "cpp", "cxx", "hpp", "hh", "hxx"],
            Language::Csharp => &["cs"],
            Language::Go => &["go"],
            Language::Rust => &["rs"],
            Language::Other => &[],
        }
    }

    /// Language for a path under the default extension table.
    pub fn from_path(path: &str) -> Language {
        let ext = match path.rsplit_once('.') {
            Some((stem, ext)) if !stem.is_empty() && !ext.contains('/') => ext.to_ascii_lowercase(),
            _ => return Language::Other,
        };
        Language::ALL
            .into_iter()
            .find(|l| l.default_extensions().contains(&ext.as_str()))
            .unwrap_or(Language::Other)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Line-level change to one file. A modified line is one deletion plus one addition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub path: String,
    #[serde(rename = "lang")]
    pub language: Language,
    #[serde(rename = "added")]
    pub added_lines: Vec<String>,
    #[serde(rename = "deleted")]
    pub deleted_lines: Vec<String>,
}

impl FileDiff {
    pub fn churn(&self) -> usize {
        self.added_lines.len() + self.deleted_lines.len()
    }
}

/// A timestamped code change. Times are whole UTC minutes since the Unix epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    #[serde(rename = "commit")]
    pub commit_id: String,
    #[serde(rename = "author")]
    pub author_id: String,
    #[serde(rename = "project")]
    pub project_id: String,
    #[serde(rename = "author_time_utc_min")]
    pub author_time: i64,
    #[serde(rename = "diffs")]
    pub file_diffs: Vec<FileDiff>,
}

impl Commit {
    pub fn lines_added(&self) -> usize {
        self.file_diffs.iter().map(|d| d.added_lines.len()).sum()
    }

    pub fn lines_deleted(&self) -> usize {
        self.file_diffs.iter().map(|d| d.deleted_lines.len()).sum()
    }

    pub fn churn(&self) -> usize {
        self.lines_added() + self.lines_deleted()
    }
}

/// Counters for material dropped during ingestion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub commits_seen: usize,
    pub files_filtered: usize,
    pub files_undecodable: usize,
    pub commits_squashed: usize,
}

/// Immutable, time-ordered set of commits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommitCorpus {
    pub commits: Vec<Commit>,
    pub stats: IngestStats,
}

impl CommitCorpus {
    pub fn new(mut commits: Vec<Commit>) -> Self {
        sort_commits(&mut commits);
        CommitCorpus {
            commits,
            stats: IngestStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.commits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commits.is_empty()
    }

    pub fn authors(&self) -> Vec<String> {
        let mut authors: Vec<String> = self.commits.iter().map(|c| c.author_id.clone()).collect();
        authors.sort();
        authors.dedup();
        authors
    }

    pub fn by_author(&self, author: &str) -> Vec<&Commit> {
        self.commits.iter().filter(|c| c.author_id == author).collect()
    }

    pub fn by_project(&self) -> BTreeMap<String, Vec<&Commit>> {
        let mut out: BTreeMap<String, Vec<&Commit>> = BTreeMap::new();
        for c in &self.commits {
            out.entry(c.project_id.clone()).or_default().push(c);
        }
        out
    }

    pub fn get(&self, commit_id: &str) -> Option<&Commit> {
        self.commits.iter().find(|c| c.commit_id == commit_id)
    }

    pub fn read_ndjson(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut commits = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let commit: Commit = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            commits.push(commit);
        }
        check_unique_ids(&commits)?;
        Ok(CommitCorpus::new(commits))
    }

    pub fn write_ndjson<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        for c in &self.commits {
            serde_json::to_writer(&mut out, c)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

pub(crate) fn sort_commits(commits: &mut [Commit]) {
    commits
        .sort_by(|a, b| (a.author_time, &a.author_id, &a.commit_id).cmp(&(b.author_time, &b.author_id, &b.commit_id)));
}

fn check_unique_ids(commits: &[Commit]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for c in commits {
        if !seen.insert(c.commit_id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate commit id {}", c.commit_id)));
        }
    }
    Ok(())
}

/// Ingest an NDJSON commit export, re-applying filter rules and squashing.
pub fn ingest_ndjson(path: &Path, rules: &FilterRules, mode: StreamMode) -> Result<CommitCorpus> {
    let raw = CommitCorpus::read_ndjson(path)?;
    let mut stats = IngestStats {
        commits_seen: raw.len(),
        ..Default::default()
    };
    let commits = raw
        .commits
        .into_iter()
        .map(|mut c| {
            let before = c.file_diffs.len();
            c.file_diffs.retain_mut(|d| {
                d.language = rules.language_of(&d.path);
                // An export carries no file snapshots, so content checks run on the diff lines.
                let probe = if d.added_lines.is_empty() {
                    &d.deleted_lines
                } else {
                    &d.added_lines
                };
                let text = probe.join("\n");
                rules.verdict(&d.path, &text) == FileVerdict::Keep
            });
            stats.files_filtered += before - c.file_diffs.len();
            c
        })
        .collect();
    let squashed = squash_corpus(commits, rules.squash_minutes, mode);
    stats.commits_squashed = stats.commits_seen - squashed.len();
    let mut corpus = CommitCorpus::new(squashed);
    corpus.stats = stats;
    Ok(corpus)
}

/// Ingest from a git working copy or an NDJSON export, whichever `path` is.
pub fn ingest(path: &Path, rules: &FilterRules, mode: StreamMode) -> Result<CommitCorpus> {
    if path.is_file() {
        ingest_ndjson(path, rules, mode)
    } else {
        ingest_git_log(path, rules, mode)
    }
}
