use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{sort_commits, Commit};

pub const DEFAULT_SQUASH_MINUTES: i64 = 2;

/// How commits are grouped into streams for squashing and interval computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamMode {
    #[default]
    AuthorProject,
    AuthorGlobal,
}

impl StreamMode {
    pub fn key(self, c: &Commit) -> (String, String) {
        match self {
            StreamMode::AuthorProject => (c.author_id.clone(), c.project_id.clone()),
            StreamMode::AuthorGlobal => (c.author_id.clone(), String::new()),
        }
    }
}

/// Merge maximal runs whose successive gaps are below `threshold` minutes.
///
/// Input must be one stream sorted by `author_time`. A merged commit keeps the
/// id and timestamp of the last run member and the diffs of all members in order.
pub fn squash_commits(commits: Vec<Commit>, threshold: i64) -> Vec<Commit> {
    let mut out: Vec<Commit> = Vec::with_capacity(commits.len());
    for c in commits {
        match out.last_mut() {
            Some(prev) if c.author_time - prev.author_time < threshold => {
                let mut diffs = std::mem::take(&mut prev.file_diffs);
                diffs.extend(c.file_diffs);
                *prev = Commit { file_diffs: diffs, ..c };
            }
            _ => out.push(c),
        }
    }
    out
}

/// Squash every stream of a mixed commit list; output is globally time-ordered.
pub fn squash_corpus(commits: Vec<Commit>, threshold: i64, mode: StreamMode) -> Vec<Commit> {
    let mut streams: BTreeMap<(String, String), Vec<Commit>> = BTreeMap::new();
    for c in commits {
        streams.entry(mode.key(&c)).or_default().push(c);
    }
    let mut out = Vec::new();
    for (_, mut stream) in streams {
        sort_commits(&mut stream);
        out.extend(squash_commits(stream, threshold));
    }
    sort_commits(&mut out);
    out
}
