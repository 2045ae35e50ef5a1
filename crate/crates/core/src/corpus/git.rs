use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use log::warn;

use super::{
    compute_diff, squash_corpus, Commit, CommitCorpus, FileDiff, FileVerdict, FilterRules, IngestStats, StreamMode,
};
use crate::error::{Error, Result};

fn git(repo: &Path, args: &[&str]) -> Result<Vec<u8>> {
    let out = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .output()
        .map_err(|e| Error::Git(format!("cannot run git: {e}")))?;
    if !out.status.success() {
        return Err(Error::Git(format!(
            "`git {}` failed in {}: {}",
            args.join(" "),
            repo.display(),
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    Ok(out.stdout)
}

/// Long-lived `git cat-file --batch` process for reading blobs.
struct BlobReader {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl BlobReader {
    fn spawn(repo: &Path) -> Result<Self> {
        let mut child = Command::new("git")
            .arg("-C")
            .arg(repo)
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Git(format!("cannot run git cat-file: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(BlobReader { child, stdin, stdout })
    }

    /// Contents of `<rev>:<path>`, or `None` when the object does not exist.
    fn read(&mut self, rev: &str, path: &str) -> Result<Option<Vec<u8>>> {
        let broken = |e: std::io::Error| Error::Git(format!("cat-file pipe: {e}"));
        writeln!(self.stdin, "{rev}:{path}").map_err(broken)?;
        self.stdin.flush().map_err(broken)?;
        let mut header = String::new();
        self.stdout.read_line(&mut header).map_err(broken)?;
        let header = header.trim_end();
        if header.ends_with(" missing") || header.ends_with(" ambiguous") {
            return Ok(None);
        }
        let size: usize = header
            .rsplit(' ')
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Git(format!("unexpected cat-file header `{header}`")))?;
        let mut buf = vec![0u8; size + 1];
        self.stdout.read_exact(&mut buf).map_err(broken)?;
        buf.pop();
        Ok(Some(buf))
    }
}

impl Drop for BlobReader {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct LogEntry {
    id: String,
    first_parent: Option<String>,
    author: String,
    time_secs: i64,
}

fn read_log(repo: &Path) -> Result<Vec<LogEntry>> {
    // An empty repository has no refs; `git log --all` then prints nothing.
    let raw = git(repo, &["log", "--all", "--format=%H%x1f%P%x1f%ae%x1f%at"])?;
    let text = String::from_utf8_lossy(&raw);
    let mut entries = Vec::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let fields: Vec<&str> = line.split('\x1f').collect();
        if fields.len() != 4 {
            return Err(Error::Git(format!("unexpected log line `{line}`")));
        }
        let time_secs = fields[3]
            .parse()
            .map_err(|_| Error::Git(format!("bad author time in `{line}`")))?;
        entries.push(LogEntry {
            id: fields[0].to_string(),
            first_parent: fields[1].split_whitespace().next().map(String::from),
            author: fields[2].to_string(),
            time_secs,
        });
    }
    Ok(entries)
}

/// (status letter, path) pairs changed by `commit` relative to its first parent.
fn changed_files(repo: &Path, entry: &LogEntry) -> Result<Vec<(char, String)>> {
    let mut args = vec![
        "diff-tree",
        "-r",
        "-z",
        "--no-renames",
        "--no-commit-id",
        "--name-status",
    ];
    match &entry.first_parent {
        Some(p) => {
            args.push(p);
            args.push(&entry.id);
        }
        None => {
            args.push("--root");
            args.push(&entry.id);
        }
    }
    let raw = git(repo, &args)?;
    let mut fields = raw.split(|b| *b == 0).filter(|f| !f.is_empty());
    let mut out = Vec::new();
    while let (Some(status), Some(path)) = (fields.next(), fields.next()) {
        let status = status.first().copied().unwrap_or(b'M') as char;
        out.push((status, String::from_utf8_lossy(path).into_owned()));
    }
    Ok(out)
}

fn decode(bytes: Option<Vec<u8>>) -> std::result::Result<String, ()> {
    match bytes {
        None => Ok(String::new()),
        Some(b) if b.contains(&0) => Err(()),
        Some(b) => String::from_utf8(b).map_err(|_| ()),
    }
}

/// Read a git repository into a filtered, squashed corpus.
///
/// Every commit reachable from any ref is included. Merge commits are diffed
/// against their first parent only.
pub fn ingest_git_log(repo: &Path, rules: &FilterRules, mode: StreamMode) -> Result<CommitCorpus> {
    git(repo, &["rev-parse", "--git-dir"])
        .map_err(|_| Error::Git(format!("{} is not a readable git repository", repo.display())))?;
    let project_id = std::fs::canonicalize(repo)
        .map_err(|e| Error::io(repo, e))?
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "repo".into());

    let entries = read_log(repo)?;
    let mut blobs = BlobReader::spawn(repo)?;
    let mut stats = IngestStats {
        commits_seen: entries.len(),
        ..Default::default()
    };
    let mut commits = Vec::with_capacity(entries.len());
    for entry in &entries {
        let mut diffs = Vec::new();
        for (status, path) in changed_files(repo, entry)? {
            if rules.path_verdict(&path) != FileVerdict::Keep {
                stats.files_filtered += 1;
                continue;
            }
            let child = if status == 'D' {
                None
            } else {
                blobs.read(&entry.id, &path)?
            };
            let parent = match (&entry.first_parent, status) {
                (Some(p), s) if s != 'A' => blobs.read(p, &path)?,
                _ => None,
            };
            let (child, parent) = match (decode(child), decode(parent)) {
                (Ok(c), Ok(p)) => (c, p),
                _ => {
                    warn!("skipping undecodable file {path} in {}", entry.id);
                    stats.files_undecodable += 1;
                    continue;
                }
            };
            let content = if status == 'D' { &parent } else { &child };
            if rules.verdict(&path, content) != FileVerdict::Keep {
                stats.files_filtered += 1;
                continue;
            }
            let d = compute_diff(&parent, &child);
            if d.added.is_empty() && d.deleted.is_empty() {
                continue;
            }
            diffs.push(FileDiff {
                language: rules.language_of(&path),
                path,
                added_lines: d.added,
                deleted_lines: d.deleted,
            });
        }
        diffs.sort_by(|a, b| a.path.cmp(&b.path));
        commits.push(Commit {
            commit_id: entry.id.clone(),
            author_id: entry.author.clone(),
            project_id: project_id.clone(),
            author_time: entry.time_secs.div_euclid(60),
            file_diffs: diffs,
        });
    }
    let squashed = squash_corpus(commits, rules.squash_minutes, mode);
    stats.commits_squashed = stats.commits_seen - squashed.len();
    let mut corpus = CommitCorpus::new(squashed);
    corpus.stats = stats;
    Ok(corpus)
}
