#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// 2024-01-01 09:00 UTC, a Monday.
pub const T0: i64 = 1_704_099_600;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_stdcoder"))
}

/// Run the binary and capture its output.
pub fn stdcoder(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

pub fn git(dir: &Path, args: &[&str], author: &str, epoch: i64) {
    let date = format!("@{epoch} +0000");
    let status = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(args)
        .env("GIT_AUTHOR_NAME", author)
        .env("GIT_AUTHOR_EMAIL", format!("{author}@example.com"))
        .env("GIT_COMMITTER_NAME", author)
        .env("GIT_COMMITTER_EMAIL", format!("{author}@example.com"))
        .env("GIT_AUTHOR_DATE", &date)
        .env("GIT_COMMITTER_DATE", &date)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("HOME", dir)
        .status()
        .expect("git runs");
    assert!(status.success(), "git {args:?}");
}

const SNIPPETS: [&str; 10] = [
    "    private int count = 0;",
    "    public void reset() { count = 0; }",
    "    if (count <= limit) { count++; }",
    "    protected String name = \"x\";",
    "    for (int i = 0; i < n; i++) { total += i; }",
    "    return value != null ? value : fallback;",
    "    static final long LIMIT = 100L;",
    "    while (queue.size() > 0) { queue.poll(); }",
    "    public boolean ok() { return count >= 0; }",
    "    // TODO tidy this up",
];

/// Git repository with `commits` commits by `main` plus a few by `occasional`,
/// spaced like working-hour sessions on weekdays.
pub fn fixture_repo(dir: &Path, commits: usize, seed: u64) -> PathBuf {
    let repo = dir.join("fixture");
    fs::create_dir_all(&repo).unwrap();
    git(&repo, &["init", "-q", "-b", "main"], "main", T0);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut files: Vec<Vec<String>> = vec![Vec::new(); 6];
    let mut t = T0;
    for i in 0..commits + 3 {
        let author = if i % 20 == 7 { "occasional" } else { "main" };
        t += 60 * rng.random_range(3..45);
        let day = (t - T0).div_euclid(86_400);
        let hour = (t - T0).rem_euclid(86_400) / 3600 + 9;
        if hour >= 17 {
            let mut next = day + 1;
            while next % 7 >= 5 {
                next += 1;
            }
            t = T0 + next * 86_400 + 60 * rng.random_range(0..30);
        }
        let touched = rng.random_range(1..=3usize);
        for _ in 0..touched {
            let f = rng.random_range(0..files.len());
            let body = &mut files[f];
            let edits = rng.random_range(1..6);
            for _ in 0..edits {
                if !body.is_empty() && rng.random_bool(0.3) {
                    let k = rng.random_range(0..body.len());
                    body.remove(k);
                } else {
                    body.push(SNIPPETS[rng.random_range(0..SNIPPETS.len())].to_string());
                }
            }
            let text = format!("class File{f} {{\n{}\n}}\n", body.join("\n"));
            fs::create_dir_all(repo.join("src")).unwrap();
            fs::write(repo.join(format!("src/File{f}.java")), text).unwrap();
        }
        git(&repo, &["add", "-A"], author, t);
        git(&repo, &["commit", "-q", "--allow-empty", "-m", "change"], author, t);
    }
    repo
}

/// Pipeline config with short training so test runs stay fast.
pub fn quick_config(work: &Path, repo: &Path, extra: &str) -> PathBuf {
    let cfg = work.join("pipeline.toml");
    let text = format!(
        r#"seed = 7
work_dir = "{work}"
inputs = ["{repo}"]
language = "java"
samples = 20
{extra}

[hmm]
max_epochs = 40

[mdn]
hidden = [32, 16]
components = 4
epochs = 3
batch_size = 256
holdout_fraction = 0.3

[analyses]
run = ["yy", "correction", "table1", "beta", "file-spread", "token-swap"]
yy_bins = 5
max_files = 3
token_swaps = [["private", "public"]]
resamples = 200
"#,
        work = work.join("work").display(),
        repo = repo.display(),
    );
    fs::write(&cfg, text).unwrap();
    cfg
}
