use std::fs;
use std::path::Path;
use std::process::Command;

use stdcoder::corpus::{ingest, ingest_git_log, FilterRules, Language, StreamMode};

fn git(dir: &Path, args: &[&str], author: &str, epoch: i64) {
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

fn commit(dir: &Path, files: &[(&str, Option<&[u8]>)], author: &str, epoch: i64) {
    for (path, content) in files {
        let p = dir.join(path);
        match content {
            Some(c) => {
                fs::create_dir_all(p.parent().unwrap()).unwrap();
                fs::write(&p, c).unwrap();
            }
            None => fs::remove_file(&p).unwrap(),
        }
    }
    git(dir, &["add", "-A"], author, epoch);
    git(dir, &["commit", "-q", "--allow-empty", "-m", "change"], author, epoch);
}

const T0: i64 = 1_704_099_600; // 2024-01-01 09:00 UTC

#[test]
fn ingests_filtered_line_diffs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("demo");
    fs::create_dir(&dir).unwrap();
    git(&dir, &["init", "-q", "-b", "main"], "alice", T0);

    commit(
        &dir,
        &[
            ("src/Main.java", Some(b"class Main {\n  int x = 1;\n}\n")),
            ("vendor/Lib.java", Some(b"class Lib {}\n")),
            ("logo.png", Some(b"\x89PNG\0\0binary")),
        ],
        "alice",
        T0,
    );
    commit(
        &dir,
        &[("src/Main.java", Some(b"class Main {\n  int x = 2;\n  int y = 3;\n}\n"))],
        "alice",
        T0 + 3600,
    );
    commit(
        &dir,
        &[
            ("tool.py", Some(b"# @generated\nprint(1)\n")),
            ("app.py", Some(b"def f():\n    return 1\n")),
            ("bin/Data.java", Some(b"\0\0\0".as_slice())),
        ],
        "bob",
        T0 + 7200,
    );
    commit(&dir, &[("app.py", None)], "bob", T0 + 10_800);

    let corpus = ingest_git_log(&dir, &FilterRules::default(), StreamMode::AuthorProject).unwrap();
    assert_eq!(corpus.len(), 4);
    assert_eq!(corpus.stats.commits_seen, 4);
    let c = &corpus.commits;
    assert!(c.iter().all(|c| c.project_id == "demo"));
    assert_eq!(c[0].author_id, "alice@example.com");
    assert_eq!(c[0].author_time, T0 / 60);
    assert_eq!(c[3].author_time, (T0 + 10_800) / 60);

    // Vendor path and the non-source image are dropped.
    assert_eq!(c[0].file_diffs.len(), 1);
    assert_eq!(c[0].file_diffs[0].path, "src/Main.java");
    assert_eq!(c[0].file_diffs[0].language, Language::Java);
    assert_eq!(c[0].lines_added(), 3);

    assert_eq!(c[1].file_diffs[0].deleted_lines, ["  int x = 1;"]);
    assert_eq!(c[1].file_diffs[0].added_lines, ["  int x = 2;", "  int y = 3;"]);

    // Generated marker and binary content are skipped; only app.py survives.
    assert_eq!(c[2].file_diffs.len(), 1);
    assert_eq!(c[2].file_diffs[0].language, Language::Python);
    assert_eq!(corpus.stats.files_undecodable, 1);

    assert_eq!(c[3].lines_deleted(), 2);
    assert_eq!(c[3].lines_added(), 0);

    // Directory dispatch goes through git.
    let again = ingest(&dir, &FilterRules::default(), StreamMode::AuthorProject).unwrap();
    assert_eq!(again.commits, corpus.commits);
}

#[test]
fn squashes_quick_successive_commits() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("quick");
    fs::create_dir(&dir).unwrap();
    git(&dir, &["init", "-q", "-b", "main"], "carol", T0);
    commit(&dir, &[("A.java", Some(b"a\n"))], "carol", T0);
    commit(&dir, &[("B.java", Some(b"b\n"))], "carol", T0 + 60);
    commit(&dir, &[("C.java", Some(b"c\n"))], "carol", T0 + 600);
    let corpus = ingest_git_log(&dir, &FilterRules::default(), StreamMode::AuthorProject).unwrap();
    assert_eq!(corpus.len(), 2);
    assert_eq!(corpus.stats.commits_squashed, 1);
    assert_eq!(corpus.commits[0].file_diffs.len(), 2);
    assert_eq!(corpus.commits[0].author_time, (T0 + 60) / 60);
}

#[test]
fn rejects_non_repositories() {
    let tmp = tempfile::tempdir().unwrap();
    let err = ingest_git_log(tmp.path(), &FilterRules::default(), StreamMode::AuthorProject).unwrap_err();
    assert!(err.to_string().contains("not a readable git repository"), "{err}");
}
