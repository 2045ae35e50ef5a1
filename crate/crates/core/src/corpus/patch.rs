use super::{FileDiff, FileVerdict, FilterRules};

/// Per-file line changes from a unified diff, such as `git diff` output.
///
/// Files rejected by the path rules are dropped. Content rules are not applied
/// because a patch carries no full file snapshot.
pub fn parse_unified_diff(text: &str, rules: &FilterRules) -> Vec<FileDiff> {
    let mut files: Vec<FileDiff> = Vec::new();
    let mut current: Option<FileDiff> = None;
    let mut old_path: Option<String> = None;
    let mut in_hunk = false;

    let finish = |f: Option<FileDiff>, files: &mut Vec<FileDiff>| {
        if let Some(f) = f {
            if rules.path_verdict(&f.path) == FileVerdict::Keep && f.churn() > 0 {
                files.push(f);
            }
        }
    };

    for line in text.lines() {
        if line.starts_with("diff ") {
            finish(current.take(), &mut files);
            old_path = None;
            in_hunk = false;
        } else if let Some(p) = line.strip_prefix("--- ").filter(|_| !in_hunk || current.is_none()) {
            finish(current.take(), &mut files);
            old_path = Some(strip_prefix_dir(p));
            in_hunk = false;
        } else if let Some(p) = line.strip_prefix("+++ ").filter(|_| !in_hunk) {
            let mut path = strip_prefix_dir(p);
            if path == "/dev/null" {
                path = old_path.clone().unwrap_or_default();
            }
            current = Some(FileDiff {
                language: rules.language_of(&path),
                path,
                added_lines: Vec::new(),
                deleted_lines: Vec::new(),
            });
        } else if line.starts_with("@@") {
            in_hunk = true;
        } else if in_hunk {
            if let Some(f) = current.as_mut() {
                if let Some(l) = line.strip_prefix('+') {
                    f.added_lines.push(l.to_string());
                } else if let Some(l) = line.strip_prefix('-') {
                    f.deleted_lines.push(l.to_string());
                }
            }
        }
    }
    finish(current.take(), &mut files);
    files
}

fn strip_prefix_dir(p: &str) -> String {
    let p = p.split('\t').next().unwrap_or(p).trim();
    if p == "/dev/null" {
        return p.to_string();
    }
    p.strip_prefix("a/")
        .or_else(|| p.strip_prefix("b/"))
        .unwrap_or(p)
        .to_string()
}
