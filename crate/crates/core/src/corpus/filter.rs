use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Language;
use crate::error::{Error, Result};

/// Rules deciding which files represent authored work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterRules {
    /// Extensions (without dot, lowercase) accepted for each language.
    pub extension_allowlist: BTreeMap<Language, Vec<String>>,
    /// A file is dropped when any path component equals one of these.
    pub excluded_path_fragments: Vec<String>,
    /// Files whose mean line length exceeds this are treated as minified.
    pub max_mean_line_length: f64,
    /// Marker strings that flag generated files when found near the top.
    pub generated_markers: Vec<String>,
    pub marker_scan_lines: usize,
    /// Commits closer than this many minutes within one stream are squashed.
    pub squash_minutes: i64,
}

impl Default for FilterRules {
    fn default() -> Self {
        let extension_allowlist = Language::ALL
            .into_iter()
            .filter(|l| *l != Language::Other)
            .map(|l| (l, l.default_extensions().iter().map(|e| e.to_string()).collect()))
            .collect();
        FilterRules {
            extension_allowlist,
            excluded_path_fragments: ["vendor", "third_party", "generated", "dist", "build"]
                .into_iter()
                .map(String::from)
                .collect(),
            max_mean_line_length: 200.0,
            generated_markers: vec!["DO NOT EDIT".into(), "@generated".into()],
            marker_scan_lines: 5,
            squash_minutes: super::DEFAULT_SQUASH_MINUTES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileVerdict {
    Keep,
    NotAllowlisted,
    ExcludedPath,
    Minified,
    Generated,
}

impl FilterRules {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Language of `path` under this allowlist; `Other` when not listed.
    pub fn language_of(&self, path: &str) -> Language {
        let file_name = path.rsplit('/').next().unwrap_or(path);
        let ext = match file_name.rsplit_once('.') {
            Some((stem, ext)) if !stem.is_empty() => ext.to_ascii_lowercase(),
            _ => return Language::Other,
        };
        self.extension_allowlist
            .iter()
            .find(|(_, exts)| exts.iter().any(|e| e.eq_ignore_ascii_case(&ext)))
            .map(|(l, _)| *l)
            .unwrap_or(Language::Other)
    }

    pub fn path_verdict(&self, path: &str) -> FileVerdict {
        if self.language_of(path) == Language::Other {
            return FileVerdict::NotAllowlisted;
        }
        let excluded = path
            .split('/')
            .any(|component| self.excluded_path_fragments.iter().any(|f| f == component));
        if excluded {
            FileVerdict::ExcludedPath
        } else {
            FileVerdict::Keep
        }
    }

    /// Verdict for a file given its path and content.
    pub fn verdict(&self, path: &str, content: &str) -> FileVerdict {
        match self.path_verdict(path) {
            FileVerdict::Keep => {}
            other => return other,
        }
        let head_has_marker = content
            .lines()
            .take(self.marker_scan_lines)
            .any(|l| self.generated_markers.iter().any(|m| l.contains(m.as_str())));
        if head_has_marker {
            return FileVerdict::Generated;
        }
        if mean_line_length(content) > self.max_mean_line_length {
            return FileVerdict::Minified;
        }
        FileVerdict::Keep
    }
}

/// Mean number of characters per line; 0 for empty text.
pub(crate) fn mean_line_length(content: &str) -> f64 {
    let mut lines = 0usize;
    let mut chars = 0usize;
    for l in content.lines() {
        lines += 1;
        chars += l.chars().count();
    }
    if lines == 0 {
        0.0
    } else {
        chars as f64 / lines as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vendor_path_excluded() {
        let rules = FilterRules::default();
        assert_eq!(rules.verdict("vendor/lib.js", "var a;"), FileVerdict::ExcludedPath);
        assert_eq!(rules.verdict("src/vendored/lib.js", "var a;"), FileVerdict::Keep);
        assert_eq!(rules.verdict("src/Main.java", "class A {}"), FileVerdict::Keep);
        assert_eq!(rules.verdict("README.md", "# hi"), FileVerdict::NotAllowlisted);
    }

    #[test]
    fn minified_by_mean_line_length() {
        // Two lines of 300 and 150 characters: mean 225 > 200.
        let content = format!("{}\n{}\n", "x".repeat(300), "y".repeat(150));
        assert_eq!(mean_line_length(&content), 225.0);
        let rules = FilterRules::default();
        assert_eq!(rules.verdict("app.min.js", &content), FileVerdict::Minified);

        // 300 and 100: mean exactly 200 is not above the threshold.
        let content = format!("{}\n{}\n", "x".repeat(300), "y".repeat(100));
        assert_eq!(rules.verdict("app.js", &content), FileVerdict::Keep);
    }

    #[test]
    fn generated_marker_only_near_top() {
        let rules = FilterRules::default();
        let top = "// Code generated by protoc. DO NOT EDIT.\npackage x\n";
        assert_eq!(rules.verdict("x.go", top), FileVerdict::Generated);
        let deep = format!("{}// @generated\n", "a := 1\n".repeat(5));
        assert_eq!(rules.verdict("x.go", &deep), FileVerdict::Keep);
    }

    #[test]
    fn rules_roundtrip_through_json() {
        let rules = FilterRules::default();
        let s = serde_json::to_string(&rules).unwrap();
        let back: FilterRules = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rules);
        let partial: FilterRules = serde_json::from_str(r#"{"max_mean_line_length": 80}"#).unwrap();
        assert_eq!(partial.max_mean_line_length, 80.0);
        assert_eq!(partial.squash_minutes, 2);
    }
}
