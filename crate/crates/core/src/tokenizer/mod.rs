//! Token dictionaries and bag-of-token features for commit diffs.

mod lexicon;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Commit, CommitCorpus, Language};
use crate::error::{Error, Result};

pub use lexicon::{keywords, separators};

/// Dictionary width giving a 116-wide model input once the five surface slots are added.
pub const DEFAULT_DICTIONARY_WIDTH: usize = 111;

/// Number of surface metrics appended after the dictionary slots.
pub const SURFACE_WIDTH: usize = 5;

pub fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Separator,
    Keyword,
    Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub token: String,
    pub index: usize,
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    language: Language,
    separators: Vec<DictionaryEntry>,
    keywords: Vec<DictionaryEntry>,
    frequent_words: Vec<DictionaryEntry>,
}

/// Per-language token inventory with a fixed feature index for every token.
///
/// Indices run over separators, then keywords, then frequent words.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDictionary {
    pub language: Language,
    pub separators: Vec<String>,
    pub keywords: Vec<String>,
    pub frequent_words: Vec<String>,
    index_of: HashMap<String, usize>,
    max_separator_len: usize,
}

impl TokenDictionary {
    pub fn new(
        language: Language,
        separators: Vec<String>,
        keywords: Vec<String>,
        frequent_words: Vec<String>,
    ) -> Result<Self> {
        let mut index_of = HashMap::new();
        for (i, tok) in separators.iter().chain(&keywords).chain(&frequent_words).enumerate() {
            if tok.is_empty() {
                return Err(Error::InvalidInput("empty token in dictionary".into()));
            }
            if index_of.insert(tok.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("token `{tok}` listed twice in dictionary")));
            }
        }
        if let Some(bad) = separators
            .iter()
            .find(|s| s.chars().any(|c| is_word_char(c) || c.is_whitespace()))
        {
            return Err(Error::InvalidInput(format!(
                "separator `{bad}` contains word or space characters"
            )));
        }
        if let Some(bad) = keywords
            .iter()
            .chain(&frequent_words)
            .find(|w| !w.chars().all(is_word_char))
        {
            return Err(Error::InvalidInput(format!(
                "word `{bad}` contains non-word characters"
            )));
        }
        let max_separator_len = separators.iter().map(|s| s.chars().count()).max().unwrap_or(0);
        Ok(TokenDictionary {
            language,
            separators,
            keywords,
            frequent_words,
            index_of,
            max_separator_len,
        })
    }

    /// Number of dictionary slots (D).
    pub fn len(&self) -> usize {
        self.index_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_of.is_empty()
    }

    pub fn feature_width(&self) -> usize {
        self.len() + SURFACE_WIDTH
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index_of.get(token).copied()
    }

    pub fn kind_of(&self, index: usize) -> Option<TokenKind> {
        let s = self.separators.len();
        let k = self.keywords.len();
        match index {
            i if i < s => Some(TokenKind::Separator),
            i if i < s + k => Some(TokenKind::Keyword),
            i if i < self.len() => Some(TokenKind::Word),
            _ => None,
        }
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.separators
            .iter()
            .chain(&self.keywords)
            .chain(&self.frequent_words)
            .nth(index)
            .map(String::as_str)
    }

    fn to_file(&self) -> DictionaryFile {
        let entries = |list: &[String], offset: usize| {
            list.iter()
                .enumerate()
                .map(|(i, t)| DictionaryEntry {
                    token: t.clone(),
                    index: offset + i,
                })
                .collect()
        };
        let s = self.separators.len();
        let k = self.keywords.len();
        DictionaryFile {
            language: self.language,
            separators: entries(&self.separators, 0),
            keywords: entries(&self.keywords, s),
            frequent_words: entries(&self.frequent_words, s + k),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("dictionary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DictionaryFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("dictionary file: {e}")))?;
        let ordered = |mut list: Vec<DictionaryEntry>| {
            list.sort_by_key(|e| e.index);
            list
        };
        let seps = ordered(file.separators);
        let kws = ordered(file.keywords);
        let words = ordered(file.frequent_words);
        let expected = seps
            .iter()
            .chain(&kws)
            .chain(&words)
            .enumerate()
            .all(|(i, e)| e.index == i);
        if !expected {
            return Err(Error::InvalidInput("dictionary indices are not contiguous".into()));
        }
        let tokens = |l: Vec<DictionaryEntry>| l.into_iter().map(|e| e.token).collect();
        TokenDictionary::new(file.language, tokens(seps), tokens(kws), tokens(words))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Content hash identifying this dictionary, stored with trained models.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Default number of frequent words so that D equals [`DEFAULT_DICTIONARY_WIDTH`].
pub fn default_top_n(language: Language) -> usize {
    DEFAULT_DICTIONARY_WIDTH.saturating_sub(separators(language).len() + keywords(language).len())
}

/// Dictionary of the fixed inventories plus the `top_n` most frequent other words.
///
/// Frequencies are counted over added and deleted lines of every diff in the
/// language. Ties are broken lexicographically.
pub fn build_dictionary(corpus: &CommitCorpus, language: Language, top_n: usize) -> Result<TokenDictionary> {
    let seps = separators(language);
    let kws = keywords(language);
    let keyword_set: std::collections::HashSet<&str> = kws.iter().map(String::as_str).collect();
    let mut counts: HashMap<&str, u64> = HashMap::new();
    let mut diffs = 0usize;
    for d in corpus
        .commits
        .iter()
        .flat_map(|c| &c.file_diffs)
        .filter(|d| d.language == language)
    {
        diffs += 1;
        for line in d.added_lines.iter().chain(&d.deleted_lines) {
            for w in words(line) {
                if !keyword_set.contains(w) {
                    *counts.entry(w).or_insert(0) += 1;
                }
            }
        }
    }
    if diffs == 0 {
        return Err(Error::EmptyLanguage {
            language: language.to_string(),
        });
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let frequent = ranked.into_iter().take(top_n).map(|(w, _)| w.to_string()).collect();
    TokenDictionary::new(language, seps, kws, frequent)
}

fn words(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| !is_word_char(c)).filter(|w| !w.is_empty())
}

/// Result of lexing a change string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokenized {
    pub tokens: Vec<String>,
    /// Whitespace characters other than line breaks.
    pub whitespace: usize,
}

/// Split into words, separators and stray symbols, longest separator first.
pub fn tokenize(change: &str, dict: &TokenDictionary) -> Tokenized {
    let mut out = Tokenized::default();
    let chars: Vec<char> = change.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            if c != '\n' && c != '\r' {
                out.whitespace += 1;
            }
            i += 1;
        } else if is_word_char(c) {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            out.tokens.push(chars[start..i].iter().collect());
        } else {
            let longest = (1..=dict.max_separator_len.min(chars.len() - i)).rev().find_map(|len| {
                let cand: String = chars[i..i + len].iter().collect();
                dict.index_of.contains_key(&cand).then_some((cand, len))
            });
            match longest {
                Some((tok, len)) => {
                    out.tokens.push(tok);
                    i += len;
                }
                None => {
                    out.tokens.push(c.to_string());
                    i += 1;
                }
            }
        }
    }
    out
}

/// Bag-of-token counts and surface metrics for one commit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeFeatures {
    pub commit: String,
    pub token_counts: Vec<u32>,
    pub files_touched: u32,
    pub lines_added: u32,
    pub lines_deleted: u32,
    pub whitespace_count: u32,
    pub total_tokens: u32,
}

impl ChangeFeatures {
    pub fn zeros(commit: &str, width: usize) -> Self {
        ChangeFeatures {
            commit: commit.to_string(),
            token_counts: vec![0; width],
            files_touched: 0,
            lines_added: 0,
            lines_deleted: 0,
            whitespace_count: 0,
            total_tokens: 0,
        }
    }

    /// Raw counts: D token slots then files, added, deleted, whitespace, tokens.
    pub fn raw(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.token_counts.iter().map(|&c| c as f64).collect();
        v.extend([
            self.files_touched as f64,
            self.lines_added as f64,
            self.lines_deleted as f64,
            self.whitespace_count as f64,
            self.total_tokens as f64,
        ]);
        v
    }

    /// `log(1 + raw)` for every slot; the model input before standardization.
    pub fn transformed(&self) -> Vec<f64> {
        self.raw().into_iter().map(f64::ln_1p).collect()
    }

    pub fn width(&self) -> usize {
        self.token_counts.len() + SURFACE_WIDTH
    }

    pub fn churn(&self) -> u32 {
        self.lines_added + self.lines_deleted
    }

    /// Copy with the two token slots exchanged.
    pub fn swapped(&self, a: usize, b: usize) -> Self {
        let mut out = self.clone();
        out.token_counts.swap(a, b);
        out
    }

    pub fn with_files_touched(&self, files: u32) -> Self {
        ChangeFeatures {
            files_touched: files,
            ..self.clone()
        }
    }
}

/// Featurize the diffs of `commit` written in the dictionary's language.
///
/// Added and deleted lines both contribute to the composite change string.
pub fn featurize(commit: &Commit, dict: &TokenDictionary) -> ChangeFeatures {
    let mut f = ChangeFeatures::zeros(&commit.commit_id, dict.len());
    let mut composite = String::new();
    for d in commit.file_diffs.iter().filter(|d| d.language == dict.language) {
        f.files_touched += 1;
        f.lines_added += d.added_lines.len() as u32;
        f.lines_deleted += d.deleted_lines.len() as u32;
        for line in d.added_lines.iter().chain(&d.deleted_lines) {
            composite.push_str(line);
            composite.push('\n');
        }
    }
    let lexed = tokenize(&composite, dict);
    f.whitespace_count = lexed.whitespace as u32;
    f.total_tokens = lexed.tokens.len() as u32;
    for tok in &lexed.tokens {
        if let Some(i) = dict.index_of(tok) {
            f.token_counts[i] += 1;
        }
    }
    f
}
