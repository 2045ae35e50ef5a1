//! File plumbing: atomic writes, hashing, NDJSON/CSV helpers and run manifests.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Write `bytes` to a sibling temporary file, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of a file, or of every file below a directory in path order.
pub fn sha256_path(path: &Path) -> CliResult<String> {
    if !path.is_dir() {
        return sha256_file(path);
    }
    let mut files = Vec::new();
    collect_files(path, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(path).unwrap_or(&f).to_string_lossy().into_owned();
        if rel.starts_with(".git/") && !is_git_state(&rel) {
            continue;
        }
        h.update(rel.as_bytes());
        h.update([0]);
        h.update(sha256_file(&f)?.as_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

/// Parts of a `.git` directory that determine the reachable history.
fn is_git_state(rel: &str) -> bool {
    rel == ".git/HEAD" || rel == ".git/packed-refs" || rel.starts_with(".git/refs/")
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let p = entry.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

pub fn to_ndjson<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("record serializes");
        out.push(b'\n');
    }
    out
}

pub fn read_ndjson<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec =
            serde_json::from_str(&line).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("value serializes");
    v.push(b'\n');
    v
}

/// Load a TOML or JSON file (by extension) into `T`.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

/// Fixed 17-significant-digit rendering used in every CSV.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// CSV document built in memory and written atomically.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        CsvTable { writer }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path) -> CliResult<Self> {
        Ok(FileHash {
            path: path.display().to_string(),
            sha256: sha256_path(path)?,
        })
    }
}

/// Provenance record written next to every artifact-producing command's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub tool_version: String,
}

pub struct ManifestBuilder {
    command: String,
    seed: u64,
    started: Instant,
}

impl ManifestBuilder {
    pub fn start(command: &str, seed: u64) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            seed,
            started: Instant::now(),
        }
    }

    /// Hash inputs and outputs and write the manifest to `at`.
    pub fn finish<C: Serialize>(
        self,
        at: &Path,
        config: &C,
        inputs: &[&Path],
        outputs: &[&Path],
    ) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            command: self.command,
            config: serde_json::to_value(config).expect("config serializes"),
            inputs: inputs.iter().map(|p| FileHash::of(p)).collect::<CliResult<_>>()?,
            outputs: outputs.iter().map(|p| FileHash::of(p)).collect::<CliResult<_>>()?,
            seed: self.seed,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            tool_version: TOOL_VERSION.to_string(),
        };
        write_atomic(at, &to_json_pretty(&manifest))?;
        Ok(manifest)
    }
}

/// Sibling manifest path: `out.ext` → `out.ext.manifest.json`, `models/` → `models.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    output.with_file_name(format!("{name}.manifest.json"))
}
