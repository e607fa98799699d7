//! Input discovery, hashed reads and writes, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
}

/// Tracks every file a stage reads and writes so the manifest can list
/// their digests.
pub struct Run {
    out_dir: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Run {
    pub fn new(out_dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        Ok(Self { out_dir: out_dir.to_path_buf(), inputs: Vec::new(), outputs: Vec::new() })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let key = path.display().to_string();
        if !self.inputs.iter().any(|d| d.path == key) {
            self.inputs.push(FileDigest { path: key, sha256: sha256_hex(&bytes) });
        }
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &Path) -> CliResult<String> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{}: not valid UTF-8", path.display())))
    }

    /// Writes `contents` to `relative` under the output directory.
    pub fn write(&mut self, relative: &str, contents: &[u8]) -> CliResult<PathBuf> {
        let path = self.out_dir.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.outputs.retain(|d| d.path != relative);
        self.outputs.push(FileDigest { path: relative.to_string(), sha256: sha256_hex(contents) });
        Ok(path)
    }

    /// Writes `manifest.json`: the stage name, the echoed configuration and
    /// the digests of all inputs and outputs. No timestamps, no host details.
    pub fn finish<C: Serialize>(self, command: &str, config: &C) -> CliResult<()> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.out_dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

/// Regular, non-hidden files in `dir` (optionally filtered by extension),
/// sorted by file name.
pub fn list_dir(dir: &Path, extension: Option<&str>) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let path = entry.path();
        let hidden = path.file_name().and_then(|n| n.to_str()).is_none_or(|n| n.starts_with('.'));
        if hidden || !path.is_file() {
            continue;
        }
        if let Some(ext) = extension {
            if path.extension().and_then(|e| e.to_str()) != Some(ext) {
                continue;
            }
        }
        files.push(path);
    }
    files.sort();
    Ok(files)
}

/// Expands directories among `paths` into their files.
pub fn expand_inputs(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            out.extend(list_dir(p, None)?);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::Input("no input files".into()));
    }
    Ok(out)
}

/// Sample ids become file names, so keep them to a safe alphabet.
pub fn check_sample_id(id: &str) -> CliResult<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(CliError::Input(format!("sample id {id:?} must use only letters, digits, '_', '-' and '.'")))
    }
}
