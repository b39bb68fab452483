//! Per-run `manifest.json`: command, full configuration, input and output
//! digests and wall time.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context as _;
use serde::Serialize;

use lawcast::util::sha256_hex;

use crate::commands::RunOutput;
use crate::config::RunConfig;

/// Keys whose values name input files or directories.
const INPUT_KEYS: &[&str] = &["bills", "committees", "composition", "history", "system", "predictions"];

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a BTreeMap<String, String>,
    config_digest: String,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    notes: &'a BTreeMap<String, serde_json::Value>,
    wall_time_secs: f64,
}

/// Every regular file under `path`, sorted.
fn files_under(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        entries.sort();
        for e in entries {
            out.extend(files_under(&e)?);
        }
    }
    Ok(out)
}

fn digests(paths: &[PathBuf], relative_to: Option<&Path>) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for p in paths {
        for f in files_under(p)? {
            let bytes = fs::read(&f).with_context(|| format!("cannot read {}", f.display()))?;
            let name = match relative_to {
                Some(base) => f.strip_prefix(base).unwrap_or(&f).display().to_string(),
                None => f.display().to_string(),
            };
            out.insert(name, sha256_hex(&bytes));
        }
    }
    Ok(out)
}

pub fn write(command: &str, config: &RunConfig, output: &RunOutput, elapsed: Duration) -> anyhow::Result<PathBuf> {
    let out = config.out_dir()?;
    let inputs: Vec<PathBuf> = INPUT_KEYS
        .iter()
        .map(|k| config.raw(k))
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .filter(|p| p.exists())
        .collect();
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: config.get("seed")?,
        config: config.values(),
        config_digest: sha256_hex(serde_json::to_string(config.values())?.as_bytes()),
        inputs: digests(&inputs, None)?,
        outputs: digests(&output.files, Some(&out))?,
        notes: &output.notes,
        wall_time_secs: elapsed.as_secs_f64(),
    };
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
