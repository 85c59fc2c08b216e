//! File output: number formatting, atomic writes and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{RawParams, RawValue, SystemConfig};
use crate::error::Result;
use crate::herald::HeraldOutcome;

/// Twelve significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes `contents` to a temporary file next to `path` and renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// CSV with columns `trial, clicked, channel, heralded_phonon`. Missing
/// channels are left empty.
pub fn outcomes_csv(outcomes: &[HeraldOutcome]) -> String {
    let mut out = String::with_capacity(outcomes.len() * 16 + 40);
    out.push_str("trial,clicked,channel,heralded_phonon\n");
    let opt = |v: Option<usize>| v.map(|j| j.to_string()).unwrap_or_default();
    for o in outcomes {
        out.push_str(&format!(
            "{},{},{},{}\n",
            o.trial,
            o.clicked as u8,
            opt(o.channel),
            opt(o.heralded_phonon)
        ));
    }
    out
}

/// CSV with columns `n, probability`.
pub fn distribution_csv(probs: &[f64]) -> String {
    let mut out = String::from("n,probability\n");
    for (n, p) in probs.iter().enumerate() {
        out.push_str(&format!("{n},{}\n", fmt_sig(*p)));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Everything needed to repeat a run. No timestamps, so identical runs give
/// identical manifests.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub package: String,
    pub version: String,
    pub seed: u64,
    pub config: SystemConfig,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub checks: Vec<CheckRecord>,
    pub outputs: Vec<OutputRecord>,
    pub pass: bool,
}

fn raw_to_json(v: &RawValue) -> serde_json::Value {
    match v {
        RawValue::Int(i) => (*i).into(),
        RawValue::Float(x) => serde_json::Number::from_f64(*x)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null),
        RawValue::List(items) => items.clone().into(),
    }
}

/// Collects output files and checks for one run, then writes the manifest.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    manifest: Manifest,
}

impl RunWriter {
    pub fn new(
        dir: &Path,
        experiment: &str,
        seed: u64,
        config: &SystemConfig,
        params: &RawParams,
    ) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                experiment: experiment.to_string(),
                package: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                config: config.clone(),
                parameters: params
                    .iter()
                    .map(|(k, v)| (k.clone(), raw_to_json(v)))
                    .collect(),
                checks: Vec::new(),
                outputs: Vec::new(),
                pass: true,
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, file: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(file);
        write_atomic(&path, contents.as_bytes())?;
        self.manifest.outputs.push(OutputRecord {
            file: file.to_string(),
            bytes: contents.len(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(path)
    }

    /// Records `value < threshold`.
    pub fn check_below(&mut self, name: &str, value: f64, threshold: f64) -> bool {
        self.record(name, value, threshold, value < threshold)
    }

    pub fn record(&mut self, name: &str, value: f64, threshold: f64, pass: bool) -> bool {
        let level = if pass {
            log::Level::Info
        } else {
            log::Level::Warn
        };
        log::log!(
            level,
            "{name}: {value:e} (threshold {threshold:e}) {}",
            if pass { "PASS" } else { "FAIL" }
        );
        self.manifest.checks.push(CheckRecord {
            name: name.to_string(),
            value,
            threshold,
            pass,
        });
        self.manifest.pass &= pass;
        pass
    }

    pub fn checks(&self) -> &[CheckRecord] {
        &self.manifest.checks
    }

    /// Writes `manifest.json` and returns the finished manifest.
    pub fn finish(self) -> Result<Manifest> {
        let mut text = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| crate::error::Error::Parse(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.dir.join("manifest.json"), text.as_bytes())?;
        Ok(self.manifest)
    }
}
