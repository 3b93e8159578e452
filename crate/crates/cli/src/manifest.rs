use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one CLI run. With SOURCE_DATE_EPOCH set, both timestamps take
/// that value and the wall time is left out, so repeated runs produce
/// identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<String>,
    pub output_dir: String,
    pub seed: u64,
    pub grid_scale: usize,
    pub started_unix: u64,
    pub finished_unix: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    pub artifacts: Vec<Artifact>,
}

pub struct Clock {
    fixed: Option<u64>,
    start: std::time::Instant,
    started_unix: u64,
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Clock {
    pub fn start() -> Self {
        let fixed = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok());
        Clock { fixed, start: std::time::Instant::now(), started_unix: fixed.unwrap_or_else(now_unix) }
    }
}

pub fn sha256_file(path: &Path) -> std::io::Result<(String, u64)> {
    let bytes = fs::read(path)?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

impl RunManifest {
    pub fn new(command: &str, config: Option<&Path>, out: &Path, seed: u64, grid_scale: usize) -> Self {
        RunManifest {
            command: command.into(),
            config: config.map(|p| p.display().to_string()),
            output_dir: out.display().to_string(),
            seed,
            grid_scale,
            started_unix: 0,
            finished_unix: 0,
            wall_time_s: None,
            artifacts: Vec::new(),
        }
    }

    /// Hashes the artifacts (paths relative to the output directory), stamps
    /// the times and writes `manifest.json`.
    pub fn finish(mut self, clock: &Clock, out: &Path, files: &[PathBuf]) -> std::io::Result<PathBuf> {
        for f in files {
            let (sha256, bytes) = sha256_file(f)?;
            let rel = f.strip_prefix(out).unwrap_or(f);
            self.artifacts.push(Artifact { path: rel.display().to_string(), sha256, bytes });
        }
        self.started_unix = clock.started_unix;
        match clock.fixed {
            Some(t) => self.finished_unix = t,
            None => {
                self.finished_unix = now_unix();
                self.wall_time_s = Some(clock.start.elapsed().as_secs_f64());
            }
        }
        let path = out.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&self).expect("manifest serializes") + "\n")?;
        Ok(path)
    }
}
