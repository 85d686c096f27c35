//! Output directory bookkeeping and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::LoadedConfig;
use crate::error::{CliError, Result};

pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, body)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", p.display())))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<()> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

/// Formats an optional number, empty when missing or not finite.
pub fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => v.to_string(),
        _ => String::new(),
    }
}

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to repeat a run: the command line, the normalised
/// config and digests of every input file.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub argv: Vec<String>,
    pub config_path: String,
    pub config_sha256: &'a str,
    pub config: &'a crate::config::RegionConfig,
    pub seed: u64,
    pub threads: usize,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<String>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, cfg: &'a LoadedConfig, threads: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: std::env::args().collect(),
            config_path: cfg.path.display().to_string(),
            config_sha256: &cfg.sha256,
            config: &cfg.config,
            seed: cfg.config.seed,
            threads,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputFile {
            path: path.display().to_string(),
            sha256: crate::config::sha256_file(path)?,
        });
        Ok(())
    }

    pub fn write(mut self, out: &mut OutDir) -> Result<()> {
        self.outputs = out.written().to_vec();
        out.json("run-manifest.json", &self)
    }
}
