use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mlbalance::Result;
use serde::Serialize;

/// Run record written beside every command's outputs.
#[derive(Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub subcommand: &'a str,
    pub tool_version: &'a str,
    pub config: &'a C,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub wall_time_seconds: f64,
}

pub struct Run {
    name: &'static str,
    started: Instant,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
}

impl Run {
    pub fn start(name: &'static str, seed: Option<u64>) -> Self {
        Run {
            name,
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    pub fn output(&mut self, p: &Path) -> PathBuf {
        self.outputs.push(p.to_path_buf());
        p.to_path_buf()
    }

    pub fn finish<C: Serialize>(self, config: &C, path: &Path) -> Result<()> {
        let m = RunManifest {
            subcommand: self.name,
            tool_version: env!("CARGO_PKG_VERSION"),
            config,
            inputs: self.inputs,
            outputs: self.outputs,
            seed: self.seed,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        };
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &m)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        Ok(())
    }
}

/// `dir/name.manifest.json` for a file output `dir/name.ext`.
pub fn beside(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
