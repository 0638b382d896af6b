//! Artifact writing: JSON summaries, long-format CSV, grid fields and the run manifest.

use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fracq_core::sphere_core::write_field;
use fracq_core::GridField;

/// Shortest round-trip exponent notation, so repeated runs write identical bytes.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub struct Output {
    dir: PathBuf,
    config_hash: String,
    artifacts: Vec<String>,
}

#[derive(Serialize)]
struct ArtifactEntry<'a> {
    file: &'a str,
    config_hash: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    task: &'a str,
    config_hash: &'a str,
    seed: u64,
    threads: usize,
    wall_time_s: f64,
    status: &'a str,
    artifacts: Vec<ArtifactEntry<'a>>,
}

impl Output {
    pub fn create(dir: &Path, config_hash: String) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), config_hash, artifacts: Vec::new() })
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    fn open(&mut self, name: &str) -> std::io::Result<BufWriter<File>> {
        self.artifacts.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()
    }

    /// A CSV with a header row; cells are written as given.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let mut w = self.open(name)?;
        writeln!(w, "{}", header.join(","))?;
        for r in rows {
            writeln!(w, "{}", r.join(","))?;
        }
        w.flush()
    }

    pub fn field(&mut self, name: &str, f: &GridField) -> std::io::Result<()> {
        let mut w = self.open(name)?;
        write_field(f, &mut w).map_err(std::io::Error::other)?;
        w.flush()
    }

    pub fn manifest(mut self, task: &str, seed: u64, wall_time_s: f64, status: &str) -> std::io::Result<()> {
        let names = std::mem::take(&mut self.artifacts);
        let m = Manifest {
            tool: "fracq",
            version: fracq_core::VERSION,
            task,
            config_hash: &self.config_hash,
            seed,
            threads: rayon::current_num_threads(),
            wall_time_s,
            status,
            artifacts: names.iter().map(|f| ArtifactEntry { file: f, config_hash: &self.config_hash }).collect(),
        };
        let mut w = BufWriter::new(File::create(self.dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(&mut w, &m)?;
        writeln!(w)?;
        w.flush()
    }
}
