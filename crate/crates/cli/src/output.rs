//! The output directory and its manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::ArrayView3;
use serde::Serialize;
use singular_pmp::model::TimeGrid;
use singular_pmp::sde::{write_binary, write_csv};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub kind: &'static str,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    exit_code: i32,
    config: &'a RunConfig,
    files: &'a [ManifestEntry],
}

/// Collects files written under `--out`; `finish` writes `manifest.json` last.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    fn write_with<F>(&mut self, name: &str, kind: &'static str, f: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| io(&path, e))?;
        let bytes = fs::metadata(&path).map_err(|e| io(&path, e))?.len();
        self.entries.retain(|e| e.path != name);
        self.entries.push(ManifestEntry {
            path: name.into(),
            kind,
            bytes,
        });
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, kind: &'static str, value: &T) -> Result<PathBuf, CliError> {
        self.write_with(name, kind, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::Config(e.to_string()))?;
            writeln!(w).map_err(|e| CliError::Config(e.to_string()))
        })
    }

    pub fn text(&mut self, name: &str, kind: &'static str, body: &str) -> Result<PathBuf, CliError> {
        self.write_with(name, kind, |w| {
            w.write_all(body.as_bytes())
                .map_err(|e| CliError::Config(e.to_string()))
        })
    }

    /// Writes `<stem>.csv` and `<stem>.bin` for a `(paths, knots, width)` array.
    pub fn ensemble(
        &mut self,
        stem: &str,
        values: ArrayView3<'_, f64>,
        grid: &TimeGrid<f64>,
        prefix: &str,
        seed: u64,
    ) -> Result<(), CliError> {
        self.write_with(&format!("{stem}.csv"), "csv", |w| {
            write_csv(w, values, grid, prefix).map_err(CliError::from)
        })?;
        self.write_with(&format!("{stem}.bin"), "binary", |w| {
            write_binary(w, values, seed).map_err(CliError::from)
        })?;
        Ok(())
    }

    pub fn finish(mut self, command: &str, config: &RunConfig, exit_code: i32) -> Result<Vec<ManifestEntry>, CliError> {
        self.json("config.json", "config", config)?;
        let manifest = Manifest {
            tool: "singular-pmp",
            version: env!("CARGO_PKG_VERSION"),
            command,
            exit_code,
            config,
            files: &self.entries,
        };
        let path = self.root.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        Ok(self.entries)
    }
}
