//! Output directory bookkeeping: every file written is listed in
//! `manifest.json` with its size.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::CliError;

pub struct Artifacts {
    dir: PathBuf,
    written: Vec<(String, u64)>,
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Stage {
        stage: "output",
        source: pprec::Error::Io {
            path: path.to_path_buf(),
            source,
        },
    }
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes `rel` (relative to the output directory) through `fill`.
    pub fn write(
        &mut self,
        rel: &str,
        fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        fill(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))?;
        let bytes = std::fs::metadata(&path).map_err(|e| io_err(&path, e))?.len();
        self.written.push((rel.to_string(), bytes));
        Ok(())
    }

    pub fn write_json(&mut self, rel: &str, value: &serde_json::Value) -> Result<(), CliError> {
        self.write(rel, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    /// Writes `manifest.json` and returns the listed paths.
    pub fn finish(mut self) -> Result<Vec<String>, CliError> {
        let list: Vec<_> = self.written.iter().map(|(p, b)| json!({ "path": p, "bytes": b })).collect();
        let manifest = json!({ "artifacts": list });
        let names: Vec<String> = self.written.iter().map(|(p, _)| p.clone()).collect();
        self.write_json("manifest.json", &manifest)?;
        Ok(names)
    }
}
