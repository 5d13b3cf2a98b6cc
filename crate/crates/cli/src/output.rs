use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Run identity stamped on every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

/// Output directory plus the run identity; tracks what was written.
pub struct Sink {
    dir: PathBuf,
    meta: Meta,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, meta: Meta) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Sink { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(path);
        Ok(BufWriter::new(file))
    }

    /// CSV with a leading `#` comment line carrying the run identity. `body`
    /// writes the table itself.
    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let m = self.meta.clone();
        let mut out = self.create(name)?;
        writeln!(
            out,
            "# {} {} command={} config_hash={} seed={}",
            m.tool, m.version, m.command, m.config_hash, m.seed
        )?;
        body(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// CSV of serializable rows.
    pub fn csv_rows<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        self.csv(name, |out| {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        })
    }

    /// JSON document `{"meta": ..., "result": ...}`.
    pub fn json<R: Serialize>(&mut self, name: &str, result: &R) -> Result<()> {
        #[derive(Serialize)]
        struct Doc<'a, R> {
            meta: &'a Meta,
            result: &'a R,
        }
        let meta = self.meta.clone();
        let mut out = self.create(name)?;
        serde_json::to_writer_pretty(&mut out, &Doc { meta: &meta, result })?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
