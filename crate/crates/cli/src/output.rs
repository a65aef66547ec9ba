use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use opinionlab::table::MetricTable;
use opinionlab::{Error, Result};
use serde_json::{json, Value};

/// Output directory that remembers every file written through it, so the
/// manifest can list them.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Full path for `rel`, recorded for the manifest.
    pub fn file(&mut self, rel: &str) -> PathBuf {
        self.files.push(rel.to_string());
        self.dir.join(rel)
    }

    pub fn json(&mut self, rel: &str, value: &Value) -> Result<()> {
        let path = self.file(rel);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        write_text(&path, &text)
    }

    pub fn table(&mut self, rel_dir: &str, table: &MetricTable) -> Result<()> {
        let rel = join(rel_dir, &format!("{}.csv", table.name));
        let path = self.file(&rel);
        ensure_parent(&path)?;
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        table.write_csv(std::io::BufWriter::new(f))
    }

    pub fn text(&mut self, rel: &str, text: &str) -> Result<()> {
        let path = self.file(rel);
        write_text(&path, text)
    }

    /// Writes `manifest.json`: command, seed, config hash and every file
    /// written, sorted.
    pub fn finish(mut self, command: &str, seed: u64, config_hash: &str, extra: Value) -> Result<()> {
        self.files.sort();
        self.files.dedup();
        let manifest = json!({
            "command": command,
            "seed": seed,
            "config_hash": config_hash,
            "files": self.files,
            "details": extra,
        });
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_text(&path, &text)
    }
}

pub fn join(dir: &str, name: &str) -> String {
    if dir.is_empty() {
        name.to_string()
    } else {
        format!("{dir}/{name}")
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
