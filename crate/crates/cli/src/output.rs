use std::path::{Path, PathBuf};

use eiot_core::{Error, Result, MODEL_FORMAT_VERSION};
use serde::Serialize;
use serde_json::{json, Value};

/// Writes result files into one directory, each with a `<file>.meta.json`
/// sidecar recording the command, its configuration and the toolkit version.
pub struct Output {
    dir: PathBuf,
    meta: Value,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.into(), source }
}

impl Output {
    pub fn new(dir: &Path, command: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let meta = json!({
            "command": command,
            "config": serde_json::to_value(config)?,
            "seed": seed,
            "toolkit": "eiot",
            "version": env!("CARGO_PKG_VERSION"),
            "model_format_version": MODEL_FORMAT_VERSION,
        });
        Ok(Output { dir: dir.to_path_buf(), meta })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Add the sidecar for a file already written under `name`.
    pub fn adopt(&self, name: &str) -> Result<()> {
        let mut meta = self.meta.clone();
        meta["file"] = json!(name);
        let side = self.path(&format!("{name}.meta.json"));
        std::fs::write(&side, serde_json::to_string_pretty(&meta)? + "\n").map_err(io_err(&side))
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, body).map_err(io_err(&p))?;
        self.adopt(name)
    }

    /// CSV with an explicit header, so empty tables still carry column names.
    pub fn table(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let p = self.path(name);
        let csv_err = |source| Error::Csv { path: p.clone(), source };
        let mut w = csv::Writer::from_path(&p).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(&r).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&p))?;
        drop(w);
        self.adopt(name)
    }
}

/// ECDF step points as `(value, cumulative_fraction)` rows.
pub fn ecdf_rows(points: &[(f64, f64)]) -> Vec<Vec<String>> {
    points.iter().map(|(v, f)| vec![v.to_string(), f.to_string()]).collect()
}

pub const ECDF_HEADER: &[&str] = &["value", "cumulative_fraction"];
