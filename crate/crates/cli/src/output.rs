//! Run directories, versioned CSV files and the run manifest.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const CSV_VERSION_LINE: &str = "# cwl-csv v1";

pub struct RunDir {
    pub path: PathBuf,
    experiment: String,
    outputs: Vec<String>,
}

impl RunDir {
    /// Creates `path`, refusing a directory that holds another experiment's
    /// manifest.
    pub fn open(path: &Path, experiment: &str) -> CliResult<Self> {
        let manifest = path.join("manifest.json");
        if manifest.exists() {
            let text = fs::read_to_string(&manifest)?;
            let found = serde_json::from_str::<Value>(&text).ok().and_then(|v| {
                v.get("experiment")
                    .and_then(Value::as_str)
                    .map(str::to_string)
            });
            if found.as_deref() != Some(experiment) {
                return Err(CliError::Validation(format!(
                    "{} belongs to experiment '{}'; choose another --out",
                    path.display(),
                    found.unwrap_or_else(|| "unknown".into())
                )));
            }
        }
        fs::create_dir_all(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            experiment: experiment.to_string(),
            outputs: Vec::new(),
        })
    }

    pub fn csv(&mut self, name: &str, columns: &[&str]) -> CliResult<Csv> {
        let file = File::create(self.path.join(name))?;
        self.outputs.push(name.to_string());
        let mut w = BufWriter::new(file);
        writeln!(w, "{CSV_VERSION_LINE}")?;
        writeln!(w, "{}", columns.join(","))?;
        Ok(Csv {
            w,
            width: columns.len(),
        })
    }

    pub fn json(&mut self, name: &str, value: &Value) -> CliResult<()> {
        let text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
        fs::write(self.path.join(name), text + "\n")?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Everything needed to rerun: experiment, resolved parameters and seed.
    pub fn finish(self, params: &Value, seed: u64, threads: usize, seconds: f64) -> CliResult<()> {
        let manifest = json!({
            "tool": "cwl",
            "version": env!("CARGO_PKG_VERSION"),
            "experiment": self.experiment,
            "seed": seed,
            "params": params,
            "threads": threads,
            "rng": "ChaCha8, per-realization seed = master ^ splitmix64(index)",
            "outputs": self.outputs,
            "wall_time_seconds": seconds,
        });
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        fs::write(self.path.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

pub struct Csv {
    w: BufWriter<File>,
    width: usize,
}

impl Csv {
    pub fn row(&mut self, cells: &[&dyn Display]) -> CliResult<()> {
        debug_assert_eq!(cells.len(), self.width);
        let line: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        writeln!(self.w, "{}", line.join(","))?;
        Ok(())
    }

    pub fn close(mut self) -> CliResult<()> {
        self.w.flush()?;
        Ok(())
    }
}
