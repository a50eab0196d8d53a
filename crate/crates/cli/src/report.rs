//! Output plumbing: run metadata, JSON documents, and CSV files with a `#`
//! comment preamble.

use crate::config::RunConfig;
use crate::error::CliError;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const TOOL: &str = "yamabe";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub seed: u64,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp_unix: u64,
    pub threads: usize,
}

impl Metadata {
    pub fn new(config: &RunConfig) -> Self {
        let timestamp_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        Metadata {
            tool: TOOL,
            version: VERSION,
            config: config.clone(),
            seed: config.seed,
            timestamp_unix,
            threads: rayon::current_num_threads(),
        }
    }

    pub fn write_preamble(&self, out: &mut dyn Write) -> Result<(), CliError> {
        writeln!(out, "# tool = {} {}", self.tool, self.version)?;
        writeln!(out, "# config = {}", serde_json::to_string(&self.config)?)?;
        writeln!(out, "# seed = {}", self.seed)?;
        writeln!(out, "# timestamp_unix = {}", self.timestamp_unix)?;
        writeln!(out, "# threads = {}", self.threads)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    metadata: &'a Metadata,
    #[serde(flatten)]
    body: &'a T,
}

/// File at `path`, or standard output.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

pub fn write_json<T: Serialize>(out: &mut dyn Write, meta: &Metadata, body: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, &Document { metadata: meta, body })?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Preamble, then a header row and data rows.
pub fn write_csv(out: &mut dyn Write, meta: &Metadata, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    meta.write_preamble(out)?;
    let mut w = csv::Writer::from_writer(&mut *out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `dir/stem.trace.csv` next to `out`.
pub fn trace_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "minimize".into());
    out.with_file_name(format!("{stem}.trace.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_path_replaces_extension() {
        assert_eq!(trace_path(Path::new("runs/min.json")), PathBuf::from("runs/min.trace.csv"));
        assert_eq!(trace_path(Path::new("min")), PathBuf::from("min.trace.csv"));
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0, 53.31, 1e-17, std::f64::consts::PI] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(opt_num(None), "");
    }
}
