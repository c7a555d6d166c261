//! JSON and CSV emission. Every artifact carries the config hash, the seed
//! and the resolution; nothing time-dependent is written.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub res: String,
    pub version: &'static str,
}

impl Meta {
    pub fn new(command: &str, config_hash: String, seed: u64, res: String) -> Self {
        Meta { command: command.into(), config_hash, seed, res, version: env!("CARGO_PKG_VERSION") }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: &'a Meta,
    pass: bool,
    report: &'a T,
}

/// A table of rows with a fixed header.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self, meta: &Meta) -> Result<String, CliError> {
        let mut out = format!(
            "# command={} config_hash={} seed={} res={}\n",
            meta.command, meta.config_hash, meta.seed, meta.res
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        out.push_str(&String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("utf-8"));
        Ok(out)
    }
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

pub fn json_text<T: Serialize>(meta: &Meta, pass: bool, report: &T) -> String {
    serde_json::to_string_pretty(&Envelope { meta, pass, report }).expect("reports serialize") + "\n"
}

/// Writes the JSON report to `json` (stdout when absent) and the table to `csv`.
pub fn emit<T: Serialize>(
    meta: &Meta,
    pass: bool,
    report: &T,
    table: Option<&Table>,
    json: Option<&Path>,
    csv: Option<&Path>,
) -> Result<(), CliError> {
    let text = json_text(meta, pass, report);
    match json {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io)?,
    }
    if let (Some(t), Some(p)) = (table, csv) {
        std::fs::write(p, t.to_csv(meta)?).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}
