//! Result records and their CSV and JSON renderings.
//!
//! CSV output carries only the computed table, so a fixed configuration and
//! seed always produce the same bytes. JSON wraps the same payload in a
//! [`ResultRecord`] with provenance fields.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands::{BellReport, FringeTable, ParamsReport, SweepTable, ValidationReport};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    Params(ParamsReport),
    Fringes(FringeTable),
    Bell(BellReport),
    Sweep(SweepTable),
    Validate(ValidationReport),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    /// Derived from the configuration hash, command and seed.
    pub run_id: String,
    pub config_hash: String,
    pub command: String,
    pub seed: u64,
    /// Seconds since the Unix epoch at which the record was written.
    pub timestamp: u64,
    pub payload: Payload,
}

impl ResultRecord {
    pub fn new(config_hash: &str, command: &str, seed: u64, payload: Payload) -> Self {
        let digest = Sha256::digest(format!("{config_hash}:{command}:{seed}").as_bytes());
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        ResultRecord {
            run_id: hex::encode(&digest[..8]),
            config_hash: config_hash.to_string(),
            command: command.to_string(),
            seed,
            timestamp,
            payload,
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(e.to_string())),
            Format::Csv => render_csv(&self.payload),
        }
    }
}

/// Header rows are written explicitly so that empty tables still carry one.
fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Tables with a header row. Angles are in radians.
pub fn render_csv(payload: &Payload) -> Result<String> {
    let mut w = writer();
    match payload {
        Payload::Params(report) => {
            w.write_record(["quantity", "value"])?;
            let value = serde_json::to_value(report).map_err(|e| Error::Numerical(e.to_string()))?;
            if let serde_json::Value::Object(map) = value {
                for (k, v) in map {
                    w.write_record([k, v.to_string()])?;
                }
            }
        }
        Payload::Fringes(table) => {
            w.write_record(["phi_s", "phi_i", "value", "error", "trials", "singles_s", "singles_i", "coincidences"])?;
            for r in &table.rows {
                w.serialize(r)?;
            }
        }
        Payload::Bell(report) => {
            w.write_record(["quantity", "phi_s", "phi_i", "value", "stderr"])?;
            let labels = ["E(s,i)", "E(s',i)", "E(s,i')", "E(s',i')"];
            for ((label, (phi_s, phi_i)), c) in labels.iter().zip(report.angles.pairs()).zip(&report.result.e_values) {
                w.write_record([label.to_string(), phi_s.to_string(), phi_i.to_string(), c.e.to_string(), c.stderr.to_string()])?;
            }
            w.write_record(["S".to_string(), String::new(), String::new(), report.result.s.to_string(), report.result.s_error.to_string()])?;
        }
        Payload::Sweep(table) => {
            w.write_record(["value", "upsilon", "phi_0", "visibility", "visibility_err", "s", "s_error"])?;
            for r in &table.rows {
                w.serialize(r)?;
            }
        }
        Payload::Validate(report) => {
            w.write_record(["check", "status", "detail"])?;
            for c in &report.checks {
                w.serialize(c)?;
            }
        }
    }
    finish(w)
}
