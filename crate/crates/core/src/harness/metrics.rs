//! Metrics records and their CSV / JSON-lines encodings.
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `run_id` | run label (`"default"` or `key=value` in sweeps) |
//! | `phase` | `rl` for training episodes, `fl` for aggregation rounds |
//! | `index` | episode or round number, from 0 |
//! | `mean_reward` | mean overall reward of the episode (rl only) |
//! | `inter_cluster_load` | per-cluster requested points over inter-cluster links, `;`-separated |
//! | `budget_slack` | per-cluster budget minus load, `;`-separated |
//! | `mean_link_success` | mean `1 - P_D` over existing links |
//! | `test_accuracy` | global model accuracy (fl only) |
//! | `d2d_energy_j` | cumulative device-to-device energy |
//! | `d2s_energy_j` | cumulative device-to-server energy |
//! | `stragglers` | devices excluded from aggregation |
//!
//! Absent values are empty cells in CSV and `null` in JSON lines.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "run_id",
    "phase",
    "index",
    "mean_reward",
    "inter_cluster_load",
    "budget_slack",
    "mean_link_success",
    "test_accuracy",
    "d2d_energy_j",
    "d2s_energy_j",
    "stragglers",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run_id: String,
    pub phase: String,
    pub index: usize,
    pub mean_reward: Option<f64>,
    pub inter_cluster_load: Vec<f64>,
    pub budget_slack: Vec<f64>,
    pub mean_link_success: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub d2d_energy_j: f64,
    pub d2s_energy_j: f64,
    pub stragglers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricsFormat {
    #[default]
    Csv,
    Jsonl,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn parse<T: FromStr>(cell: &str, column: &str) -> std::result::Result<T, String> {
    cell.parse().map_err(|_| format!("bad {column} value `{cell}`"))
}

fn parse_opt(cell: &str, column: &str) -> std::result::Result<Option<f64>, String> {
    if cell.is_empty() {
        Ok(None)
    } else {
        parse(cell, column).map(Some)
    }
}

fn parse_list(cell: &str, column: &str) -> std::result::Result<Vec<f64>, String> {
    if cell.is_empty() {
        return Ok(Vec::new());
    }
    cell.split(';').map(|x| parse(x, column)).collect()
}

pub fn write_csv<W: Write>(records: &[MetricsRecord], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.run_id.clone(),
            r.phase.clone(),
            r.index.to_string(),
            opt(r.mean_reward),
            list(&r.inter_cluster_load),
            list(&r.budget_slack),
            opt(r.mean_link_success),
            opt(r.test_accuracy),
            r.d2d_energy_j.to_string(),
            r.d2s_energy_j.to_string(),
            r.stragglers.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> std::result::Result<Vec<MetricsRecord>, String> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| e.to_string())?;
        let cell = |i: usize| row.get(i).unwrap_or("");
        out.push(MetricsRecord {
            run_id: cell(0).to_string(),
            phase: cell(1).to_string(),
            index: parse(cell(2), "index")?,
            mean_reward: parse_opt(cell(3), "mean_reward")?,
            inter_cluster_load: parse_list(cell(4), "inter_cluster_load")?,
            budget_slack: parse_list(cell(5), "budget_slack")?,
            mean_link_success: parse_opt(cell(6), "mean_link_success")?,
            test_accuracy: parse_opt(cell(7), "test_accuracy")?,
            d2d_energy_j: parse(cell(8), "d2d_energy_j")?,
            d2s_energy_j: parse(cell(9), "d2s_energy_j")?,
            stragglers: parse(cell(10), "stragglers")?,
        });
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(records: &[MetricsRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_jsonl<R: Read>(input: R) -> std::result::Result<Vec<MetricsRecord>, String> {
    let mut out = Vec::new();
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", n + 1))?);
    }
    Ok(out)
}

/// Encodes `records` into an in-memory buffer.
pub fn encode(records: &[MetricsRecord], format: MetricsFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    match format {
        MetricsFormat::Csv => write_csv(records, &mut buf).expect("writing to memory"),
        MetricsFormat::Jsonl => write_jsonl(records, &mut buf).expect("writing to memory"),
    }
    buf
}

pub fn emit_metrics(records: &[MetricsRecord], path: &Path, format: MetricsFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode(records, format)).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_metrics(path: &Path, format: MetricsFormat) -> Result<Vec<MetricsRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed = match format {
        MetricsFormat::Csv => read_csv(file),
        MetricsFormat::Jsonl => read_jsonl(file),
    };
    parsed.map_err(|message| Error::Metrics {
        path: path.to_path_buf(),
        message,
    })
}
