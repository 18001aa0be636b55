//! JSON-lines sample records and CSV tables.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use telecode_core::estimators::{AggregateRow, SampleRecord, SCHEMA_MAJOR};
use telecode_core::scaling::{ScalingDataset, ScalingPoint};

use crate::error::{CliError, Result};

/// Append-only record log, flushed after every line.
pub struct RecordWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl RecordWriter {
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            path: path.to_owned(),
            out: BufWriter::new(file),
        })
    }

    pub fn write<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let line = serde_json::to_string(value).map_err(|e| CliError::Parse {
            path: self.path.clone(),
            line: 0,
            message: e.to_string(),
        })?;
        let io = |e| CliError::io(&self.path, e);
        self.out.write_all(line.as_bytes()).map_err(io)?;
        self.out.write_all(b"\n").map_err(io)?;
        self.out.flush().map_err(io)
    }
}

#[derive(Deserialize)]
struct SchemaProbe {
    schema: u32,
}

/// Records of a JSON-lines file.
///
/// A final line without a newline is a torn write and is dropped; any other
/// malformed line is an error, as is an unknown schema major version.
pub fn read_records(path: &Path) -> Result<Vec<SampleRecord>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let complete = buf.ends_with('\n');
        let text = buf.trim();
        if text.is_empty() {
            continue;
        }
        let parse_err = |message: String| CliError::Parse {
            path: path.to_owned(),
            line: line_no,
            message,
        };
        match serde_json::from_str::<SchemaProbe>(text) {
            Ok(p) if p.schema != SCHEMA_MAJOR => {
                return Err(CliError::Schema {
                    path: path.to_owned(),
                    found: p.schema,
                    expected: SCHEMA_MAJOR,
                })
            }
            Err(_) if !complete => break,
            Err(e) => return Err(parse_err(e.to_string())),
            Ok(_) => {}
        }
        match serde_json::from_str::<SampleRecord>(text) {
            Ok(r) => out.push(r),
            Err(_) if !complete => break,
            Err(e) => return Err(parse_err(e.to_string())),
        }
    }
    Ok(out)
}

/// Truncate a torn final line so later appends start on a fresh line.
pub fn repair_tail(path: &Path) -> Result<()> {
    let Ok(bytes) = std::fs::read(path) else {
        return Ok(());
    };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let file = OpenOptions::new().write(true).open(path).map_err(|e| CliError::io(path, e))?;
    file.set_len(keep as u64).map_err(|e| CliError::io(path, e))
}

/// Keys `(point, seed_path)` of records already on disk.
pub fn completed_keys(records: &[SampleRecord]) -> BTreeSet<String> {
    records.iter().map(task_key_of).collect()
}

pub fn task_key_of(r: &SampleRecord) -> String {
    task_key(r.protocol, r.n_replica, r.theta_over_pi, r.d, r.t_over_pi, r.seed_path)
}

/// Identity of one task: parameter point and seed path.
pub fn task_key(
    protocol: telecode_core::estimators::Protocol,
    n_replica: telecode_core::Replica,
    theta_over_pi: f64,
    d: usize,
    t_over_pi: f64,
    seed_path: telecode_core::sampler::SeedPath,
) -> String {
    format!(
        "{}|{}|{}|{}|{}|{}|{}",
        protocol_name(protocol),
        n_replica,
        theta_over_pi,
        d,
        t_over_pi,
        seed_path.seed,
        seed_path.sample
    )
}

/// CSV row of the aggregate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CsvRow {
    d: usize,
    t_over_pi: f64,
    theta_over_pi: f64,
    n_replica: String,
    mean: f64,
    se: f64,
    n_samples: usize,
    #[serde(default)]
    protocol: Option<String>,
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    CliError::Parse {
        path: path.to_owned(),
        line,
        message: e.to_string(),
    }
}

/// Aggregate CSV with columns `d, t_over_pi, theta_over_pi, n_replica,
/// mean, se, n_samples, protocol`.
pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(CsvRow {
            d: r.d,
            t_over_pi: r.t_over_pi,
            theta_over_pi: r.theta_over_pi,
            n_replica: r.n_replica.to_string(),
            mean: r.mean,
            se: r.se,
            n_samples: r.n_samples,
            protocol: Some(protocol_name(r.protocol).into()),
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn protocol_name(p: telecode_core::estimators::Protocol) -> &'static str {
    match p {
        telecode_core::estimators::Protocol::Active => "active",
        telecode_core::estimators::Protocol::Passive => "passive",
    }
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let bad = |message: String| CliError::Parse {
            path: path.to_owned(),
            line: i + 2,
            message,
        };
        let n_replica = row.n_replica.parse().map_err(|e: telecode_core::TelecodeError| bad(e.to_string()))?;
        let protocol = match row.protocol.as_deref() {
            None | Some("") | Some("active") => telecode_core::estimators::Protocol::Active,
            Some("passive") => telecode_core::estimators::Protocol::Passive,
            Some(other) => return Err(bad(format!("unknown protocol {other:?}"))),
        };
        out.push(AggregateRow {
            d: row.d,
            t_over_pi: row.t_over_pi,
            theta_over_pi: row.theta_over_pi,
            n_replica,
            protocol,
            mean: row.mean,
            se: row.se,
            n_samples: row.n_samples,
        });
    }
    Ok(out)
}

/// Points of a CSV with at least the columns `d, t_over_pi, mean, se`.
pub fn read_scaling_points(path: &Path) -> Result<Vec<ScalingPoint>> {
    #[derive(Deserialize)]
    struct Row {
        d: usize,
        t_over_pi: f64,
        mean: f64,
        se: f64,
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    rdr.deserialize::<Row>()
        .map(|r| {
            let r = r.map_err(|e| csv_err(path, e))?;
            Ok(ScalingPoint {
                d: r.d,
                t_over_pi: r.t_over_pi,
                mean: r.mean,
                se: r.se,
            })
        })
        .collect()
}

/// Scaling dataset from an aggregate or collapse CSV, keeping rows that
/// match the optional filters. Aggregate rows must then share one group.
pub fn read_scaling_dataset(
    path: &Path,
    theta_over_pi: Option<f64>,
    n_replica: Option<telecode_core::Replica>,
    protocol: Option<telecode_core::estimators::Protocol>,
) -> Result<ScalingDataset> {
    let header = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().any(|h| h == "n_replica") {
        let rows: Vec<AggregateRow> = read_aggregate(path)?
            .into_iter()
            .filter(|r| theta_over_pi.is_none_or(|th| (r.theta_over_pi - th).abs() < 1e-12))
            .filter(|r| n_replica.is_none_or(|n| r.n_replica == n))
            .filter(|r| protocol.is_none_or(|p| r.protocol == p))
            .collect();
        Ok(ScalingDataset::from_rows(&rows, "coherent_information")?)
    } else {
        Ok(ScalingDataset::new(read_scaling_points(path)?, "coherent_information"))
    }
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}
