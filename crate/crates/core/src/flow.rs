//! Flow records, label taxonomy, dataset ingestion and deterministic splitting.
//!
//! The canonical on-disk schema is a CSV with the header
//!
//! ```text
//! timestamp,src_ip,dst_ip,src_port,dst_port,protocol,duration,total_bytes,packet_count,label
//! ```
//!
//! or JSON lines carrying the same field names. Endpoint addresses are kept
//! as opaque strings: they are used to build the interaction graph and are
//! never turned into numeric features.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column names of the canonical CSV schema, in canonical order.
pub const CSV_COLUMNS: [&str; 10] = [
    "timestamp",
    "src_ip",
    "dst_ip",
    "src_port",
    "dst_port",
    "protocol",
    "duration",
    "total_bytes",
    "packet_count",
    "label",
];

/// Attack classes the bundled generator and experiments know about.
///
/// Labels outside this list are still accepted verbatim (lowercased).
pub const REGISTERED_CLASSES: [&str; 10] = [
    "scanning",
    "interrogation",
    "botnet",
    "command_control",
    "exfiltration",
    "ransomware",
    "rat",
    "infostealer",
    "worm",
    "downloader",
];

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("malformed row {row:?}: {reason}")]
    MalformedRow { row: String, reason: String },
    #[error("value out of range in row {row:?}: {field} = {value}")]
    RangeError {
        row: String,
        field: &'static str,
        value: String,
    },
    #[error("schema error: missing required column {0:?}")]
    Schema(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid split fraction {0}; must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<FlowError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowFormat {
    Csv,
    Jsonl,
}

impl FlowFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => FlowFormat::Jsonl,
            _ => FlowFormat::Csv,
        }
    }
}

/// Ground-truth label attached to a flow.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackLabel {
    Benign,
    Attack(String),
    /// Only meaningful for inference inputs.
    Unlabeled,
}

impl AttackLabel {
    pub fn attack(class: &str) -> Self {
        AttackLabel::Attack(class.to_lowercase())
    }

    pub fn is_benign(&self) -> bool {
        matches!(self, AttackLabel::Benign)
    }

    pub fn is_attack(&self) -> bool {
        matches!(self, AttackLabel::Attack(_))
    }

    pub fn class(&self) -> Option<&str> {
        match self {
            AttackLabel::Attack(c) => Some(c),
            _ => None,
        }
    }

    /// True for attack classes listed in [`REGISTERED_CLASSES`].
    pub fn is_registered(&self) -> bool {
        match self {
            AttackLabel::Attack(c) => REGISTERED_CLASSES.contains(&c.as_str()),
            _ => true,
        }
    }
}

impl fmt::Display for AttackLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackLabel::Benign => f.write_str("benign"),
            AttackLabel::Unlabeled => f.write_str("unlabeled"),
            AttackLabel::Attack(c) => f.write_str(c),
        }
    }
}

impl FromStr for AttackLabel {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_lowercase();
        Ok(match lower.as_str() {
            "benign" => AttackLabel::Benign,
            "unlabeled" | "" => AttackLabel::Unlabeled,
            _ => AttackLabel::Attack(lower),
        })
    }
}

impl Serialize for AttackLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttackLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().unwrap_or(AttackLabel::Unlabeled))
    }
}

/// One summarized network connection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowRecord {
    pub timestamp: f64,
    pub src_ip: String,
    pub dst_ip: String,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: u8,
    pub duration: f64,
    pub total_bytes: u64,
    pub packet_count: u64,
    pub label: AttackLabel,
}

/// Loosely typed row used before range validation.
#[derive(Debug, Deserialize)]
struct RawFlow {
    timestamp: f64,
    src_ip: String,
    dst_ip: String,
    src_port: i64,
    dst_port: i64,
    protocol: i64,
    duration: f64,
    total_bytes: i64,
    packet_count: i64,
    #[serde(default)]
    label: Option<String>,
}

impl RawFlow {
    fn validate(self, row: &str) -> Result<FlowRecord, FlowError> {
        let range = |field: &'static str, value: String| FlowError::RangeError {
            row: row.to_string(),
            field,
            value,
        };
        let port = |field: &'static str, v: i64| {
            u16::try_from(v).map_err(|_| range(field, v.to_string()))
        };
        let count = |field: &'static str, v: i64| {
            u64::try_from(v).map_err(|_| range(field, v.to_string()))
        };
        if self.src_ip.trim().is_empty() || self.dst_ip.trim().is_empty() {
            return Err(FlowError::MalformedRow {
                row: row.to_string(),
                reason: "empty endpoint address".into(),
            });
        }
        if !self.timestamp.is_finite() {
            return Err(range("timestamp", self.timestamp.to_string()));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(range("duration", self.duration.to_string()));
        }
        Ok(FlowRecord {
            timestamp: self.timestamp,
            src_ip: self.src_ip.trim().to_string(),
            dst_ip: self.dst_ip.trim().to_string(),
            src_port: port("src_port", self.src_port)?,
            dst_port: port("dst_port", self.dst_port)?,
            protocol: u8::try_from(self.protocol)
                .map_err(|_| range("protocol", self.protocol.to_string()))?,
            duration: self.duration,
            total_bytes: count("total_bytes", self.total_bytes)?,
            packet_count: count("packet_count", self.packet_count)?,
            label: self
                .label
                .as_deref()
                .map(|l| l.parse().unwrap())
                .unwrap_or(AttackLabel::Unlabeled),
        })
    }
}

fn parse_field<T: FromStr>(row: &str, name: &str, raw: &str) -> Result<T, FlowError>
where
    T::Err: fmt::Display,
{
    raw.trim().parse::<T>().map_err(|e| FlowError::MalformedRow {
        row: row.to_string(),
        reason: format!("{name}: {e} ({raw:?})"),
    })
}

/// Builds a record from CSV fields given in canonical column order.
fn record_from_fields(row: &str, fields: &[&str]) -> Result<FlowRecord, FlowError> {
    if fields.len() != CSV_COLUMNS.len() {
        return Err(FlowError::MalformedRow {
            row: row.to_string(),
            reason: format!(
                "expected {} columns, found {}",
                CSV_COLUMNS.len(),
                fields.len()
            ),
        });
    }
    RawFlow {
        timestamp: parse_field(row, "timestamp", fields[0])?,
        src_ip: fields[1].to_string(),
        dst_ip: fields[2].to_string(),
        src_port: parse_field(row, "src_port", fields[3])?,
        dst_port: parse_field(row, "dst_port", fields[4])?,
        protocol: parse_field(row, "protocol", fields[5])?,
        duration: parse_field(row, "duration", fields[6])?,
        total_bytes: parse_field(row, "total_bytes", fields[7])?,
        packet_count: parse_field(row, "packet_count", fields[8])?,
        label: Some(fields[9].to_string()),
    }
    .validate(row)
}

/// Parses one data row. CSV rows must use canonical column order.
pub fn parse_flow_record(line: &str, format: FlowFormat) -> Result<FlowRecord, FlowError> {
    match format {
        FlowFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .from_reader(line.as_bytes());
            let rec = match rdr.records().next() {
                Some(r) => r?,
                None => {
                    return Err(FlowError::MalformedRow {
                        row: line.to_string(),
                        reason: "empty row".into(),
                    })
                }
            };
            let fields: Vec<&str> = rec.iter().collect();
            record_from_fields(line, &fields)
        }
        FlowFormat::Jsonl => {
            let raw: RawFlow =
                serde_json::from_str(line).map_err(|e| FlowError::MalformedRow {
                    row: line.to_string(),
                    reason: e.to_string(),
                })?;
            raw.validate(line)
        }
    }
}

/// An ordered collection of flows from one network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowDataset {
    pub network_id: String,
    pub records: Vec<FlowRecord>,
}

/// A row that failed validation during a non-strict load.
#[derive(Debug)]
pub struct Rejection {
    /// 1-based line number in the source file.
    pub line: usize,
    pub error: FlowError,
}

#[derive(Debug)]
pub struct LoadReport {
    pub dataset: FlowDataset,
    pub rejected: Vec<Rejection>,
}

impl FlowDataset {
    pub fn new(network_id: impl Into<String>, records: Vec<FlowRecord>) -> Self {
        Self {
            network_id: network_id.into(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<AttackLabel> {
        self.records.iter().map(|r| r.label.clone()).collect()
    }

    /// Order-preserving subset of records whose label satisfies `pred`.
    pub fn filter_by_label(&self, pred: impl Fn(&AttackLabel) -> bool) -> FlowDataset {
        FlowDataset {
            network_id: self.network_id.clone(),
            records: self
                .records
                .iter()
                .filter(|r| pred(&r.label))
                .cloned()
                .collect(),
        }
    }

    pub fn select(&self, indices: &[usize]) -> FlowDataset {
        FlowDataset {
            network_id: self.network_id.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), FlowError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(CSV_COLUMNS)?;
        for r in &self.records {
            wtr.write_record(&[
                r.timestamp.to_string(),
                r.src_ip.clone(),
                r.dst_ip.clone(),
                r.src_port.to_string(),
                r.dst_port.to_string(),
                r.protocol.to_string(),
                r.duration.to_string(),
                r.total_bytes.to_string(),
                r.packet_count.to_string(),
                r.label.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), FlowError> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path, format: FlowFormat) -> Result<(), FlowError> {
        let w = BufWriter::new(File::create(path)?);
        match format {
            FlowFormat::Csv => self.write_csv(w),
            FlowFormat::Jsonl => self.write_jsonl(w),
        }
    }
}

/// Iterator over parsed rows of a flow file; yields per-row results so
/// callers can decide how to treat bad rows.
pub struct FlowReader {
    inner: RowSource,
    line: usize,
}

enum RowSource {
    Csv {
        records: csv::StringRecordsIntoIter<BufReader<File>>,
        // position of each canonical column in the file
        columns: [usize; 10],
    },
    Jsonl(std::io::Lines<BufReader<File>>),
}

impl FlowReader {
    pub fn open(path: &Path, format: FlowFormat) -> Result<Self, FlowError> {
        let file = BufReader::new(File::open(path)?);
        let inner = match format {
            FlowFormat::Csv => {
                let mut rdr = csv::ReaderBuilder::new()
                    .has_headers(true)
                    .flexible(true)
                    .from_reader(file);
                let headers = rdr.headers()?.clone();
                let mut columns = [0usize; 10];
                for (slot, name) in columns.iter_mut().zip(CSV_COLUMNS) {
                    *slot = headers
                        .iter()
                        .position(|h| h.trim() == name)
                        .ok_or_else(|| FlowError::Schema(name.to_string()))?;
                }
                RowSource::Csv {
                    records: rdr.into_records(),
                    columns,
                }
            }
            FlowFormat::Jsonl => RowSource::Jsonl(file.lines()),
        };
        Ok(Self {
            inner,
            // the csv header occupies line 1
            line: usize::from(format == FlowFormat::Csv),
        })
    }
}

impl Iterator for FlowReader {
    type Item = Result<FlowRecord, FlowError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line += 1;
            let line = self.line;
            let res = match &mut self.inner {
                RowSource::Csv { records, columns } => {
                    let rec = match records.next()? {
                        Ok(r) => r,
                        Err(e) => return Some(Err(at_line(line, e.into()))),
                    };
                    let row = rec.iter().collect::<Vec<_>>().join(",");
                    if columns.iter().any(|&c| c >= rec.len()) {
                        Err(FlowError::MalformedRow {
                            row,
                            reason: format!("expected at least {} columns", columns.len()),
                        })
                    } else {
                        let fields: Vec<&str> = columns.iter().map(|&c| &rec[c]).collect();
                        record_from_fields(&row, &fields)
                    }
                }
                RowSource::Jsonl(lines) => match lines.next()? {
                    Ok(l) if l.trim().is_empty() => continue,
                    Ok(l) => parse_flow_record(&l, FlowFormat::Jsonl),
                    Err(e) => Err(e.into()),
                },
            };
            return Some(res.map_err(|e| at_line(line, e)));
        }
    }
}

fn at_line(line: usize, e: FlowError) -> FlowError {
    FlowError::AtLine {
        line,
        source: Box::new(e),
    }
}

/// Loads a flow file. Bad rows are skipped and reported unless `strict`,
/// in which case the first bad row aborts the load.
pub fn load_dataset(
    path: &Path,
    format: FlowFormat,
    network_id: &str,
    strict: bool,
) -> Result<LoadReport, FlowError> {
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for item in FlowReader::open(path, format)? {
        match item {
            Ok(r) => records.push(r),
            Err(FlowError::AtLine { line, source }) if !strict => rejected.push(Rejection {
                line,
                error: *source,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(LoadReport {
        dataset: FlowDataset::new(network_id, records),
        rejected,
    })
}

/// Seeded random partition of `0..n` into `(train, test)` index sets, each
/// sorted ascending. `|train| = round(train_fraction * n)`.
pub fn split_indices(
    n: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), FlowError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(FlowError::InvalidFraction(train_fraction));
    }
    if n == 0 {
        return Err(FlowError::EmptyDataset);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut test = idx.split_off(n_train);
    idx.sort_unstable();
    test.sort_unstable();
    Ok((idx, test))
}

/// Seeded train/test split. Both halves keep the dataset's original order.
pub fn split_dataset(
    ds: &FlowDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(FlowDataset, FlowDataset), FlowError> {
    let (train, test) = split_indices(ds.len(), train_fraction, seed)?;
    Ok((ds.select(&train), ds.select(&test)))
}
