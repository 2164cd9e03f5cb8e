//! Per-flow feature vectors: six flow-level features, ten graph features for
//! each endpoint and a cross-community flag.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{AttackLabel, FlowDataset, FlowRecord};
use crate::graph::{NodeFeatureTable, NODE_FEATURE_NAMES};

pub const FLOW_FEATURE_NAMES: [&str; 6] = [
    "log_duration",
    "src_port",
    "dst_port",
    "protocol",
    "log_bytes",
    "time_of_day",
];

pub const FLOW_DIM: usize = 6;
pub const FULL_DIM: usize = FLOW_DIM + 2 * NODE_FEATURE_NAMES.len() + 1;

/// Bumped whenever the meaning or order of a feature column changes.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("address {0:?} is not present in the node feature table")]
    UnknownNode(String),
    #[error("feature schema mismatch: expected {expected:?}, found {found:?}")]
    SchemaMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("malformed feature file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    FlowOnly,
    FlowAndGraph,
}

impl FeatureMode {
    pub fn dim(self) -> usize {
        match self {
            FeatureMode::FlowOnly => FLOW_DIM,
            FeatureMode::FlowAndGraph => FULL_DIM,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::FlowOnly => "flow_only",
            FeatureMode::FlowAndGraph => "flow_and_graph",
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flow_only" => Ok(FeatureMode::FlowOnly),
            "flow_and_graph" => Ok(FeatureMode::FlowAndGraph),
            other => Err(format!("unknown feature mode {other:?}")),
        }
    }
}

/// Names every column of a feature matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub names: Vec<String>,
}

impl FeatureSchema {
    pub fn for_mode(mode: FeatureMode) -> Self {
        let mut names: Vec<String> = FLOW_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        if mode == FeatureMode::FlowAndGraph {
            for side in ["src", "dst"] {
                names.extend(NODE_FEATURE_NAMES.iter().map(|n| format!("{side}_{n}")));
            }
            names.push("cross_community".to_string());
        }
        Self { names }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Dense row-major matrix of feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub schema: FeatureSchema,
    rows: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(schema: FeatureSchema, data: Vec<f64>) -> Self {
        let d = schema.dim();
        assert!(d > 0 && data.len() % d == 0, "data length not a multiple of width");
        Self {
            rows: data.len() / d,
            schema,
            data,
        }
    }

    pub fn from_rows(schema: FeatureSchema, rows: &[Vec<f64>]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(schema, data)
    }

    pub fn empty(schema: FeatureSchema) -> Self {
        Self::new(schema, Vec::new())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.schema.dim()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.cols();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let d = self.cols();
        &mut self.data[i * d..(i + 1) * d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols())
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols());
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    /// New matrix with the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix::new(self.schema.clone(), data)
    }

    /// Keeps only the leading columns of a wider schema.
    pub fn leading_columns(&self, width: usize) -> FeatureMatrix {
        let schema = FeatureSchema {
            names: self.schema.names[..width].to_vec(),
        };
        let data = self
            .iter_rows()
            .flat_map(|r| r[..width].iter().copied())
            .collect();
        FeatureMatrix::new(schema, data)
    }

    /// Restricts to the columns a mode uses. Matrices built in
    /// `flow_and_graph` mode carry the flow-only columns as a prefix.
    pub fn for_mode(&self, mode: FeatureMode) -> FeatureMatrix {
        self.leading_columns(mode.dim())
    }

    /// Stacks matrices sharing a schema.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a FeatureMatrix>) -> FeatureMatrix {
        let mut iter = parts.into_iter();
        let first = iter.next().expect("concat of zero matrices");
        let mut out = first.clone();
        for m in iter {
            assert_eq!(m.schema, out.schema, "schema mismatch in concat");
            out.data.extend_from_slice(&m.data);
            out.rows += m.rows;
        }
        out
    }

    /// Writes a header row from the schema, plus a trailing `label` column
    /// when labels are given.
    pub fn write_csv<W: Write>(
        &self,
        w: W,
        labels: Option<&[AttackLabel]>,
    ) -> Result<(), FeatureError> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = self.schema.names.clone();
        if labels.is_some() {
            header.push("label".into());
        }
        wtr.write_record(&header)?;
        for (i, row) in self.iter_rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            if let Some(l) = labels {
                rec.push(l[i].to_string());
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads a file written by [`FeatureMatrix::write_csv`]. A trailing
    /// `label` column, when present, is returned separately.
    pub fn read_csv<R: Read>(r: R) -> Result<(FeatureMatrix, Option<Vec<AttackLabel>>), FeatureError> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let has_label = names.last().map(String::as_str) == Some("label");
        if has_label {
            names.pop();
        }
        if names.is_empty() {
            return Err(FeatureError::Malformed("no feature columns".into()));
        }
        let d = names.len();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for i in 0..d {
                let v: f64 = rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| {
                    FeatureError::Malformed(format!("row {}: bad value in column {}", line + 2, names[i]))
                })?;
                data.push(v);
            }
            if has_label {
                labels.push(rec.get(d).unwrap_or("").parse().unwrap());
            }
        }
        let m = FeatureMatrix::new(FeatureSchema { names }, data);
        Ok((m, has_label.then_some(labels)))
    }
}

/// The six flow-level features of a record:
/// `[ln(1+duration), src_port/65535, dst_port/65535, protocol,
///   ln(1+total_bytes), (timestamp mod 86400)/86400]`.
pub fn flow_features(r: &FlowRecord) -> [f64; FLOW_DIM] {
    [
        r.duration.ln_1p(),
        r.src_port as f64 / 65535.0,
        r.dst_port as f64 / 65535.0,
        r.protocol as f64,
        (r.total_bytes as f64).ln_1p(),
        r.timestamp.rem_euclid(86400.0) / 86400.0,
    ]
}

/// Result of featurizing one record against a possibly incomplete table.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordFeatures {
    pub values: Vec<f64>,
    /// Set when an endpoint was missing from the table and its graph
    /// features were zero-filled.
    pub unknown_node: bool,
}

/// Featurizes a single record. Missing endpoints are zero-filled and
/// flagged instead of failing.
pub fn featurize_record_lenient(
    r: &FlowRecord,
    nft: &NodeFeatureTable,
    mode: FeatureMode,
) -> RecordFeatures {
    let mut values = Vec::with_capacity(mode.dim());
    values.extend_from_slice(&flow_features(r));
    let mut unknown_node = false;
    if mode == FeatureMode::FlowAndGraph {
        let src = nft.index_of(&r.src_ip);
        let dst = nft.index_of(&r.dst_ip);
        for side in [src, dst] {
            match side {
                Some(i) => values.extend_from_slice(&nft.numeric_row(i)),
                None => {
                    unknown_node = true;
                    values.extend_from_slice(&[0.0; NODE_FEATURE_NAMES.len()]);
                }
            }
        }
        let cross = match (src, dst) {
            (Some(s), Some(d)) if nft.community[s] != nft.community[d] => 1.0,
            _ => 0.0,
        };
        values.push(cross);
    }
    RecordFeatures {
        values,
        unknown_node,
    }
}

/// One feature vector per flow, in dataset order.
pub fn featurize(
    ds: &FlowDataset,
    nft: &NodeFeatureTable,
    mode: FeatureMode,
) -> Result<FeatureMatrix, FeatureError> {
    let schema = FeatureSchema::for_mode(mode);
    let mut data = Vec::with_capacity(ds.len() * schema.dim());
    for r in &ds.records {
        if mode == FeatureMode::FlowAndGraph {
            for ip in [&r.src_ip, &r.dst_ip] {
                if nft.index_of(ip).is_none() {
                    return Err(FeatureError::UnknownNode(ip.clone()));
                }
            }
        }
        data.extend(featurize_record_lenient(r, nft, mode).values);
    }
    Ok(FeatureMatrix::new(schema, data))
}
