//! Experiment reports: JSON, per-class CSV tables and loss histograms.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

/// One table row: an attack class, or a named run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub attack: String,
    pub auc: f64,
    pub precision: f64,
    pub recall: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl ReportRow {
    pub fn new(attack: impl Into<String>, auc: f64, precision: f64, recall: f64) -> Self {
        Self {
            attack: attack.into(),
            auc,
            precision,
            recall,
            details: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }
}

/// Unweighted mean of each metric across rows.
pub fn average_row(label: &str, rows: &[ReportRow]) -> Option<ReportRow> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&ReportRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Some(ReportRow::new(
        label,
        mean(|r| r.auc),
        mean(|r| r.precision),
        mean(|r| r.recall),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Which scorer produced the losses.
    pub series: String,
    pub class: String,
    /// Bin centre.
    pub loss: f64,
    pub count: usize,
}

/// Bins `(class, loss)` pairs over a shared range of `bins` equal-width bins.
/// Losses are binned on a log10 scale when `log_scale` is set.
pub fn loss_histogram(
    series: &str,
    samples: &[(String, f64)],
    bins: usize,
    log_scale: bool,
) -> Vec<HistogramBin> {
    let tf = |x: f64| if log_scale { x.max(1e-12).log10() } else { x };
    let vals: Vec<f64> = samples.iter().map(|s| tf(s.1)).filter(|v| v.is_finite()).collect();
    if vals.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for (class, loss) in samples {
        let v = tf(*loss);
        if !v.is_finite() {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        *counts.entry((class.clone(), b)).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|((class, b), count)| {
            let centre = lo + (b as f64 + 0.5) * width;
            HistogramBin {
                series: series.to_string(),
                class,
                loss: if log_scale { 10f64.powf(centre) } else { centre },
                count,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// How scores and thresholds were derived, for readers of the tables.
    pub notes: Vec<String>,
    /// Echo of the configuration that produced the report.
    pub config: serde_json::Value,
    pub rows: Vec<ReportRow>,
    pub average: Option<ReportRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub histograms: Vec<HistogramBin>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: serde_json::Value) -> Self {
        Self {
            experiment: experiment.to_string(),
            notes: Vec::new(),
            config,
            rows: Vec::new(),
            average: None,
            histograms: Vec::new(),
        }
    }

    pub fn row(&self, attack: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.attack == attack)
    }

    pub fn finish_average(&mut self) {
        self.average = average_row("average", &self.rows);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `attack,auc,precision,recall` table, average row last.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["attack", "auc", "precision", "recall"])?;
        for r in self.rows.iter().chain(self.average.as_ref()) {
            wtr.write_record([
                r.attack.clone(),
                format!("{:.6}", r.auc),
                format!("{:.6}", r.precision),
                format!("{:.6}", r.recall),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_histograms_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["series", "loss", "class", "count"])?;
        for h in &self.histograms {
            wtr.write_record([
                h.series.clone(),
                format!("{:.9e}", h.loss),
                h.class.clone(),
                h.count.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Human-readable table.
    pub fn render_table(&self) -> String {
        let mut out = format!("{}\n", self.experiment);
        out.push_str(&format!("{:<20} {:>8} {:>10} {:>8}\n", "attack", "auc", "precision", "recall"));
        for r in self.rows.iter().chain(self.average.as_ref()) {
            out.push_str(&format!(
                "{:<20} {:>8.4} {:>10.4} {:>8.4}\n",
                r.attack, r.auc, r.precision, r.recall
            ));
        }
        out
    }
}
