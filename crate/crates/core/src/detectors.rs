//! Loss-threshold calibration and the two-stage anomaly / novelty workflow.
//!
//! A flow is first scored by the anomaly detector (trained on benign
//! traffic). Flows at or below its threshold are benign. Flows above it are
//! re-normalized from their raw feature vector with the novelty detector's
//! own parameters and scored again: at or below the novelty threshold they
//! resemble a known attack class, above it they are reported as novel.

use std::collections::{BTreeSet, VecDeque};
use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{featurize_record_lenient, FeatureMatrix, FeatureMode, FeatureSchema};
use crate::flow::{AttackLabel, FlowError, FlowRecord};
use crate::graph::NodeFeatureTable;
use crate::neural::{AEModel, ModelRole, NeuralError, TrainConfig, TrainOutcome};

/// Default quantile of benign validation losses used as the anomaly threshold.
pub const DEFAULT_QUANTILE: f64 = 0.995;
/// Default minimum recall for supervised calibration.
pub const DEFAULT_RECALL_FLOOR: f64 = 0.5;
const MIN_UNSUPERVISED_SAMPLES: usize = 20;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("insufficient data: {found} values, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("quantile {0} must lie strictly between 0 and 1")]
    InvalidQuantile(f64),
    #[error("losses and labels differ in length ({losses} vs {labels})")]
    LengthMismatch { losses: usize, labels: usize },
    #[error("calibration needs both positive and negative examples")]
    SingleClass,
    #[error("non-finite loss value")]
    NonFinite,
    #[error("training data for the {role} contains {count} disallowed rows (first: {example})")]
    LabelContamination {
        role: &'static str,
        count: usize,
        example: String,
    },
    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("model has no calibrated threshold")]
    MissingThreshold,
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// Empirical quantile with linear interpolation between order statistics
/// (position `q * (n - 1)` in the sorted sample).
pub fn calibrate_threshold_unsupervised(losses: &[f64], quantile: f64) -> Result<f64, DetectError> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(DetectError::InvalidQuantile(quantile));
    }
    if losses.len() < MIN_UNSUPERVISED_SAMPLES {
        return Err(DetectError::InsufficientData {
            found: losses.len(),
            needed: MIN_UNSUPERVISED_SAMPLES,
        });
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(DetectError::NonFinite);
    }
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = quantile * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Outcome of a supervised threshold scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    /// Number of candidate thresholds scanned.
    pub candidates: usize,
    /// False when no candidate reached the recall floor; the threshold then
    /// maximizes recall instead.
    pub feasible: bool,
}

/// Picks the loss threshold with the highest precision among those whose
/// recall is at least `recall_floor`; ties go to higher recall, then to the
/// lower threshold. A flow is predicted positive when its loss is strictly
/// above the threshold. Candidates are midpoints between consecutive
/// distinct losses.
pub fn calibrate_threshold_supervised(
    losses: &[f64],
    labels: &[bool],
    recall_floor: f64,
) -> Result<Calibration, DetectError> {
    if losses.len() != labels.len() {
        return Err(DetectError::LengthMismatch {
            losses: losses.len(),
            labels: labels.len(),
        });
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(DetectError::NonFinite);
    }
    let total_pos = labels.iter().filter(|&&l| l).count();
    if total_pos == 0 || total_pos == labels.len() {
        return Err(DetectError::SingleClass);
    }
    let mut pairs: Vec<(f64, bool)> = losses.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // distinct values with their positive/negative counts, ascending
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (v, l) in pairs {
        match groups.last_mut() {
            Some(g) if g.0 == v => {
                if l {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((v, usize::from(l), usize::from(!l))),
        }
    }

    let mut best: Option<(Calibration, bool)> = None;
    let mut fallback: Option<Calibration> = None;
    // counts of positives / negatives strictly above the current candidate
    let mut tp: usize = groups.iter().map(|g| g.1).sum();
    let mut fp: usize = groups.iter().map(|g| g.2).sum();
    let candidates = groups.len().saturating_sub(1);
    for i in 0..candidates {
        tp -= groups[i].1;
        fp -= groups[i].2;
        let threshold = groups[i].0 + (groups[i + 1].0 - groups[i].0) / 2.0;
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / total_pos as f64;
        let cand = Calibration {
            threshold,
            precision,
            recall,
            candidates,
            feasible: true,
        };
        if recall >= recall_floor {
            let better = match &best {
                None => true,
                Some((b, _)) => {
                    precision > b.precision || (precision == b.precision && recall > b.recall)
                }
            };
            if better {
                best = Some((cand, true));
            }
        }
        let better_fallback = match &fallback {
            None => true,
            Some(b) => recall > b.recall || (recall == b.recall && precision > b.precision),
        };
        if better_fallback {
            fallback = Some(Calibration {
                feasible: false,
                ..cand
            });
        }
    }
    if let Some((cal, _)) = best {
        return Ok(cal);
    }
    Ok(fallback.unwrap_or_else(|| {
        // a single distinct loss value: the only way to flag anything is to
        // flag everything
        let v = groups[0].0;
        Calibration {
            threshold: v - v.abs().max(1.0) * f64::EPSILON,
            precision: total_pos as f64 / labels.len() as f64,
            recall: 1.0,
            candidates: 0,
            feasible: false,
        }
    }))
}

/// Autoencoder trained on benign traffic only, with its loss threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyDetector {
    pub model: AEModel,
    pub threshold: f64,
}

/// Autoencoder trained on known attack classes only, with its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct NoveltyDetector {
    pub model: AEModel,
    pub threshold: f64,
    pub known_classes: Vec<String>,
}

/// Rejects training sets containing rows the detector must never see.
pub fn audit_training_labels(
    labels: &[AttackLabel],
    role: ModelRole,
) -> Result<(), DetectError> {
    let (name, bad): (&'static str, fn(&AttackLabel) -> bool) = match role {
        ModelRole::Anomaly => ("anomaly detector", |l| !l.is_benign()),
        ModelRole::Novelty => ("novelty detector", |l| !l.is_attack()),
        ModelRole::Generic => return Ok(()),
    };
    let offending: Vec<&AttackLabel> = labels.iter().filter(|l| bad(l)).collect();
    if let Some(first) = offending.first() {
        return Err(DetectError::LabelContamination {
            role: name,
            count: offending.len(),
            example: first.to_string(),
        });
    }
    Ok(())
}

/// Distinct attack classes in `labels`, sorted.
pub fn attack_classes(labels: &[AttackLabel]) -> Vec<String> {
    labels
        .iter()
        .filter_map(|l| l.class().map(str::to_string))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Trains the model for `role` after auditing the training labels.
pub fn train_detector_model(
    raw: &FeatureMatrix,
    labels: &[AttackLabel],
    role: ModelRole,
    cfg: &TrainConfig,
) -> Result<(AEModel, TrainOutcome), DetectError> {
    audit_training_labels(labels, role)?;
    let known = if role == ModelRole::Novelty {
        attack_classes(labels)
    } else {
        Vec::new()
    };
    Ok(AEModel::fit(raw, role, known, cfg)?)
}

impl AnomalyDetector {
    pub fn new(model: AEModel, threshold: f64) -> Self {
        Self { model, threshold }
    }

    /// Uses the threshold stored in the model file.
    pub fn from_model(model: AEModel) -> Result<Self, DetectError> {
        let threshold = model.meta.threshold.ok_or(DetectError::MissingThreshold)?;
        Ok(Self { model, threshold })
    }
}

impl NoveltyDetector {
    pub fn new(model: AEModel, threshold: f64) -> Self {
        let known_classes = model.meta.known_classes.clone();
        Self {
            model,
            threshold,
            known_classes,
        }
    }

    pub fn from_model(model: AEModel) -> Result<Self, DetectError> {
        let threshold = model.meta.threshold.ok_or(DetectError::MissingThreshold)?;
        Ok(Self::new(model, threshold))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Benign,
    KnownAttack,
    NovelThreat,
}

/// Per-flow decision. `nd_loss` is present exactly when the flow passed
/// the anomaly gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub ad_loss: f64,
    pub nd_loss: Option<f64>,
}

fn check_schema(model: &AEModel, schema: &FeatureSchema, which: &str) -> Result<(), DetectError> {
    if model.feature_names != schema.names {
        return Err(DetectError::SchemaMismatch(format!(
            "{which} model expects {} columns {:?}, input has {} columns",
            model.feature_names.len(),
            model.feature_names.first(),
            schema.dim()
        )));
    }
    Ok(())
}

/// Runs the two-stage workflow over raw (un-normalized) feature rows.
pub fn detect(
    ad: &AnomalyDetector,
    nd: &NoveltyDetector,
    raw: &FeatureMatrix,
) -> Result<Vec<Verdict>, DetectError> {
    check_schema(&ad.model, &raw.schema, "anomaly")?;
    check_schema(&nd.model, &raw.schema, "novelty")?;
    let ad_losses = ad.model.score_raw(raw)?;
    let gated: Vec<usize> = (0..raw.rows())
        .filter(|&i| ad_losses[i] > ad.threshold)
        .collect();
    let nd_losses = nd.model.score_raw(&raw.select_rows(&gated))?;
    let mut verdicts: Vec<Verdict> = ad_losses
        .iter()
        .map(|&ad_loss| Verdict {
            kind: VerdictKind::Benign,
            ad_loss,
            nd_loss: None,
        })
        .collect();
    for (&i, &nd_loss) in gated.iter().zip(&nd_losses) {
        verdicts[i].nd_loss = Some(nd_loss);
        verdicts[i].kind = if nd_loss <= nd.threshold {
            VerdictKind::KnownAttack
        } else {
            VerdictKind::NovelThreat
        };
    }
    Ok(verdicts)
}

/// Feature mode matching a model's input columns, if any.
pub fn model_feature_mode(model: &AEModel) -> Option<FeatureMode> {
    [FeatureMode::FlowOnly, FeatureMode::FlowAndGraph]
        .into_iter()
        .find(|&m| FeatureSchema::for_mode(m).names == model.feature_names)
}

/// One element of a verdict stream.
#[derive(Debug, Clone)]
pub struct StreamItem {
    /// Position of the record in the input.
    pub index: usize,
    pub outcome: Result<Verdict, String>,
    /// An endpoint was absent from the node table; its graph features were zeroed.
    pub unknown_node: bool,
    /// Scoring time of the record's batch divided by the batch size.
    pub latency: Duration,
}

/// Iterator that scores records in fixed-size batches against a prebuilt
/// node feature table, holding at most one batch in memory.
pub struct VerdictStream<'a, I> {
    ad: &'a AnomalyDetector,
    nd: &'a NoveltyDetector,
    nft: &'a NodeFeatureTable,
    mode: FeatureMode,
    records: I,
    batch_size: usize,
    next_index: usize,
    pending: VecDeque<StreamItem>,
}

/// Streams verdicts for `records`, in input order.
pub fn batch_detect_stream<'a, I>(
    ad: &'a AnomalyDetector,
    nd: &'a NoveltyDetector,
    records: I,
    nft: &'a NodeFeatureTable,
    batch_size: usize,
) -> Result<VerdictStream<'a, I::IntoIter>, DetectError>
where
    I: IntoIterator<Item = Result<FlowRecord, FlowError>>,
{
    let mode = model_feature_mode(&ad.model).ok_or_else(|| {
        DetectError::SchemaMismatch("anomaly model does not use a known feature layout".into())
    })?;
    check_schema(&nd.model, &ad.model.schema(), "novelty")?;
    Ok(VerdictStream {
        ad,
        nd,
        nft,
        mode,
        records: records.into_iter(),
        batch_size: batch_size.max(1),
        next_index: 0,
        pending: VecDeque::new(),
    })
}

impl<I> VerdictStream<'_, I>
where
    I: Iterator<Item = Result<FlowRecord, FlowError>>,
{
    fn fill(&mut self) {
        let schema = FeatureSchema::for_mode(self.mode);
        let mut matrix = FeatureMatrix::empty(schema);
        let mut slots: Vec<StreamItem> = Vec::with_capacity(self.batch_size);
        let mut ok_slots = Vec::with_capacity(self.batch_size);
        for item in self.records.by_ref().take(self.batch_size) {
            let index = self.next_index;
            self.next_index += 1;
            match item {
                Ok(rec) => {
                    let f = featurize_record_lenient(&rec, self.nft, self.mode);
                    matrix.push_row(&f.values);
                    ok_slots.push(slots.len());
                    slots.push(StreamItem {
                        index,
                        outcome: Err(String::new()),
                        unknown_node: f.unknown_node,
                        latency: Duration::ZERO,
                    });
                }
                Err(e) => slots.push(StreamItem {
                    index,
                    outcome: Err(e.to_string()),
                    unknown_node: false,
                    latency: Duration::ZERO,
                }),
            }
        }
        if slots.is_empty() {
            return;
        }
        let start = Instant::now();
        let result = detect(self.ad, self.nd, &matrix);
        let latency = start.elapsed() / slots.len() as u32;
        match result {
            Ok(verdicts) => {
                for (&slot, v) in ok_slots.iter().zip(verdicts) {
                    slots[slot].outcome = Ok(v);
                }
            }
            Err(e) => {
                for &slot in &ok_slots {
                    slots[slot].outcome = Err(e.to_string());
                }
            }
        }
        for mut s in slots {
            s.latency = latency;
            self.pending.push_back(s);
        }
    }
}

impl<I> Iterator for VerdictStream<'_, I>
where
    I: Iterator<Item = Result<FlowRecord, FlowError>>,
{
    type Item = StreamItem;

    fn next(&mut self) -> Option<StreamItem> {
        if self.pending.is_empty() {
            self.fill();
        }
        self.pending.pop_front()
    }
}

/// Counts of each verdict.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub benign: usize,
    pub known_attack: usize,
    pub novel_threat: usize,
    pub errors: usize,
    pub total: usize,
}

impl VerdictSummary {
    pub fn add(&mut self, kind: Option<VerdictKind>) {
        self.total += 1;
        match kind {
            Some(VerdictKind::Benign) => self.benign += 1,
            Some(VerdictKind::KnownAttack) => self.known_attack += 1,
            Some(VerdictKind::NovelThreat) => self.novel_threat += 1,
            None => self.errors += 1,
        }
    }
}

#[derive(Serialize)]
struct VerdictLine<'a> {
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<VerdictKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ad_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nd_loss: Option<f64>,
    flags: Vec<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

/// Writes verdicts as JSON lines followed by one summary line.
pub struct VerdictWriter<W: Write> {
    out: W,
    summary: VerdictSummary,
}

impl<W: Write> VerdictWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            summary: VerdictSummary::default(),
        }
    }

    pub fn write(&mut self, index: usize, outcome: Result<&Verdict, &str>, unknown_node: bool) -> std::io::Result<()> {
        let mut flags = Vec::new();
        if unknown_node {
            flags.push("unknown_node");
        }
        let line = match outcome {
            Ok(v) => VerdictLine {
                index,
                verdict: Some(v.kind),
                ad_loss: Some(v.ad_loss),
                nd_loss: v.nd_loss,
                flags,
                error: None,
            },
            Err(e) => VerdictLine {
                index,
                verdict: None,
                ad_loss: None,
                nd_loss: None,
                flags,
                error: Some(e),
            },
        };
        self.summary.add(outcome.ok().map(|v| v.kind));
        serde_json::to_writer(&mut self.out, &line)?;
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> std::io::Result<VerdictSummary> {
        serde_json::to_writer(
            &mut self.out,
            &serde_json::json!({ "summary": self.summary }),
        )?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(self.summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{build_architecture, Autoencoder, ModelMeta, NormalizationParams};

    /// Exhaustive oracle: evaluates every midpoint candidate directly.
    fn scan_oracle(losses: &[f64], labels: &[bool], floor: f64) -> Option<(f64, f64, f64)> {
        let mut uniq = losses.to_vec();
        uniq.sort_by(f64::total_cmp);
        uniq.dedup();
        let mut best: Option<(f64, f64, f64)> = None;
        for w in uniq.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let tp = losses.iter().zip(labels).filter(|(l, y)| **l > t && **y).count();
            let fp = losses.iter().zip(labels).filter(|(l, y)| **l > t && !**y).count();
            let pos = labels.iter().filter(|y| **y).count();
            let p = tp as f64 / (tp + fp) as f64;
            let r = tp as f64 / pos as f64;
            if r < floor {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, bp, br)) => p > bp || (p == bp && r > br),
            };
            if better {
                best = Some((t, p, r));
            }
        }
        best
    }

    #[test]
    fn quantile_cases() {
        let losses: Vec<f64> = (1..=1000).map(|i| i as f64 * 1e-3).collect();
        // position 0.995 * 999 = 994.005 between 0.995 and 0.996
        let t = calibrate_threshold_unsupervised(&losses, 0.995).unwrap();
        assert!((t - 0.995005).abs() < 1e-12, "{t}");
        assert_eq!(calibrate_threshold_unsupervised(&[0.25; 30], 0.995).unwrap(), 0.25);
        let mut small: Vec<f64> = vec![1.0, 2.0, 3.0];
        small.extend(std::iter::repeat_n(2.0, 18));
        assert_eq!(calibrate_threshold_unsupervised(&small, 0.5).unwrap(), 2.0);
        assert!(matches!(
            calibrate_threshold_unsupervised(&[1.0, 2.0, 3.0], 0.5),
            Err(DetectError::InsufficientData { found: 3, needed: 20 })
        ));
        assert!(calibrate_threshold_unsupervised(&losses, 1.0).is_err());
    }

    #[test]
    fn supervised_perfect_separation() {
        let c = calibrate_threshold_supervised(&[0.01, 0.02, 0.5, 0.6], &[false, false, true, true], 0.5)
            .unwrap();
        assert!(c.threshold > 0.02 && c.threshold <= 0.5);
        assert_eq!((c.precision, c.recall), (1.0, 1.0));
        assert!(c.feasible);
    }

    #[test]
    fn supervised_prefers_precision_above_floor() {
        let c = calibrate_threshold_supervised(&[0.1, 0.2, 0.3, 0.4], &[false, true, false, true], 0.5)
            .unwrap();
        assert!(c.threshold > 0.3 && c.threshold <= 0.4);
        assert_eq!((c.precision, c.recall), (1.0, 0.5));
        assert_eq!(c.candidates, 3);
    }

    #[test]
    fn supervised_identical_losses_falls_back() {
        let c = calibrate_threshold_supervised(&[0.3; 6], &[true, false, true, false, true, false], 0.5)
            .unwrap();
        assert!(!c.feasible);
        assert_eq!(c.recall, 1.0);
        assert!(c.threshold < 0.3);

        // floor unreachable by any midpoint: the highest-recall midpoint is kept
        let c = calibrate_threshold_supervised(
            &[0.1, 0.1, 0.1, 0.5, 0.2],
            &[true, true, true, true, false],
            0.9,
        )
        .unwrap();
        assert!(!c.feasible);
        assert_eq!(c.recall, 0.25);
    }

    #[test]
    fn supervised_errors() {
        assert!(matches!(
            calibrate_threshold_supervised(&[0.1, 0.2], &[true, true], 0.5),
            Err(DetectError::SingleClass)
        ));
        assert!(matches!(
            calibrate_threshold_supervised(&[0.1], &[true, false], 0.5),
            Err(DetectError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn supervised_matches_exhaustive_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let n = rng.random_range(2..40);
            let losses: Vec<f64> = (0..n).map(|_| (rng.random_range(0..15) as f64) / 10.0).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
                continue;
            }
            let floor = rng.random_range(0.0..1.0);
            let got = calibrate_threshold_supervised(&losses, &labels, floor).unwrap();
            match scan_oracle(&losses, &labels, floor) {
                Some((t, p, r)) => {
                    assert!(got.feasible);
                    assert_eq!((got.threshold, got.precision, got.recall), (t, p, r));
                }
                None => assert!(!got.feasible),
            }
        }
    }

    fn identity_like(dim: usize, bias: f64, threshold: Option<f64>, role: ModelRole) -> AEModel {
        let mut ae = Autoencoder::zeros(build_architecture(dim));
        ae.layers.last_mut().unwrap().bias = vec![bias; dim];
        AEModel {
            autoencoder: ae,
            normalization: NormalizationParams {
                min: vec![0.0; dim],
                max: vec![1.0; dim],
            },
            feature_names: FeatureSchema::for_mode(FeatureMode::FlowOnly).names,
            meta: ModelMeta {
                role,
                seed: 0,
                epochs_run: 0,
                best_epoch: 0,
                final_train_loss: 0.0,
                best_val_loss: 0.0,
                threshold,
                known_classes: vec![],
                created_by: "test".into(),
            },
        }
    }

    fn rows(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(
            FeatureSchema::for_mode(FeatureMode::FlowOnly),
            values.iter().flat_map(|&v| [v; 6]).collect(),
        )
    }

    #[test]
    fn detect_gate_rules() {
        // constant-output models: loss of a row filled with v is (v - bias)^2
        let ad = AnomalyDetector::new(identity_like(6, 0.0, None, ModelRole::Anomaly), 0.01);
        let nd = NoveltyDetector::new(identity_like(6, 1.0, None, ModelRole::Novelty), 0.04);
        let v = detect(&ad, &nd, &rows(&[0.05, 0.9, 0.5])).unwrap();
        assert_eq!(v[0].kind, VerdictKind::Benign);
        assert!(v[0].nd_loss.is_none());
        assert_eq!(v[1].kind, VerdictKind::KnownAttack);
        assert!(v[1].nd_loss.is_some());
        assert_eq!(v[2].kind, VerdictKind::NovelThreat);
    }

    #[test]
    fn novelty_uses_raw_vector_with_its_own_params() {
        let ad = AnomalyDetector::new(identity_like(6, 0.0, None, ModelRole::Anomaly), 0.01);
        let mut nd_model = identity_like(6, 0.0, None, ModelRole::Novelty);
        // raw 10.0 normalizes to 1.0 under AD params but 0.0 under ND params
        nd_model.normalization = NormalizationParams {
            min: vec![10.0; 6],
            max: vec![20.0; 6],
        };
        let nd = NoveltyDetector::new(nd_model, 0.5);
        let v = detect(&ad, &nd, &rows(&[10.0])).unwrap();
        assert_eq!(v[0].ad_loss, 1.0);
        assert_eq!(v[0].nd_loss, Some(0.0));
        assert_eq!(v[0].kind, VerdictKind::KnownAttack);
    }

    #[test]
    fn detect_rejects_schema_mismatch() {
        let ad = AnomalyDetector::new(identity_like(6, 0.0, None, ModelRole::Anomaly), 0.01);
        let nd = NoveltyDetector::new(identity_like(6, 0.0, None, ModelRole::Novelty), 0.01);
        let other = FeatureMatrix::new(
            FeatureSchema {
                names: (0..6).map(|i| format!("x{i}")).collect(),
            },
            vec![0.0; 6],
        );
        assert!(matches!(detect(&ad, &nd, &other), Err(DetectError::SchemaMismatch(_))));
    }

    #[test]
    fn missing_threshold() {
        assert!(matches!(
            AnomalyDetector::from_model(identity_like(6, 0.0, None, ModelRole::Anomaly)),
            Err(DetectError::MissingThreshold)
        ));
        assert!(AnomalyDetector::from_model(identity_like(6, 0.0, Some(0.1), ModelRole::Anomaly)).is_ok());
    }

    #[test]
    fn label_audit() {
        let benign = vec![AttackLabel::Benign; 3];
        assert!(audit_training_labels(&benign, ModelRole::Anomaly).is_ok());
        let mixed = vec![AttackLabel::Benign, AttackLabel::attack("worm")];
        assert!(matches!(
            audit_training_labels(&mixed, ModelRole::Anomaly),
            Err(DetectError::LabelContamination { count: 1, .. })
        ));
        assert!(matches!(
            audit_training_labels(&mixed, ModelRole::Novelty),
            Err(DetectError::LabelContamination { count: 1, .. })
        ));
        assert!(audit_training_labels(&[AttackLabel::Unlabeled], ModelRole::Novelty).is_err());
        assert_eq!(
            attack_classes(&[AttackLabel::attack("worm"), AttackLabel::attack("botnet"), AttackLabel::attack("worm")]),
            vec!["botnet".to_string(), "worm".to_string()]
        );
    }

    #[test]
    fn verdict_writer_format() {
        let mut buf = Vec::new();
        let mut w = VerdictWriter::new(&mut buf);
        let v = Verdict {
            kind: VerdictKind::NovelThreat,
            ad_loss: 0.5,
            nd_loss: Some(0.25),
        };
        w.write(0, Ok(&v), true).unwrap();
        w.write(1, Err("bad row"), false).unwrap();
        let s = w.finish().unwrap();
        assert_eq!((s.total, s.novel_threat, s.errors), (2, 1, 1));
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            r#"{"index":0,"verdict":"novel_threat","ad_loss":0.5,"nd_loss":0.25,"flags":["unknown_node"]}"#
        );
        assert_eq!(lines[1], r#"{"index":1,"flags":[],"error":"bad row"}"#);
        assert!(lines[2].starts_with(r#"{"summary":{"benign":0,"#));
    }
}
