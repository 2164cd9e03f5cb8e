//! Experiment protocols over labeled multi-network corpora.
//!
//! Every network is featurized on its own interaction graph and min-max
//! scaled with parameters fitted on that network's benign training split,
//! so models trained on one network can be applied to another. Flow
//! indices below always refer to rows of a [`PreparedNetwork`].

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{outcomes, roc_auc, Confusion, MetricError};
use super::report::{average_row, loss_histogram, ExperimentReport, ReportRow};
use crate::derive_seed;
use crate::detectors::{
    audit_training_labels, calibrate_threshold_supervised, calibrate_threshold_unsupervised, detect,
    AnomalyDetector, DetectError, NoveltyDetector, VerdictKind, DEFAULT_QUANTILE, DEFAULT_RECALL_FLOOR,
};
use crate::features::{featurize, FeatureError, FeatureMatrix, FeatureMode};
use crate::flow::{split_indices, AttackLabel, FlowDataset, FlowError};
use crate::graph::{compute_node_features, NetworkGraph, NodeFeatureConfig};
use crate::neural::{AEModel, ModelRole, NeuralError, NormalizationParams, TrainConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid experiment setup: {0}")]
    Setup(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

pub const EXPERIMENTS: [&str; 5] = [
    "baseline_single",
    "ad_generalization",
    "novelty_loo",
    "end_to_end",
    "overall_comparison",
];

const E2E_SCORING_NOTE: &str = "end-to-end ranking score: nd_loss for flows passing the anomaly gate, \
otherwise -(tau_ad - ad_loss); flows rejected by the anomaly detector count as negative predictions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root seed; splits, subsampling and every model seed derive from it.
    pub seed: u64,
    pub feature_mode: FeatureMode,
    /// Share of each network's benign flows (and of each attack class) used for training.
    pub train_fraction: f64,
    /// Share of evaluation events drawn from the held-out class.
    pub holdout_prevalence: f64,
    /// Classes to hold out in turn; empty means every class in the corpus.
    pub holdout_classes: Vec<String>,
    pub nd_recall_floor: f64,
    /// Recall floor for the anomaly threshold in the end-to-end pipeline.
    pub ad_recall_floor: f64,
    /// Quantile of training losses used as the anomaly threshold when no
    /// labels are available.
    pub ad_quantile: f64,
    /// The `seed` fields of these blocks are replaced by derived seeds.
    pub ad_train: TrainConfig,
    pub nd_train: TrainConfig,
    pub graph: NodeFeatureConfig,
    pub histogram_bins: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            feature_mode: FeatureMode::FlowAndGraph,
            train_fraction: 0.7,
            holdout_prevalence: 0.015,
            holdout_classes: Vec::new(),
            nd_recall_floor: DEFAULT_RECALL_FLOOR,
            ad_recall_floor: 0.5,
            ad_quantile: DEFAULT_QUANTILE,
            ad_train: TrainConfig::default(),
            nd_train: TrainConfig {
                batch_size: 64,
                max_epochs: 80,
                patience: 8,
                ..TrainConfig::default()
            },
            graph: NodeFeatureConfig::default(),
            histogram_bins: 40,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ExperimentError::Setup(m.to_string()));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        if !(self.holdout_prevalence > 0.0 && self.holdout_prevalence < 1.0) {
            return bad("holdout_prevalence must lie in (0, 1)");
        }
        for (name, v) in [
            ("nd_recall_floor", self.nd_recall_floor),
            ("ad_recall_floor", self.ad_recall_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ExperimentError::Setup(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.ad_quantile > 0.0 && self.ad_quantile < 1.0) {
            return bad("ad_quantile must lie in (0, 1)");
        }
        self.ad_train.validate()?;
        self.nd_train.validate()?;
        Ok(())
    }

    fn train_cfg(&self, base: &TrainConfig, stream: usize, sub: usize) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.seed, stream, sub),
            ..base.clone()
        }
    }
}

// seed streams
const S_BENIGN_SPLIT: usize = 1;
const S_ATTACK_SPLIT: usize = 2;
const S_AD: usize = 3;
const S_ND: usize = 4;
const S_SINGLE: usize = 5;
const S_POOL: usize = 6;
const S_ADGEN: usize = 7;

/// One network ready for experiments.
#[derive(Debug, Clone)]
pub struct PreparedNetwork {
    pub network_id: String,
    pub labels: Vec<AttackLabel>,
    /// Full-width features scaled with this network's benign-train parameters.
    pub features: FeatureMatrix,
    pub benign_train: Vec<usize>,
    pub benign_test: Vec<usize>,
    /// Per attack class, stratified.
    pub attack_train: BTreeMap<String, Vec<usize>>,
    pub attack_test: BTreeMap<String, Vec<usize>>,
    pub graph_warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub networks: Vec<PreparedNetwork>,
}

/// A flow addressed by (network, row).
type FlowRef = (usize, usize);

impl PreparedCorpus {
    pub fn attack_classes(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .networks
            .iter()
            .flat_map(|n| n.attack_train.keys().chain(n.attack_test.keys()).cloned())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    fn label(&self, f: FlowRef) -> &AttackLabel {
        &self.networks[f.0].labels[f.1]
    }

    fn gather(&self, refs: &[FlowRef], mode: FeatureMode) -> (FeatureMatrix, Vec<AttackLabel>) {
        let schema = crate::features::FeatureSchema::for_mode(mode);
        let d = mode.dim();
        let mut data = Vec::with_capacity(refs.len() * d);
        for &(n, i) in refs {
            data.extend_from_slice(&self.networks[n].features.row(i)[..d]);
        }
        let labels = refs.iter().map(|&f| self.label(f).clone()).collect();
        (FeatureMatrix::new(schema, data), labels)
    }

    fn refs(&self, nets: impl IntoIterator<Item = usize>, pick: impl Fn(&PreparedNetwork) -> Vec<usize>) -> Vec<FlowRef> {
        nets.into_iter()
            .flat_map(|n| pick(&self.networks[n]).into_iter().map(move |i| (n, i)))
            .collect()
    }

    fn all_nets(&self) -> std::ops::Range<usize> {
        0..self.networks.len()
    }
}

fn split_or_all(n: usize, frac: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    if n < 2 {
        return (Vec::new(), (0..n).collect());
    }
    split_indices(n, frac, seed).expect("fraction validated, n > 0")
}

/// Builds graph features for each network and fixes the splits.
pub fn prepare_corpus(datasets: &[FlowDataset], cfg: &ExperimentConfig) -> Result<PreparedCorpus> {
    cfg.validate()?;
    if datasets.is_empty() {
        return Err(ExperimentError::Setup("no networks given".into()));
    }
    let networks = datasets
        .par_iter()
        .enumerate()
        .map(|(ni, ds)| -> Result<PreparedNetwork> {
            let g = NetworkGraph::from_dataset(ds);
            let nft = compute_node_features(&g, &cfg.graph);
            let raw = featurize(ds, &nft, FeatureMode::FlowAndGraph)?;
            let labels = ds.labels();

            let benign: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_benign()).collect();
            if benign.len() < 2 {
                return Err(ExperimentError::Setup(format!(
                    "network {} has fewer than two benign flows",
                    ds.network_id
                )));
            }
            let (tr, te) = split_or_all(benign.len(), cfg.train_fraction, derive_seed(cfg.seed, S_BENIGN_SPLIT, ni));
            let benign_train: Vec<usize> = tr.iter().map(|&k| benign[k]).collect();
            let benign_test: Vec<usize> = te.iter().map(|&k| benign[k]).collect();

            let mut by_class: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for (i, l) in labels.iter().enumerate() {
                if let Some(c) = l.class() {
                    by_class.entry(c.to_string()).or_default().push(i);
                }
            }
            let mut attack_train = BTreeMap::new();
            let mut attack_test = BTreeMap::new();
            for (ci, (class, rows)) in by_class.into_iter().enumerate() {
                let seed = derive_seed(cfg.seed, S_ATTACK_SPLIT, ni * 1000 + ci);
                let (tr, te) = split_or_all(rows.len(), cfg.train_fraction, seed);
                attack_train.insert(class.clone(), tr.iter().map(|&k| rows[k]).collect());
                attack_test.insert(class, te.iter().map(|&k| rows[k]).collect());
            }

            let params = NormalizationParams::fit(&raw.select_rows(&benign_train))?;
            let features = params.normalize(&raw)?;
            Ok(PreparedNetwork {
                network_id: ds.network_id.clone(),
                labels,
                features,
                benign_train,
                benign_test,
                attack_train,
                attack_test,
                graph_warnings: nft.warnings.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedCorpus { networks })
}

fn config_echo(corpus: &PreparedCorpus, cfg: &ExperimentConfig, extra: serde_json::Value) -> serde_json::Value {
    let networks: Vec<serde_json::Value> = corpus
        .networks
        .iter()
        .map(|n| {
            serde_json::json!({
                "network_id": n.network_id,
                "flows": n.labels.len(),
                "benign_train": n.benign_train.len(),
                "benign_test": n.benign_test.len(),
                "attack_classes": n.attack_train.keys().collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::json!({
        "experiment_config": cfg,
        "networks": networks,
        "run": extra,
    })
}

fn fit_model(
    corpus: &PreparedCorpus,
    refs: &[FlowRef],
    mode: FeatureMode,
    role: ModelRole,
    train: &TrainConfig,
) -> Result<AEModel> {
    let (x, labels) = corpus.gather(refs, mode);
    audit_training_labels(&labels, role)?;
    let known = if role == ModelRole::Novelty {
        crate::detectors::attack_classes(&labels)
    } else {
        Vec::new()
    };
    Ok(AEModel::fit(&x, role, known, train)?.0)
}

fn holdout_list(corpus: &PreparedCorpus, cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let all = corpus.attack_classes();
    if all.len() < 2 {
        return Err(ExperimentError::Setup(
            "at least two attack classes are required".into(),
        ));
    }
    if cfg.holdout_classes.is_empty() {
        return Ok(all);
    }
    for c in &cfg.holdout_classes {
        if !all.contains(c) {
            return Err(ExperimentError::Setup(format!("holdout class {c:?} is not in the corpus")));
        }
    }
    Ok(cfg.holdout_classes.clone())
}

fn class_index(corpus: &PreparedCorpus, class: &str) -> usize {
    corpus.attack_classes().iter().position(|c| c == class).unwrap_or(usize::MAX >> 8)
}

fn shuffled<T: Clone>(v: &[T], seed: u64) -> Vec<T> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut out = v.to_vec();
    out.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    out
}

/// Evaluation events for one held-out class, split into disjoint
/// calibration and evaluation halves (stratified by label).
#[derive(Debug, Clone)]
struct EvalPool {
    calibration: Vec<FlowRef>,
    evaluation: Vec<FlowRef>,
    holdout_rows: usize,
}

fn eval_pool(
    corpus: &PreparedCorpus,
    holdout: &str,
    with_benign: bool,
    cfg: &ExperimentConfig,
) -> Result<EvalPool> {
    let hi = class_index(corpus, holdout);
    let mut negatives: Vec<FlowRef> = Vec::new();
    if with_benign {
        negatives.extend(corpus.refs(corpus.all_nets(), |n| n.benign_test.clone()));
    }
    negatives.extend(corpus.refs(corpus.all_nets(), |n| {
        n.attack_test
            .iter()
            .filter(|(c, _)| c.as_str() != holdout)
            .flat_map(|(_, v)| v.iter().copied())
            .collect()
    }));
    // the held-out class is never trained on, so both of its splits are usable
    let holdout_all: Vec<FlowRef> = corpus.refs(corpus.all_nets(), |n| {
        n.attack_train
            .get(holdout)
            .into_iter()
            .chain(n.attack_test.get(holdout))
            .flat_map(|v| v.iter().copied())
            .collect()
    });
    let p = cfg.holdout_prevalence;
    let wanted = (p / (1.0 - p) * negatives.len() as f64).round() as usize;
    let mut positives = shuffled(&holdout_all, derive_seed(cfg.seed, S_POOL, hi * 2));
    positives.truncate(wanted.max(2));
    if positives.len() < 2 || negatives.len() < 2 {
        return Err(ExperimentError::Setup(format!(
            "not enough events to evaluate holdout {holdout:?}"
        )));
    }

    // stratify by class so every class is represented in both halves
    let mut strata: BTreeMap<String, Vec<FlowRef>> = BTreeMap::new();
    for &f in negatives.iter().chain(&positives) {
        strata.entry(corpus.label(f).to_string()).or_default().push(f);
    }
    let mut calibration = Vec::new();
    let mut evaluation = Vec::new();
    for (si, (_, refs)) in strata.into_iter().enumerate() {
        let s = shuffled(&refs, derive_seed(cfg.seed, S_POOL, hi * 2 + 1 + si * 4096));
        let half = s.len() / 2;
        calibration.extend_from_slice(&s[..half]);
        evaluation.extend_from_slice(&s[half..]);
    }
    calibration.sort_unstable();
    evaluation.sort_unstable();
    Ok(EvalPool {
        calibration,
        evaluation,
        holdout_rows: positives.len(),
    })
}

fn is_class(corpus: &PreparedCorpus, refs: &[FlowRef], class: &str) -> Vec<bool> {
    refs.iter().map(|&f| corpus.label(f).class() == Some(class)).collect()
}

fn pr_row(name: &str, scores: &[f64], labels: &[bool], predictions: &[bool]) -> Result<ReportRow> {
    let auc = roc_auc(&outcomes(scores, labels))?;
    let c = Confusion::from_predictions(predictions, labels)?;
    let pr = c.precision_recall();
    Ok(ReportRow::new(name, auc, pr.precision, pr.recall)
        .with("tp", c.tp as f64)
        .with("fp", c.fp as f64)
        .with("tn", c.tn as f64)
        .with("fn", c.fn_ as f64))
}

/// Anomaly detector trained on the benign training split of every network.
pub fn train_anomaly_model(corpus: &PreparedCorpus, mode: FeatureMode, cfg: &ExperimentConfig) -> Result<AEModel> {
    let refs = corpus.refs(corpus.all_nets(), |n| n.benign_train.clone());
    fit_model(corpus, &refs, mode, ModelRole::Anomaly, &cfg.train_cfg(&cfg.ad_train, S_AD, mode as usize))
}

/// `(network, row)` pairs the novelty detector for `holdout` is trained on.
pub fn novelty_training_rows(corpus: &PreparedCorpus, holdout: &str) -> Vec<(usize, usize)> {
    corpus.refs(corpus.all_nets(), |n| {
        n.attack_train
            .iter()
            .filter(|(c, _)| c.as_str() != holdout)
            .flat_map(|(_, v)| v.iter().copied())
            .collect()
    })
}

/// Novelty detector trained on the training split of every class except `holdout`.
pub fn train_novelty_model(
    corpus: &PreparedCorpus,
    holdout: &str,
    mode: FeatureMode,
    cfg: &ExperimentConfig,
) -> Result<AEModel> {
    let refs = novelty_training_rows(corpus, holdout);
    let (_, labels) = corpus.gather(&refs, FeatureMode::FlowOnly);
    let leaked = labels.iter().filter(|l| l.class() == Some(holdout)).count();
    if leaked > 0 {
        return Err(DetectError::LabelContamination {
            role: "novelty detector",
            count: leaked,
            example: holdout.to_string(),
        }
        .into());
    }
    let hi = class_index(corpus, holdout);
    let train = cfg.train_cfg(&cfg.nd_train, S_ND, hi * 2 + mode as usize);
    fit_model(corpus, &refs, mode, ModelRole::Novelty, &train)
}

/// Anomaly detection across networks: train on the benign data of the first
/// k networks for k = 1..=N, evaluate on every network's benign test split
/// plus all malicious flows of the first network.
pub fn run_ad_generalization(
    corpus: &PreparedCorpus,
    mode: FeatureMode,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let n = corpus.networks.len();
    let mut eval_refs = corpus.refs(corpus.all_nets(), |net| net.benign_test.clone());
    eval_refs.extend(corpus.refs([0], |net| {
        net.attack_train
            .values()
            .chain(net.attack_test.values())
            .flat_map(|v| v.iter().copied())
            .collect()
    }));
    eval_refs.sort_unstable();
    if eval_refs.iter().all(|&f| corpus.label(f).is_benign()) {
        return Err(ExperimentError::Setup(format!(
            "network {} has no malicious flows",
            corpus.networks[0].network_id
        )));
    }
    let (x_eval, eval_labels) = corpus.gather(&eval_refs, mode);
    let truth: Vec<bool> = eval_labels.iter().map(|l| l.is_attack()).collect();

    let runs = (1..=n)
        .into_par_iter()
        .map(|k| -> Result<(ReportRow, Vec<f64>)> {
            let train_refs = corpus.refs(0..k, |net| net.benign_train.clone());
            let train = cfg.train_cfg(&cfg.ad_train, S_ADGEN, k * 2 + mode as usize);
            let model = fit_model(corpus, &train_refs, mode, ModelRole::Anomaly, &train)?;
            let (x_train, _) = corpus.gather(&train_refs, mode);
            let tau = calibrate_threshold_unsupervised(&model.score_raw(&x_train)?, cfg.ad_quantile)?;
            let scores = model.score_raw(&x_eval)?;
            let preds: Vec<bool> = scores.iter().map(|&s| s > tau).collect();
            let names: Vec<&str> = corpus.networks[..k].iter().map(|n| n.network_id.as_str()).collect();
            let row = pr_row(&format!("k={k} ({})", names.join("+")), &scores, &truth, &preds)?
                .with("threshold", tau)
                .with("train_rows", train_refs.len() as f64);
            Ok((row, scores))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new(
        "ad_generalization",
        config_echo(corpus, cfg, serde_json::json!({"feature_mode": mode})),
    );
    report.notes.push(format!(
        "anomaly threshold: {} quantile of training losses; malicious flows from {}",
        cfg.ad_quantile, corpus.networks[0].network_id
    ));
    if let Some((_, scores)) = runs.last() {
        let samples: Vec<(String, f64)> = eval_labels
            .iter()
            .zip(scores)
            .map(|(l, &s)| (l.to_string(), s))
            .collect();
        report.histograms = loss_histogram(&format!("ad_k{n}"), &samples, cfg.histogram_bins, true);
    }
    report.rows = runs.into_iter().map(|r| r.0).collect();
    report.finish_average();
    Ok(report)
}

/// Both feature modes in one report; rows are prefixed with the mode.
pub fn run_ad_generalization_comparison(corpus: &PreparedCorpus, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "ad_generalization",
        config_echo(corpus, cfg, serde_json::json!({"feature_modes": ["flow_only", "flow_and_graph"]})),
    );
    for mode in [FeatureMode::FlowOnly, FeatureMode::FlowAndGraph] {
        let r = run_ad_generalization(corpus, mode, cfg)?;
        if report.notes.is_empty() {
            report.notes = r.notes.clone();
        }
        for mut row in r.rows {
            row.attack = format!("{}/{}", mode.as_str(), row.attack);
            report.rows.push(row);
        }
        for mut h in r.histograms {
            h.series = format!("{}/{}", mode.as_str(), h.series);
            report.histograms.push(h);
        }
    }
    Ok(report)
}

/// Held-out-class discrimination by a novelty detector trained on the
/// remaining classes. Evaluated on attack events only.
pub fn run_novelty_loo(
    corpus: &PreparedCorpus,
    holdout: &str,
    mode: FeatureMode,
    cfg: &ExperimentConfig,
) -> Result<ReportRow> {
    let nd = train_novelty_model(corpus, holdout, mode, cfg)?;
    novelty_row(corpus, &nd, holdout, mode, cfg)
}

fn novelty_row(
    corpus: &PreparedCorpus,
    nd: &AEModel,
    holdout: &str,
    mode: FeatureMode,
    cfg: &ExperimentConfig,
) -> Result<ReportRow> {
    let pool = eval_pool(corpus, holdout, false, cfg)?;
    let (x_cal, _) = corpus.gather(&pool.calibration, mode);
    let cal = calibrate_threshold_supervised(
        &nd.score_raw(&x_cal)?,
        &is_class(corpus, &pool.calibration, holdout),
        cfg.nd_recall_floor,
    )?;
    let (x_eval, _) = corpus.gather(&pool.evaluation, mode);
    let scores = nd.score_raw(&x_eval)?;
    let truth = is_class(corpus, &pool.evaluation, holdout);
    let preds: Vec<bool> = scores.iter().map(|&s| s > cal.threshold).collect();
    Ok(pr_row(holdout, &scores, &truth, &preds)?
        .with("threshold", cal.threshold)
        .with("calibration_feasible", f64::from(u8::from(cal.feasible)))
        .with("calibration_precision", cal.precision)
        .with("calibration_recall", cal.recall)
        .with("holdout_rows", pool.holdout_rows as f64)
        .with("pool_rows", (pool.calibration.len() + pool.evaluation.len()) as f64))
}

pub fn run_novelty_loo_all(corpus: &PreparedCorpus, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let holdouts = holdout_list(corpus, cfg)?;
    let rows = holdouts
        .par_iter()
        .map(|h| run_novelty_loo(corpus, h, cfg.feature_mode, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport::new(
        "novelty_loo",
        config_echo(corpus, cfg, serde_json::json!({"holdouts": holdouts})),
    );
    report.notes.push(format!(
        "novelty threshold: maximum precision subject to recall >= {} on a calibration half disjoint from evaluation",
        cfg.nd_recall_floor
    ));
    report.notes.push("training-label audit passed for every holdout".into());
    report.rows = rows;
    report.finish_average();
    Ok(report)
}

/// Full two-stage pipeline for one held-out class.
pub fn run_end_to_end(
    corpus: &PreparedCorpus,
    ad: &AEModel,
    holdout: &str,
    mode: FeatureMode,
    cfg: &ExperimentConfig,
) -> Result<ReportRow> {
    let nd = train_novelty_model(corpus, holdout, mode, cfg)?;
    let pool = eval_pool(corpus, holdout, true, cfg)?;

    let (x_cal, cal_labels) = corpus.gather(&pool.calibration, mode);
    let ad_cal = ad.score_raw(&x_cal)?;
    let is_attack: Vec<bool> = cal_labels.iter().map(|l| l.is_attack()).collect();
    let tau_ad = calibrate_threshold_supervised(&ad_cal, &is_attack, cfg.ad_recall_floor)?;

    let gated: Vec<usize> = (0..ad_cal.len()).filter(|&i| ad_cal[i] > tau_ad.threshold).collect();
    let nd_cal = nd.score_raw(&x_cal.select_rows(&gated))?;
    let gated_truth: Vec<bool> = gated
        .iter()
        .map(|&i| cal_labels[i].class() == Some(holdout))
        .collect();
    let tau_nd = match calibrate_threshold_supervised(&nd_cal, &gated_truth, cfg.nd_recall_floor) {
        Ok(c) => c.threshold,
        // nothing to separate among gated events: flag only what exceeds them all
        Err(DetectError::SingleClass) => nd_cal.iter().copied().fold(0.0, f64::max),
        Err(e) => return Err(e.into()),
    };

    let (x_eval, eval_labels) = corpus.gather(&pool.evaluation, mode);
    let adet = AnomalyDetector::new(ad.clone(), tau_ad.threshold);
    let ndet = NoveltyDetector::new(nd, tau_nd);
    let verdicts = detect(&adet, &ndet, &x_eval)?;
    let truth: Vec<bool> = eval_labels.iter().map(|l| l.class() == Some(holdout)).collect();
    let preds: Vec<bool> = verdicts.iter().map(|v| v.kind == VerdictKind::NovelThreat).collect();
    let scores: Vec<f64> = verdicts
        .iter()
        .map(|v| v.nd_loss.unwrap_or(-(tau_ad.threshold - v.ad_loss)))
        .collect();
    let rejected = verdicts
        .iter()
        .zip(&truth)
        .filter(|(v, &t)| t && v.kind == VerdictKind::Benign)
        .count();
    Ok(pr_row(holdout, &scores, &truth, &preds)?
        .with("tau_ad", tau_ad.threshold)
        .with("tau_nd", tau_nd)
        .with("ad_calibration_recall", tau_ad.recall)
        .with("holdout_rows", pool.holdout_rows as f64)
        .with("holdout_rejected_by_ad", rejected as f64))
}

fn end_to_end_rows(corpus: &PreparedCorpus, mode: FeatureMode, cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let holdouts = holdout_list(corpus, cfg)?;
    let ad = train_anomaly_model(corpus, mode, cfg)?;
    holdouts
        .par_iter()
        .map(|h| run_end_to_end(corpus, &ad, h, mode, cfg))
        .collect()
}

pub fn run_end_to_end_all(corpus: &PreparedCorpus, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let rows = end_to_end_rows(corpus, cfg.feature_mode, cfg)?;
    let mut report = ExperimentReport::new(
        "end_to_end",
        config_echo(corpus, cfg, serde_json::json!({"feature_mode": cfg.feature_mode})),
    );
    report.notes.push(E2E_SCORING_NOTE.into());
    report.notes.push(format!(
        "anomaly threshold: maximum precision subject to recall >= {} on the calibration half",
        cfg.ad_recall_floor
    ));
    report.rows = rows;
    report.finish_average();
    Ok(report)
}

/// A single autoencoder: trained on benign flows, then on benign plus all
/// but one attack class, scored on held-out-class-versus-rest.
pub fn run_single_ae_baseline(
    corpus: &PreparedCorpus,
    mode: FeatureMode,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "baseline_single",
        config_echo(corpus, cfg, serde_json::json!({"feature_mode": mode})),
    );

    // benign versus malicious
    let ad = train_anomaly_model(corpus, mode, cfg)?;
    let refs: Vec<FlowRef> = {
        let mut r = corpus.refs(corpus.all_nets(), |n| n.benign_test.clone());
        r.extend(corpus.refs(corpus.all_nets(), |n| {
            n.attack_test.values().flat_map(|v| v.iter().copied()).collect()
        }));
        r
    };
    let (x, labels) = corpus.gather(&refs, mode);
    let scores = ad.score_raw(&x)?;
    let truth: Vec<bool> = labels.iter().map(|l| l.is_attack()).collect();
    let (x_train, _) = corpus.gather(&corpus.refs(corpus.all_nets(), |n| n.benign_train.clone()), mode);
    let tau = calibrate_threshold_unsupervised(&ad.score_raw(&x_train)?, cfg.ad_quantile)?;
    let preds: Vec<bool> = scores.iter().map(|&s| s > tau).collect();
    let benign_row = pr_row("benign_vs_malicious", &scores, &truth, &preds)?.with("threshold", tau);
    let samples: Vec<(String, f64)> = labels.iter().zip(&scores).map(|(l, &s)| (l.to_string(), s)).collect();
    report.histograms = loss_histogram("single_benign", &samples, cfg.histogram_bins, true);

    let rows = single_novelty_rows(corpus, mode, cfg)?;
    report.notes.push(
        "benign_vs_malicious is trained on benign flows only and is excluded from the average; \
the remaining rows train on benign flows plus every other attack class"
            .into(),
    );
    report.average = average_row("average", &rows);
    report.rows = std::iter::once(benign_row).chain(rows).collect();
    Ok(report)
}

fn single_novelty_rows(corpus: &PreparedCorpus, mode: FeatureMode, cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let holdouts = holdout_list(corpus, cfg)?;
    holdouts
        .par_iter()
        .map(|h| -> Result<ReportRow> {
            let mut refs = corpus.refs(corpus.all_nets(), |n| n.benign_train.clone());
            refs.extend(corpus.refs(corpus.all_nets(), |n| {
                n.attack_train
                    .iter()
                    .filter(|(c, _)| c.as_str() != h.as_str())
                    .flat_map(|(_, v)| v.iter().copied())
                    .collect()
            }));
            let hi = class_index(corpus, h);
            let train = cfg.train_cfg(&cfg.ad_train, S_SINGLE, hi * 2 + mode as usize);
            let model = fit_model(corpus, &refs, mode, ModelRole::Generic, &train)?;
            let pool = eval_pool(corpus, h, true, cfg)?;
            let (x_cal, _) = corpus.gather(&pool.calibration, mode);
            let cal = calibrate_threshold_supervised(
                &model.score_raw(&x_cal)?,
                &is_class(corpus, &pool.calibration, h),
                cfg.nd_recall_floor,
            )?;
            let (x_eval, _) = corpus.gather(&pool.evaluation, mode);
            let scores = model.score_raw(&x_eval)?;
            let preds: Vec<bool> = scores.iter().map(|&s| s > cal.threshold).collect();
            Ok(pr_row(h, &scores, &is_class(corpus, &pool.evaluation, h), &preds)?
                .with("threshold", cal.threshold))
        })
        .collect()
}

/// Single autoencoder versus the dual detector without and with graph
/// features, each averaged over the held-out classes.
pub fn run_overall_comparison(corpus: &PreparedCorpus, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let single = single_novelty_rows(corpus, FeatureMode::FlowOnly, cfg)?;
    let dual = end_to_end_rows(corpus, FeatureMode::FlowOnly, cfg)?;
    let dual_graph = end_to_end_rows(corpus, FeatureMode::FlowAndGraph, cfg)?;
    let mut report = ExperimentReport::new(
        "overall_comparison",
        config_echo(corpus, cfg, serde_json::json!({"holdouts": holdout_list(corpus, cfg)?})),
    );
    report.notes.push(E2E_SCORING_NOTE.into());
    report.notes.push(
        "single: one flow-feature autoencoder trained on benign plus known attacks; \
dual: anomaly and novelty detectors on flow features; dual+graph: both detectors on flow and graph features"
            .into(),
    );
    for (name, rows) in [("single", single), ("dual", dual), ("dual+graph", dual_graph)] {
        let mut avg = average_row(name, &rows).expect("at least two holdouts");
        for r in &rows {
            avg.details.insert(format!("auc:{}", r.attack), r.auc);
        }
        report.rows.push(avg);
    }
    Ok(report)
}

/// Runs an experiment by name.
pub fn run_experiment(name: &str, corpus: &PreparedCorpus, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match name {
        "baseline_single" => run_single_ae_baseline(corpus, cfg.feature_mode, cfg),
        "ad_generalization" => run_ad_generalization_comparison(corpus, cfg),
        "novelty_loo" => run_novelty_loo_all(corpus, cfg),
        "end_to_end" => run_end_to_end_all(corpus, cfg),
        "overall_comparison" => run_overall_comparison(corpus, cfg),
        other => Err(ExperimentError::Setup(format!(
            "unknown experiment {other:?}; expected one of {}",
            EXPERIMENTS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_corpus, CorpusSpec};

    fn small() -> (PreparedCorpus, ExperimentConfig) {
        let mut spec = CorpusSpec::demo(3_000, 3);
        spec.attacks.retain(|a| ["scanning", "botnet", "exfiltration"].contains(&a.class.as_str()));
        for a in &mut spec.attacks {
            a.fraction = 0.03;
        }
        let corpus = generate_corpus(&spec).unwrap();
        let cfg = ExperimentConfig {
            seed: 5,
            holdout_prevalence: 0.05,
            ad_train: TrainConfig {
                max_epochs: 5,
                ..TrainConfig::default()
            },
            nd_train: TrainConfig {
                max_epochs: 5,
                batch_size: 32,
                ..TrainConfig::default()
            },
            ..ExperimentConfig::default()
        };
        (prepare_corpus(&corpus.networks, &cfg).unwrap(), cfg)
    }

    #[test]
    fn splits_partition_and_exclude_holdout() {
        let (corpus, cfg) = small();
        for n in &corpus.networks {
            let mut all: Vec<usize> = n.benign_train.iter().chain(&n.benign_test).copied().collect();
            for v in n.attack_train.values().chain(n.attack_test.values()) {
                all.extend(v);
            }
            all.sort_unstable();
            assert_eq!(all, (0..n.labels.len()).collect::<Vec<_>>());
        }
        let pool = eval_pool(&corpus, "botnet", true, &cfg).unwrap();
        let mut both: Vec<FlowRef> = pool.calibration.iter().chain(&pool.evaluation).copied().collect();
        both.sort_unstable();
        both.dedup();
        assert_eq!(both.len(), pool.calibration.len() + pool.evaluation.len());
        let nd = train_novelty_model(&corpus, "botnet", FeatureMode::FlowOnly, &cfg).unwrap();
        assert_eq!(nd.meta.known_classes, vec!["exfiltration", "scanning"]);
    }

    #[test]
    fn end_to_end_confusion_is_consistent() {
        let (corpus, cfg) = small();
        let ad = train_anomaly_model(&corpus, FeatureMode::FlowAndGraph, &cfg).unwrap();
        let row = run_end_to_end(&corpus, &ad, "scanning", FeatureMode::FlowAndGraph, &cfg).unwrap();
        let d = &row.details;
        let (tp, fp, fn_) = (d["tp"], d["fp"], d["fn"]);
        assert_eq!(row.precision, if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 });
        assert_eq!(row.recall, tp / (tp + fn_));
        assert!(d["holdout_rejected_by_ad"] <= fn_);
        assert!((0.0..=1.0).contains(&row.auc));
    }

    #[test]
    fn unknown_experiment_and_holdout() {
        let (corpus, cfg) = small();
        assert!(run_experiment("nope", &corpus, &cfg).is_err());
        let cfg = ExperimentConfig {
            holdout_classes: vec!["worm".into()],
            ..cfg
        };
        assert!(matches!(holdout_list(&corpus, &cfg), Err(ExperimentError::Setup(_))));
    }
}
