//! Dense symmetric autoencoders: min-max normalization, the width rule,
//! training by backpropagation with Adam, reconstruction scoring and a
//! checksummed model file.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{FeatureMatrix, FeatureSchema};

/// Version written into model files. Files with a newer version are refused.
pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_MAGIC: &str = "ZDT-AE-MODEL";

/// Latent width of every autoencoder.
pub const LATENT_WIDTH: usize = 6;
/// Ratio between successive layer widths.
pub const WIDTH_FACTOR: f64 = 1.4;
/// Encoder layers stop before a width at or below this value.
pub const MIN_HIDDEN_WIDTH: usize = 8;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("matrix has no rows")]
    EmptyMatrix,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("insufficient data: {rows} rows, need at least {needed}")]
    InsufficientData { rows: usize, needed: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model format version {found} is newer than supported version {supported}")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("model checksum mismatch (file truncated or modified)")]
    ChecksumMismatch,
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-feature minimum and maximum taken from training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    pub fn fit(m: &FeatureMatrix) -> Result<Self, NeuralError> {
        if m.rows() == 0 {
            return Err(NeuralError::EmptyMatrix);
        }
        let d = m.cols();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in m.iter_rows() {
            for j in 0..d {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// `(x - min) / (max - min)` clipped to `[0, 1]`; constant features map to 0.
    pub fn normalize_row(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            let span = self.max[j] - self.min[j];
            out[j] = if span > 0.0 {
                ((row[j] - self.min[j]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }

    pub fn normalize(&self, m: &FeatureMatrix) -> Result<FeatureMatrix, NeuralError> {
        if m.cols() != self.dim() {
            return Err(NeuralError::DimensionMismatch {
                expected: self.dim(),
                found: m.cols(),
            });
        }
        let mut out = m.clone();
        for i in 0..m.rows() {
            self.normalize_row(m.row(i), out.row_mut(i));
        }
        Ok(out)
    }
}

/// Layer widths from input to reconstruction, e.g. `[27, 19, 14, 10, 6, 10, 14, 19, 27]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AEArchitecture {
    pub widths: Vec<usize>,
}

impl AEArchitecture {
    /// Widths of the encoder, starting with the input width and ending
    /// before the latent layer.
    pub fn encoder(&self) -> &[usize] {
        &self.widths[..self.widths.len() / 2]
    }

    /// Widths after the latent layer, ending with the output width.
    pub fn decoder(&self) -> &[usize] {
        &self.widths[self.widths.len() / 2 + 1..]
    }

    pub fn latent(&self) -> usize {
        self.widths[self.widths.len() / 2]
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn layer_count(&self) -> usize {
        self.widths.len() - 1
    }
}

/// Encoder widths shrink by a factor of 1.4 (rounded) from `input_dim`,
/// stopping before any width `<= 8`; then the latent layer of 6; the
/// decoder mirrors the encoder.
pub fn build_architecture(input_dim: usize) -> AEArchitecture {
    assert!(input_dim >= 1, "input_dim must be positive");
    let mut encoder = vec![input_dim];
    let mut w = input_dim;
    loop {
        let next = (w as f64 / WIDTH_FACTOR).round() as usize;
        if next <= MIN_HIDDEN_WIDTH {
            break;
        }
        encoder.push(next);
        w = next;
    }
    let mut widths = encoder.clone();
    widths.push(LATENT_WIDTH);
    widths.extend(encoder.iter().rev());
    AEArchitecture { widths }
}

/// A fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, slot) in out.iter_mut().enumerate() {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            *slot = self.bias[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// Gradient of the loss with respect to every layer parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// ReLU hidden layers and a linear output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder {
    pub architecture: AEArchitecture,
    pub layers: Vec<Dense>,
}

impl Autoencoder {
    pub fn zeros(architecture: AEArchitecture) -> Self {
        let layers = architecture
            .widths
            .windows(2)
            .map(|w| Dense::zeros(w[0], w[1]))
            .collect();
        Self {
            architecture,
            layers,
        }
    }

    /// He-uniform weights `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero biases.
    pub fn initialize(architecture: AEArchitecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ae = Self::zeros(architecture);
        for layer in &mut ae.layers {
            let limit = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        ae
    }

    pub fn input_dim(&self) -> usize {
        self.architecture.input_dim()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Forward pass that keeps every layer's activations (input first).
    fn forward_trace(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.resize(self.layers.len() + 1, Vec::new());
        acts[0].clear();
        acts[0].extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = acts.split_at_mut(l + 1);
            let out = &mut tail[0];
            out.resize(layer.outputs, 0.0);
            layer.apply(&head[l], out);
            if l != last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
    }

    pub fn forward_row(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.check_dim(x.len())?;
        let mut acts = Vec::new();
        self.forward_trace(x, &mut acts);
        Ok(acts.pop().unwrap())
    }

    pub fn forward(&self, m: &FeatureMatrix) -> Result<FeatureMatrix, NeuralError> {
        self.check_dim(m.cols())?;
        let mut acts = Vec::new();
        let mut data = Vec::with_capacity(m.rows() * m.cols());
        for row in m.iter_rows() {
            self.forward_trace(row, &mut acts);
            data.extend_from_slice(acts.last().unwrap());
        }
        Ok(FeatureMatrix::new(m.schema.clone(), data))
    }

    /// Per-row reconstruction MSE of already normalized rows.
    pub fn score(&self, m: &FeatureMatrix) -> Result<Vec<f64>, NeuralError> {
        self.check_dim(m.cols())?;
        let mut acts = Vec::new();
        Ok(m.iter_rows()
            .map(|row| {
                self.forward_trace(row, &mut acts);
                row_mse(row, acts.last().unwrap())
            })
            .collect())
    }

    fn check_dim(&self, found: usize) -> Result<(), NeuralError> {
        if found != self.input_dim() {
            return Err(NeuralError::DimensionMismatch {
                expected: self.input_dim(),
                found,
            });
        }
        Ok(())
    }

    /// Mean reconstruction MSE over the given rows and its gradient.
    pub fn loss_and_gradients(&self, rows: &[&[f64]]) -> (f64, Gradients) {
        let mut grads = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        };
        let mut acts = Vec::new();
        let mut delta = Vec::new();
        let mut prev_delta = Vec::new();
        let batch = rows.len() as f64;
        let mut loss = 0.0;
        for x in rows {
            self.forward_trace(x, &mut acts);
            let out = acts.last().unwrap();
            let d = x.len() as f64;
            loss += row_mse(x, out);
            delta.clear();
            delta.extend(out.iter().zip(x.iter()).map(|(o, t)| 2.0 * (o - t) / (d * batch)));
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let g = &mut grads.layers[l];
                let input = &acts[l];
                for o in 0..layer.outputs {
                    let dz = delta[o];
                    g.bias[o] += dz;
                    let gw = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gi, a) in gw.iter_mut().zip(input) {
                        *gi += dz * a;
                    }
                }
                if l == 0 {
                    break;
                }
                prev_delta.clear();
                prev_delta.resize(layer.inputs, 0.0);
                for o in 0..layer.outputs {
                    let dz = delta[o];
                    let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, wi) in prev_delta.iter_mut().zip(w) {
                        *p += dz * wi;
                    }
                }
                // hidden activations are ReLU outputs; derivative is 1 where positive
                for (p, a) in prev_delta.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut prev_delta);
            }
        }
        (loss / batch, grads)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }
}

fn row_mse(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
}

/// Mean squared error per row.
pub fn reconstruction_loss(x: &FeatureMatrix, x_hat: &FeatureMatrix) -> Result<Vec<f64>, NeuralError> {
    if x.cols() != x_hat.cols() || x.rows() != x_hat.rows() {
        return Err(NeuralError::DimensionMismatch {
            expected: x.rows() * x.cols(),
            found: x_hat.rows() * x_hat.cols(),
        });
    }
    Ok(x.iter_rows()
        .zip(x_hat.iter_rows())
        .map(|(a, b)| row_mse(a, b))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 50,
            patience: 5,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if self.patience == 0 {
            return bad("patience must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights from the epoch with the lowest validation loss.
    pub autoencoder: Autoencoder,
    pub history: Vec<EpochLoss>,
    pub best_epoch: usize,
}

impl TrainOutcome {
    pub fn best_val_loss(&self) -> f64 {
        self.history[self.best_epoch - 1].val_loss
    }

    pub fn final_train_loss(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |e| e.train_loss)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, model: &mut Autoencoder, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t);
        let bc2 = 1.0 - Self::BETA2.powi(self.t);
        let flat = grads
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()));
        for (((p, g), m), v) in model
            .params_mut()
            .zip(flat)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

/// Trains an autoencoder on normalized rows by mini-batch Adam on the
/// reconstruction MSE, with early stopping on a held-out validation slice.
pub fn train(
    arch: &AEArchitecture,
    data: &FeatureMatrix,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, NeuralError> {
    cfg.validate()?;
    if data.cols() != arch.input_dim() {
        return Err(NeuralError::DimensionMismatch {
            expected: arch.input_dim(),
            found: data.cols(),
        });
    }
    let needed = cfg.batch_size.max(2);
    if data.rows() < needed {
        return Err(NeuralError::InsufficientData {
            rows: data.rows(),
            needed,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.rows()).collect();
    order.shuffle(&mut rng);
    let n_val = ((data.rows() as f64 * cfg.validation_fraction).round() as usize)
        .clamp(1, data.rows() - 1);
    let val_idx = order.split_off(data.rows() - n_val);
    let mut train_idx = order;
    let val: Vec<&[f64]> = val_idx.iter().map(|&i| data.row(i)).collect();

    let mut model = Autoencoder::initialize(arch.clone(), cfg.seed);
    let mut adam = Adam::new(model.parameter_count(), cfg.learning_rate);
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, 0usize, model.clone());
    let mut batch: Vec<&[f64]> = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut sum = 0.0;
        for chunk in train_idx.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data.row(i)));
            let (loss, grads) = model.loss_and_gradients(&batch);
            if !loss.is_finite() {
                return Err(NeuralError::NonFiniteLoss { epoch });
            }
            sum += loss * chunk.len() as f64;
            adam.step(&mut model, &grads);
        }
        let train_loss = sum / train_idx.len() as f64;
        let val_loss = mean_loss(&model, &val);
        if !val_loss.is_finite() {
            return Err(NeuralError::NonFiniteLoss { epoch });
        }
        history.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best.0 {
            best = (val_loss, epoch, model.clone());
        } else if epoch - best.1 >= cfg.patience {
            break;
        }
    }
    Ok(TrainOutcome {
        autoencoder: best.2,
        history,
        best_epoch: best.1,
    })
}

fn mean_loss(model: &Autoencoder, rows: &[&[f64]]) -> f64 {
    let mut acts = Vec::new();
    rows.iter()
        .map(|r| {
            model.forward_trace(r, &mut acts);
            row_mse(r, acts.last().unwrap())
        })
        .sum::<f64>()
        / rows.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRole {
    /// Trained on benign traffic only.
    Anomaly,
    /// Trained on known attack classes only.
    Novelty,
    /// Trained on anything else (e.g. the single-autoencoder baseline).
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub role: ModelRole,
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_train_loss: f64,
    pub best_val_loss: f64,
    /// Loss threshold, once calibrated.
    pub threshold: Option<f64>,
    /// Attack classes seen in training (novelty models).
    pub known_classes: Vec<String>,
    pub created_by: String,
}

/// A trained autoencoder bound to the normalization of its training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AEModel {
    pub autoencoder: Autoencoder,
    pub normalization: NormalizationParams,
    pub feature_names: Vec<String>,
    pub meta: ModelMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelPayload {
    format_version: u32,
    #[serde(flatten)]
    model: AEModel,
}

impl AEModel {
    /// Fits normalization on `raw`, trains, and packages the result.
    pub fn fit(
        raw: &FeatureMatrix,
        role: ModelRole,
        known_classes: Vec<String>,
        cfg: &TrainConfig,
    ) -> Result<(Self, TrainOutcome), NeuralError> {
        let normalization = NormalizationParams::fit(raw)?;
        let data = normalization.normalize(raw)?;
        let arch = build_architecture(raw.cols());
        let outcome = train(&arch, &data, cfg)?;
        let model = AEModel {
            autoencoder: outcome.autoencoder.clone(),
            normalization,
            feature_names: raw.schema.names.clone(),
            meta: ModelMeta {
                role,
                seed: cfg.seed,
                epochs_run: outcome.history.len(),
                best_epoch: outcome.best_epoch,
                final_train_loss: outcome.final_train_loss(),
                best_val_loss: outcome.best_val_loss(),
                threshold: None,
                known_classes,
                created_by: format!("zdt {}", env!("CARGO_PKG_VERSION")),
            },
        };
        Ok((model, outcome))
    }

    pub fn schema(&self) -> FeatureSchema {
        FeatureSchema {
            names: self.feature_names.clone(),
        }
    }

    /// Normalizes raw rows with this model's parameters and scores them.
    pub fn score_raw(&self, raw: &FeatureMatrix) -> Result<Vec<f64>, NeuralError> {
        self.score_raw_with(raw, &self.normalization)
    }

    /// Scores raw rows normalized with explicitly supplied parameters.
    pub fn score_raw_with(
        &self,
        raw: &FeatureMatrix,
        params: &NormalizationParams,
    ) -> Result<Vec<f64>, NeuralError> {
        self.autoencoder.score(&params.normalize(raw)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = serde_json::to_vec(&ModelPayload {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("model serialization cannot fail");
        let digest = hex::encode(Sha256::digest(&payload));
        let mut out = format!("{MODEL_MAGIC} v{MODEL_FORMAT_VERSION} sha256:{digest}\n").into_bytes();
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NeuralError> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or(NeuralError::ChecksumMismatch)?;
        let header = std::str::from_utf8(&bytes[..nl])
            .map_err(|_| NeuralError::Corrupt("header is not UTF-8".into()))?;
        let mut parts = header.split(' ');
        if parts.next() != Some(MODEL_MAGIC) {
            return Err(NeuralError::Corrupt("missing model header".into()));
        }
        let version: u32 = parts
            .next()
            .and_then(|v| v.strip_prefix('v'))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| NeuralError::Corrupt("bad version tag".into()))?;
        if version > MODEL_FORMAT_VERSION {
            return Err(NeuralError::VersionMismatch {
                found: version,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        let expected = parts
            .next()
            .and_then(|c| c.strip_prefix("sha256:"))
            .ok_or_else(|| NeuralError::Corrupt("missing checksum".into()))?;
        let payload = &bytes[nl + 1..];
        if hex::encode(Sha256::digest(payload)) != expected {
            return Err(NeuralError::ChecksumMismatch);
        }
        let parsed: ModelPayload =
            serde_json::from_slice(payload).map_err(|e| NeuralError::Corrupt(e.to_string()))?;
        if parsed.format_version != version {
            return Err(NeuralError::Corrupt("header and payload versions differ".into()));
        }
        let model = parsed.model;
        let widths = &model.autoencoder.architecture.widths;
        let consistent = model.autoencoder.layers.len() + 1 == widths.len()
            && model.autoencoder.layers.iter().zip(widths.windows(2)).all(|(l, w)| {
                l.inputs == w[0]
                    && l.outputs == w[1]
                    && l.weights.len() == w[0] * w[1]
                    && l.bias.len() == w[1]
            })
            && model.normalization.dim() == widths[0]
            && model.feature_names.len() == widths[0];
        if !consistent {
            return Err(NeuralError::Corrupt("tensor shapes do not match architecture".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), NeuralError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NeuralError> {
        Self::from_bytes(&fs::read(path)?)
    }
}
