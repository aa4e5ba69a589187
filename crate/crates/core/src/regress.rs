//! Global quality regression on pooled features.
//!
//! Both regressors z-score their inputs with statistics frozen at training
//! time. Ridge leaves the bias unregularized. The MLP is a stack of affine
//! layers with ReLU between them and a linear scalar output, trained by
//! full-batch gradient descent on mean squared error.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{fragment_patch_features, PoolingMode, PooledFeatures, PATCH_DIM, POOLED_DIM};
use crate::rng::SeededRng;
use crate::spatial::SqueezedVideo;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Relative eigenvalue floor below which the ridge system counts as singular.
const SINGULAR_TOL: f64 = 1e-12;

/// Per-dimension z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population std; constant dimensions store 1.0.
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let n = x.len() as f64;
        let dim = x[0].len();
        let mut mean = vec![0.0; dim];
        let mut std = vec![0.0; dim];
        for j in 0..dim {
            let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let v = x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            mean[j] = m;
            std[j] = if v.sqrt() > 0.0 { v.sqrt() } else { 1.0 };
        }
        Self { mean, std }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

/// One affine layer, `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Hidden layer widths; empty means a single linear layer.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32],
            learning_rate: 1e-3,
            epochs: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Gradient of the loss with respect to each layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    /// Xavier-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(input: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                DenseLayer {
                    weights: (0..fan_out)
                        .map(|_| (0..fan_in).map(|_| rng.uniform(-limit, limit)).collect())
                        .collect(),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Self { layers }
    }

    pub fn validate(&self) -> Result<()> {
        let last = self
            .layers
            .last()
            .ok_or_else(|| Error::InvalidConfig("MLP has no layers".into()))?;
        if last.outputs() != 1 {
            return Err(Error::InvalidConfig("MLP output dimension must be 1".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.iter().any(|r| r.len() != l.inputs()) || l.weights.len() != l.outputs() {
                return Err(Error::InvalidConfig(format!("layer {i} has ragged weights")));
            }
        }
        for (i, w) in self.layers.windows(2).enumerate() {
            if w[0].outputs() != w[1].inputs() {
                return Err(Error::InvalidConfig(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    w[0].outputs(),
                    i + 1,
                    w[1].inputs()
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    /// Pre-activations of every layer for one input.
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut trace = Vec::with_capacity(self.layers.len());
        let mut act = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&act);
            act = if i + 1 < self.layers.len() {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            trace.push(z);
        }
        trace
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        self.forward_trace(x).last().unwrap()[0]
    }

    /// Mean squared error over a batch.
    pub fn loss(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(xi, yi)| (self.forward(xi) - yi).powi(2))
            .sum::<f64>()
            / x.len() as f64
    }

    /// Backpropagated gradient of [`Mlp::loss`].
    pub fn gradient(&self, x: &[Vec<f64>], y: &[f64]) -> MlpGradient {
        let mut grads: Vec<DenseLayer> = self
            .layers
            .iter()
            .map(|l| DenseLayer {
                weights: vec![vec![0.0; l.inputs()]; l.outputs()],
                bias: vec![0.0; l.outputs()],
            })
            .collect();
        let scale = 2.0 / x.len() as f64;
        let depth = self.layers.len();
        for (xi, yi) in x.iter().zip(y) {
            let trace = self.forward_trace(xi);
            let mut delta = vec![scale * (trace[depth - 1][0] - yi)];
            for l in (0..depth).rev() {
                let input: Vec<f64> = if l == 0 {
                    xi.clone()
                } else {
                    trace[l - 1].iter().map(|v| v.max(0.0)).collect()
                };
                for (o, d) in delta.iter().enumerate() {
                    grads[l].bias[o] += d;
                    for (g, v) in grads[l].weights[o].iter_mut().zip(&input) {
                        *g += d * v;
                    }
                }
                if l > 0 {
                    let layer = &self.layers[l];
                    delta = (0..layer.inputs())
                        .map(|i| {
                            if trace[l - 1][i] > 0.0 {
                                delta.iter().enumerate().map(|(o, d)| d * layer.weights[o][i]).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        MlpGradient { layers: grads }
    }

    /// All parameters flattened layer by layer, weights row-major then bias.
    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for row in &mut l.weights {
                for w in row.iter_mut() {
                    *w = it.next().expect("parameter vector too short");
                }
            }
            for b in &mut l.bias {
                *b = it.next().expect("parameter vector too short");
            }
        }
    }

    fn step(&mut self, grad: &MlpGradient, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (row, grow) in l.weights.iter_mut().zip(&g.weights) {
                for (w, gw) in row.iter_mut().zip(grow) {
                    *w -= lr * gw;
                }
            }
            for (b, gb) in l.bias.iter_mut().zip(&g.bias) {
                *b -= lr * gb;
            }
        }
    }
}

impl MlpGradient {
    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }
}

fn flatten(layers: &[DenseLayer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().flatten().chain(&l.bias).copied())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegressorModel {
    Ridge(RidgeModel),
    Mlp {
        network: Mlp,
        config: MlpConfig,
        final_loss: f64,
    },
}

/// A trained quality regressor with its frozen input standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressor {
    pub pooling: PoolingMode,
    pub input_dim: usize,
    pub standardizer: Standardizer,
    pub model: RegressorModel,
}

#[derive(Serialize, Deserialize)]
struct RegressorFile {
    version: u32,
    #[serde(flatten)]
    regressor: Regressor,
}

impl Regressor {
    pub fn ridge(standardizer: Standardizer, weights: Vec<f64>, bias: f64) -> Self {
        Self {
            pooling: PoolingMode::Pooled,
            input_dim: standardizer.dim(),
            standardizer,
            model: RegressorModel::Ridge(RidgeModel { weights, bias, lambda: 0.0 }),
        }
    }

    pub fn with_pooling(mut self, pooling: PoolingMode) -> Self {
        self.pooling = pooling;
        self
    }

    pub fn ridge_model(&self) -> Option<&RidgeModel> {
        match &self.model {
            RegressorModel::Ridge(r) => Some(r),
            RegressorModel::Mlp { .. } => None,
        }
    }

    /// Predict from a raw (unstandardized) feature vector.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::FeatureDimMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let z = self.standardizer.transform(x);
        Ok(match &self.model {
            RegressorModel::Ridge(r) => dot(&r.weights, &z) + r.bias,
            RegressorModel::Mlp { network, .. } => network.forward(&z),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&RegressorFile {
            version: MODEL_FORMAT_VERSION,
            regressor: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: RegressorFile = serde_json::from_str(s)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedFormat(format!("model version {}", file.version)));
        }
        let reg = file.regressor;
        if reg.standardizer.dim() != reg.input_dim || reg.standardizer.std.len() != reg.input_dim {
            return Err(Error::InvalidConfig("standardizer dimension mismatch".into()));
        }
        match &reg.model {
            RegressorModel::Ridge(r) if r.weights.len() != reg.input_dim => {
                return Err(Error::InvalidConfig("ridge weight dimension mismatch".into()))
            }
            RegressorModel::Mlp { network, .. } => {
                network.validate()?;
                if network.input_dim() != reg.input_dim {
                    return Err(Error::InvalidConfig("MLP input dimension mismatch".into()));
                }
            }
            _ => {}
        }
        Ok(reg)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_training_set(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!("{} rows vs {} targets", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput("need at least two training samples".into()));
    }
    let dim = x[0].len();
    if dim == 0 || x.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidConfig("feature rows must share a non-zero dimension".into()));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite training value".into()));
    }
    Ok(dim)
}

/// Ridge regression on z-scored features with an unregularized bias.
pub fn train_ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Regressor> {
    let dim = check_training_set(x, y)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    let n = x.len();
    let standardizer = Standardizer::fit(x);
    let z: Vec<Vec<f64>> = x.iter().map(|r| standardizer.transform(r)).collect();
    let z_mean: Vec<f64> = (0..dim).map(|j| z.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;

    let zc = DMatrix::from_fn(n, dim, |i, j| z[i][j] - z_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let mut gram = zc.transpose() * &zc;
    for j in 0..dim {
        gram[(j, j)] += lambda;
    }
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if !(min > SINGULAR_TOL * max.max(1.0)) {
        return Err(Error::DegenerateDesign);
    }
    let rhs = zc.transpose() * yc;
    let w = gram.cholesky().ok_or(Error::DegenerateDesign)?.solve(&rhs);
    let weights: Vec<f64> = w.iter().copied().collect();
    let bias = y_mean - dot(&weights, &z_mean);
    Ok(Regressor {
        pooling: PoolingMode::Pooled,
        input_dim: dim,
        standardizer,
        model: RegressorModel::Ridge(RidgeModel { weights, bias, lambda }),
    })
}

/// Full-batch gradient descent on an MLP over z-scored features.
///
/// The output bias starts at the target mean; all other biases at zero.
pub fn train_mlp(x: &[Vec<f64>], y: &[f64], cfg: &MlpConfig) -> Result<Regressor> {
    let dim = check_training_set(x, y)?;
    if cfg.hidden.contains(&0) {
        return Err(Error::InvalidConfig("hidden layer widths must be >= 1".into()));
    }
    if !(cfg.learning_rate > 0.0) || cfg.epochs == 0 {
        return Err(Error::InvalidConfig("learning rate and epochs must be positive".into()));
    }
    let standardizer = Standardizer::fit(x);
    let z: Vec<Vec<f64>> = x.iter().map(|r| standardizer.transform(r)).collect();
    let mut net = Mlp::init(dim, &cfg.hidden, cfg.seed);
    net.layers.last_mut().unwrap().bias[0] = y.iter().sum::<f64>() / y.len() as f64;

    for epoch in 0..cfg.epochs {
        let grad = net.gradient(&z, y);
        net.step(&grad, cfg.learning_rate);
        if net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
    }
    let final_loss = net.loss(&z, y);
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: cfg.epochs });
    }
    Ok(Regressor {
        pooling: PoolingMode::Pooled,
        input_dim: dim,
        standardizer,
        model: RegressorModel::Mlp {
            network: net,
            config: cfg.clone(),
            final_loss,
        },
    })
}

pub fn predict(reg: &Regressor, f: &PooledFeatures) -> Result<f64> {
    if f.mode != reg.pooling {
        return Err(Error::InvalidConfig(format!(
            "features pooled as {:?}, regressor expects {:?}",
            f.mode, reg.pooling
        )));
    }
    reg.predict_raw(&f.values)
}

/// Per-patch scores, indexed `[keyframe][cell_row][cell_col]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityMap {
    pub keyframes: usize,
    pub grid: usize,
    pub scores: Vec<f64>,
}

impl QualityMap {
    pub fn get(&self, k: usize, row: usize, col: usize) -> f64 {
        self.scores[(k * self.grid + row) * self.grid + col]
    }

    /// The `grid x grid` slice of one keyframe, row-major.
    pub fn frame(&self, k: usize) -> &[f64] {
        let cells = self.grid * self.grid;
        &self.scores[k * cells..(k + 1) * cells]
    }
}

/// Apply a pooled ridge model's mean-of-means weights at patch granularity.
///
/// The first `PATCH_DIM` pooled features are the keyframe means of the patch
/// means, so their weights and z-score statistics act on a single patch's
/// features directly.
pub fn local_quality_map(sq: &SqueezedVideo, reg: &Regressor) -> Result<QualityMap> {
    let ridge = match (&reg.model, reg.pooling, reg.input_dim) {
        (RegressorModel::Ridge(r), PoolingMode::Pooled, POOLED_DIM) => r,
        _ => return Err(Error::UnsupportedRegressor),
    };
    let w = &ridge.weights[..PATCH_DIM];
    let mean = &reg.standardizer.mean[..PATCH_DIM];
    let std = &reg.standardizer.std[..PATCH_DIM];
    let mut scores = Vec::with_capacity(sq.len() * sq.scheme.cells());
    for frag in &sq.fragments {
        for p in fragment_patch_features(&frag.frame, &sq.scheme)? {
            let f = p.to_array();
            let s: f64 = (0..PATCH_DIM).map(|j| w[j] * (f[j] - mean[j]) / std[j]).sum();
            scores.push(s + ridge.bias);
        }
    }
    Ok(QualityMap {
        keyframes: sq.len(),
        grid: sq.scheme.grid,
        scores,
    })
}
