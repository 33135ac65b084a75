//! Trainable complex-mask estimator.
//!
//! A small fully connected network maps log-amplitude features (with a
//! symmetric context window of frames) to a bounded complex mask per
//! time-frequency bin: `mask = b*tanh(u) + i*b*tanh(v)`. Gradients flow
//! from a time-domain squared-error loss through synthesis via
//! [`crate::stft::istft_adjoint`], through the mask product, and through
//! the network by standard reverse accumulation; every step is exact,
//! which is checked against central differences in the tests.

use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, Axis};
use num_complex::Complex64;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{SignalError, Waveform};
use crate::stft::{
    apply_mask, bin_multiplicity, istft, istft_adjoint, log_magnitude, stft, Mask, Spectrogram,
    StftError, StftParams, DEFAULT_LOG_EPS,
};

/// Output-layer weights are drawn like every other layer, then shrunk by
/// this factor so the initial mask sits near identity (bias-dominated).
const OUTPUT_INIT_SCALE: f64 = 0.02;

/// Floor for the feature standard deviation during input normalization.
const STD_FLOOR: f64 = 1e-6;

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Error, Debug)]
pub enum ModelError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("feature rows {got} do not match configured input bins {expected}")]
    WrongBins { expected: usize, got: usize },
    #[error("input and target lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("gradient shapes do not match network shapes")]
    GradientShapeMismatch,
    #[error("non-finite {0} encountered")]
    NonFinite(&'static str),
    #[error("checkpoint invalid: {0}")]
    CorruptCheckpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint serialization: {0}")]
    Serde(#[from] serde_json::Error),
    #[error(transparent)]
    Stft(#[from] StftError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(&self, pre: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => pre.mapv(|z| z.max(0.0)),
            Activation::Tanh => pre.mapv(f64::tanh),
        }
    }

    /// Derivative evaluated from whichever of pre/post is cheaper.
    fn deriv(&self, pre: &Array2<f64>, post: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => pre.mapv(|z| if z > 0.0 { 1.0 } else { 0.0 }),
            Activation::Tanh => post.mapv(|h| 1.0 - h * h),
        }
    }
}

/// Network shape and input handling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskNetConfig {
    /// Frequency bins per frame (must equal the STFT's one-sided count).
    pub input_bins: usize,
    /// Symmetric context width in frames; odd.
    pub context_frames: usize,
    pub hidden_sizes: Vec<usize>,
    /// Bound `b` on each mask component's magnitude.
    pub mask_bound: f64,
    pub activation: Activation,
    /// Standardize features to zero mean, unit variance per utterance.
    pub normalize_input: bool,
}

impl Default for MaskNetConfig {
    fn default() -> Self {
        Self {
            input_bins: StftParams::default().freq_bins(),
            context_frames: 5,
            hidden_sizes: vec![48, 48],
            mask_bound: 2.0,
            activation: Activation::Relu,
            normalize_input: true,
        }
    }
}

impl MaskNetConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_bins == 0 {
            return Err(ModelError::BadConfig("input_bins must be >= 1".into()));
        }
        if self.context_frames == 0 || self.context_frames % 2 == 0 {
            return Err(ModelError::BadConfig(format!(
                "context_frames must be odd and >= 1, got {}",
                self.context_frames
            )));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(ModelError::BadConfig("hidden layer width 0".into()));
        }
        if !(self.mask_bound > 0.0 && self.mask_bound.is_finite()) {
            return Err(ModelError::BadConfig(format!(
                "mask_bound must be positive and finite, got {}",
                self.mask_bound
            )));
        }
        Ok(())
    }

    /// Layer dimensions from input to output: `C*F, hidden..., 2F`.
    fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.context_frames * self.input_bins];
        dims.extend(&self.hidden_sizes);
        dims.push(2 * self.input_bins);
        dims
    }
}

/// Dense layer, `weights` is out x in.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// The mask estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskNet {
    config: MaskNetConfig,
    layers: Vec<Layer>,
}

/// Per-layer gradients, same shapes as the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub d_weights: Array2<f64>,
    pub d_bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

struct ForwardTrace {
    ctx: Array2<f64>,
    /// Pre-activations per layer; the last entry is the raw 2F-row head.
    pre: Vec<Array2<f64>>,
    /// Hidden activations (one per hidden layer).
    post: Vec<Array2<f64>>,
    /// tanh of the head's real and imaginary rows.
    tu: Array2<f64>,
    tv: Array2<f64>,
    mask: Mask,
}

fn add_bias(z: &mut Array2<f64>, bias: &Array1<f64>) {
    for mut col in z.axis_iter_mut(Axis(1)) {
        col += bias;
    }
}

impl MaskNet {
    /// Seeded initialization: uniform Xavier weights per layer, zero
    /// biases, except the output layer, whose weights are shrunk by
    /// `OUTPUT_INIT_SCALE` and whose real-part bias is set so the
    /// initial mask is close to `1 + 0i` (pass-through).
    pub fn init(config: MaskNetConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let dims = config.layer_dims();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_layers = dims.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for i in 0..n_layers {
            let (fan_in, fan_out) = (dims[i], dims[i + 1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let is_output = i + 1 == n_layers;
            let scale = if is_output { OUTPUT_INIT_SCALE } else { 1.0 };
            let weights =
                Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-a..a) * scale);
            let mut bias = Array1::zeros(fan_out);
            if is_output {
                // tanh(bias) * b == min(1, 0.99 b): identity when reachable
                let arg = (1.0 / config.mask_bound).min(0.99);
                let f = config.input_bins;
                for j in 0..f {
                    bias[j] = arg.atanh();
                }
            }
            layers.push(Layer { weights, bias });
        }
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &MaskNetConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Standardized features and stacked context window, ready for the
    /// first layer.
    fn prepare_input(&self, feats: &Array2<f64>) -> Result<Array2<f64>, ModelError> {
        let f = self.config.input_bins;
        if feats.nrows() != f {
            return Err(ModelError::WrongBins {
                expected: f,
                got: feats.nrows(),
            });
        }
        let k = feats.ncols();

        let normed;
        let feats = if self.config.normalize_input {
            let n = (f * k) as f64;
            let mean = feats.sum() / n;
            let var = feats.mapv(|x| (x - mean) * (x - mean)).sum() / n;
            let std = var.sqrt().max(STD_FLOOR);
            normed = feats.mapv(|x| (x - mean) / std);
            &normed
        } else {
            feats
        };

        let c = self.config.context_frames;
        let half = (c as isize - 1) / 2;
        let mut ctx = Array2::zeros((c * f, k));
        for (ci, offset) in (-half..=half).enumerate() {
            for kk in 0..k {
                let src = (kk as isize + offset).clamp(0, k as isize - 1) as usize;
                for ff in 0..f {
                    ctx[(ci * f + ff, kk)] = feats[(ff, src)];
                }
            }
        }
        Ok(ctx)
    }

    fn forward_trace(&self, feats: &Array2<f64>) -> Result<ForwardTrace, ModelError> {
        let ctx = self.prepare_input(feats)?;
        let n_layers = self.layers.len();
        let mut pre = Vec::with_capacity(n_layers);
        let mut post = Vec::with_capacity(n_layers - 1);

        let mut h = ctx.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weights.dot(&h);
            add_bias(&mut z, &layer.bias);
            if i + 1 < n_layers {
                h = self.config.activation.apply(&z);
                post.push(h.clone());
            }
            pre.push(z);
        }

        let f = self.config.input_bins;
        let head = pre.last().expect("at least one layer");
        let tu = head.slice(s![0..f, ..]).mapv(f64::tanh);
        let tv = head.slice(s![f..2 * f, ..]).mapv(f64::tanh);
        let b = self.config.mask_bound;
        let values = ndarray::Zip::from(&tu)
            .and(&tv)
            .map_collect(|&re, &im| Complex64::new(b * re, b * im));

        Ok(ForwardTrace {
            ctx,
            pre,
            post,
            tu,
            tv,
            mask: Mask { values },
        })
    }

    /// Mask for a feature matrix (`input_bins` x frames).
    pub fn forward(&self, feats: &Array2<f64>) -> Result<Mask, ModelError> {
        Ok(self.forward_trace(feats)?.mask)
    }

    /// Full enhancement: analyze, mask, resynthesize.
    pub fn enhance(&self, wave: &Waveform, params: &StftParams) -> Result<Waveform, ModelError> {
        let spec = stft(wave, params)?;
        self.enhance_spec(&spec).map(|(w, _)| w)
    }

    fn enhance_spec(&self, spec: &Spectrogram) -> Result<(Waveform, ForwardTrace), ModelError> {
        if spec.params.freq_bins() != self.config.input_bins {
            return Err(ModelError::WrongBins {
                expected: self.config.input_bins,
                got: spec.params.freq_bins(),
            });
        }
        let feats = log_magnitude(spec, DEFAULT_LOG_EPS)?;
        let trace = self.forward_trace(&feats)?;
        let masked = apply_mask(spec, &trace.mask)?;
        Ok((istft(&masked)?, trace))
    }

    /// Mean squared error of the enhanced input against the target.
    pub fn training_loss(
        &self,
        input: &Waveform,
        target: &Waveform,
        params: &StftParams,
    ) -> Result<f64, ModelError> {
        if input.len() != target.len() {
            return Err(ModelError::LengthMismatch(input.len(), target.len()));
        }
        let est = self.enhance(input, params)?;
        Ok(mse(est.samples(), target.samples()))
    }

    /// Loss and exact parameter gradients for one pair.
    pub fn backward(
        &self,
        input: &Waveform,
        target: &Waveform,
        params: &StftParams,
    ) -> Result<(f64, Gradients), ModelError> {
        if input.len() != target.len() {
            return Err(ModelError::LengthMismatch(input.len(), target.len()));
        }
        let spec = stft(input, params)?;
        let (est, trace) = self.enhance_spec(&spec)?;

        let t = input.len() as f64;
        let loss = mse(est.samples(), target.samples());
        if !loss.is_finite() {
            return Err(ModelError::NonFinite("loss"));
        }
        let residual: Vec<f64> = est
            .samples()
            .iter()
            .zip(target.samples())
            .map(|(a, b)| 2.0 / t * (a - b))
            .collect();

        // loss -> synthesized samples -> masked spectrogram
        let g_spec = istft_adjoint(&residual, params)?;

        // masked = mask * input spectrogram, so d/d(mask) brings conj(X);
        // middle bins carry their conjugate twins' contribution as weight 2
        let f_bins = self.config.input_bins;
        let k = g_spec.ncols();
        let mut g_mask = Array2::<Complex64>::zeros((f_bins, k));
        for f in 0..f_bins {
            let mult = bin_multiplicity(f, f_bins);
            for kk in 0..k {
                g_mask[(f, kk)] = spec.bins[(f, kk)].conj() * g_spec[(f, kk)] * mult;
            }
        }

        // bounded head: mask = b tanh(u) + i b tanh(v)
        let b = self.config.mask_bound;
        let gu = ndarray::Zip::from(&trace.tu)
            .and(&g_mask)
            .map_collect(|&tu, gm| b * (1.0 - tu * tu) * gm.re);
        let gv = ndarray::Zip::from(&trace.tv)
            .and(&g_mask)
            .map_collect(|&tv, gm| b * (1.0 - tv * tv) * gm.im);
        let mut gz = concatenate(Axis(0), &[gu.view(), gv.view()])
            .expect("u and v have identical shapes");

        let n_layers = self.layers.len();
        let mut grads = vec![
            LayerGrad {
                d_weights: Array2::zeros((0, 0)),
                d_bias: Array1::zeros(0),
            };
            n_layers
        ];
        for i in (0..n_layers).rev() {
            let input_act = if i == 0 { &trace.ctx } else { &trace.post[i - 1] };
            grads[i] = LayerGrad {
                d_weights: gz.dot(&input_act.t()),
                d_bias: gz.sum_axis(Axis(1)),
            };
            if i > 0 {
                let gh = self.layers[i].weights.t().dot(&gz);
                let d = self
                    .config
                    .activation
                    .deriv(&trace.pre[i - 1], &trace.post[i - 1]);
                gz = &gh * &d;
            }
        }

        let grads = Gradients { layers: grads };
        if !grads.is_finite() {
            return Err(ModelError::NonFinite("gradient"));
        }
        Ok((loss, grads))
    }

    /// Total scalar parameter count.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Flat parameter view: per layer, weights in row-major order, then
    /// bias. Panics on an out-of-range index.
    pub fn param(&self, idx: usize) -> f64 {
        let (layer, offset) = self.locate(idx);
        let l = &self.layers[layer];
        if offset < l.weights.len() {
            *l.weights.as_slice().expect("standard layout").get(offset).unwrap()
        } else {
            l.bias[offset - l.weights.len()]
        }
    }

    pub fn set_param(&mut self, idx: usize, value: f64) {
        let (layer, offset) = self.locate(idx);
        let l = &mut self.layers[layer];
        let w_len = l.weights.len();
        if offset < w_len {
            *l.weights
                .as_slice_mut()
                .expect("standard layout")
                .get_mut(offset)
                .unwrap() = value;
        } else {
            l.bias[offset - w_len] = value;
        }
    }

    fn locate(&self, idx: usize) -> (usize, usize) {
        let mut rest = idx;
        for (i, l) in self.layers.iter().enumerate() {
            let size = l.weights.len() + l.bias.len();
            if rest < size {
                return (i, rest);
            }
            rest -= size;
        }
        panic!("parameter index {idx} out of range {}", self.param_count());
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

impl Gradients {
    pub fn zeros_like(net: &MaskNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    d_weights: Array2::zeros(l.weights.dim()),
                    d_bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) -> Result<(), ModelError> {
        if !self.same_shape(other) {
            return Err(ModelError::GradientShapeMismatch);
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.d_weights += &b.d_weights;
            a.d_bias += &b.d_bias;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.d_weights *= s;
            l.d_bias *= s;
        }
    }

    fn same_shape(&self, other: &Gradients) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.d_weights.dim() == b.d_weights.dim() && a.d_bias.len() == b.d_bias.len()
            })
    }

    fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.d_weights.iter().all(|v| v.is_finite()) && l.d_bias.iter().all(|v| v.is_finite())
        })
    }

    /// Flat view matching [`MaskNet::param`] indexing.
    pub fn param(&self, idx: usize) -> f64 {
        let mut rest = idx;
        for l in &self.layers {
            let w_len = l.d_weights.len();
            let size = w_len + l.d_bias.len();
            if rest < size {
                return if rest < w_len {
                    l.d_weights.as_slice().expect("standard layout")[rest]
                } else {
                    l.d_bias[rest - w_len]
                };
            }
            rest -= size;
        }
        panic!("gradient index {idx} out of range");
    }
}

/// Adam optimizer state. Moments share the network's shapes.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<LayerGrad>,
    v: Vec<LayerGrad>,
}

impl AdamState {
    pub fn new(net: &MaskNet, lr: f64) -> Self {
        let zeros = || Gradients::zeros_like(net).layers;
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction:
/// `theta -= lr * m_hat / (sqrt(v_hat) + epsilon)`.
pub fn adam_step(
    net: &mut MaskNet,
    grads: &Gradients,
    state: &mut AdamState,
) -> Result<(), ModelError> {
    let shapes_ok = grads.layers.len() == net.layers.len()
        && grads.layers.iter().zip(&net.layers).all(|(g, l)| {
            g.d_weights.dim() == l.weights.dim() && g.d_bias.len() == l.bias.len()
        });
    if !shapes_ok {
        return Err(ModelError::GradientShapeMismatch);
    }

    state.step += 1;
    let t = state.step;
    let bc1 = 1.0 - state.beta1.powi(t as i32);
    let bc2 = 1.0 - state.beta2.powi(t as i32);

    for i in 0..net.layers.len() {
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = state.beta1 * *m + (1.0 - state.beta1) * g;
            *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
        };
        let layer = &mut net.layers[i];
        let g = &grads.layers[i];
        for (((p, &gv), m), v) in layer
            .weights
            .iter_mut()
            .zip(g.d_weights.iter())
            .zip(state.m[i].d_weights.iter_mut())
            .zip(state.v[i].d_weights.iter_mut())
        {
            update(p, gv, m, v);
        }
        for (((p, &gv), m), v) in layer
            .bias
            .iter_mut()
            .zip(g.d_bias.iter())
            .zip(state.m[i].d_bias.iter_mut())
            .zip(state.v[i].d_bias.iter_mut())
        {
            update(p, gv, m, v);
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ArrayDump {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct AdamDump {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    m: Vec<ArrayDump>,
    v: Vec<ArrayDump>,
}

/// On-disk snapshot of a network and (optionally) its optimizer.
#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    version: u32,
    config: MaskNetConfig,
    layers: Vec<ArrayDump>,
    adam: Option<AdamDump>,
}

fn dump_layer(weights: &Array2<f64>, bias: &Array1<f64>) -> ArrayDump {
    ArrayDump {
        rows: weights.nrows(),
        cols: weights.ncols(),
        weights: weights.iter().copied().collect(),
        bias: bias.to_vec(),
    }
}

fn restore_layer(dump: &ArrayDump) -> Result<(Array2<f64>, Array1<f64>), ModelError> {
    if dump.weights.len() != dump.rows * dump.cols {
        return Err(ModelError::CorruptCheckpoint(format!(
            "weight count {} does not match {}x{}",
            dump.weights.len(),
            dump.rows,
            dump.cols
        )));
    }
    if dump.bias.len() != dump.rows {
        return Err(ModelError::CorruptCheckpoint(format!(
            "bias count {} does not match {} rows",
            dump.bias.len(),
            dump.rows
        )));
    }
    let w = Array2::from_shape_vec((dump.rows, dump.cols), dump.weights.clone())
        .map_err(|e| ModelError::CorruptCheckpoint(e.to_string()))?;
    Ok((w, Array1::from_vec(dump.bias.clone())))
}

/// Serializes the network (and optimizer, if given) as JSON. Doubles
/// round-trip bit-exactly through this format.
pub fn save_checkpoint(
    path: impl AsRef<Path>,
    net: &MaskNet,
    adam: Option<&AdamState>,
) -> Result<(), ModelError> {
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION,
        config: net.config.clone(),
        layers: net
            .layers
            .iter()
            .map(|l| dump_layer(&l.weights, &l.bias))
            .collect(),
        adam: adam.map(|a| AdamDump {
            lr: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            epsilon: a.epsilon,
            step: a.step,
            m: a.m.iter().map(|g| dump_layer(&g.d_weights, &g.d_bias)).collect(),
            v: a.v.iter().map(|g| dump_layer(&g.d_weights, &g.d_bias)).collect(),
        }),
    };
    let json = serde_json::to_string(&ckpt)?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Loads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(
    path: impl AsRef<Path>,
) -> Result<(MaskNet, Option<AdamState>), ModelError> {
    let json = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&json)?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(ModelError::CorruptCheckpoint(format!(
            "version {} unsupported (expected {CHECKPOINT_VERSION})",
            ckpt.version
        )));
    }
    ckpt.config.validate()?;

    let dims = ckpt.config.layer_dims();
    if ckpt.layers.len() != dims.len() - 1 {
        return Err(ModelError::CorruptCheckpoint(format!(
            "{} layers stored, config implies {}",
            ckpt.layers.len(),
            dims.len() - 1
        )));
    }
    let mut layers = Vec::with_capacity(ckpt.layers.len());
    for (i, dump) in ckpt.layers.iter().enumerate() {
        if dump.rows != dims[i + 1] || dump.cols != dims[i] {
            return Err(ModelError::CorruptCheckpoint(format!(
                "layer {i} is {}x{}, config implies {}x{}",
                dump.rows,
                dump.cols,
                dims[i + 1],
                dims[i]
            )));
        }
        let (weights, bias) = restore_layer(dump)?;
        layers.push(Layer { weights, bias });
    }
    let net = MaskNet {
        config: ckpt.config,
        layers,
    };

    let adam = match ckpt.adam {
        None => None,
        Some(a) => {
            let restore_all = |dumps: &[ArrayDump]| -> Result<Vec<LayerGrad>, ModelError> {
                dumps
                    .iter()
                    .map(|d| {
                        restore_layer(d).map(|(w, b)| LayerGrad {
                            d_weights: w,
                            d_bias: b,
                        })
                    })
                    .collect()
            };
            Some(AdamState {
                lr: a.lr,
                beta1: a.beta1,
                beta2: a.beta2,
                epsilon: a.epsilon,
                step: a.step,
                m: restore_all(&a.m)?,
                v: restore_all(&a.v)?,
            })
        }
    };
    Ok((net, adam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth, SynthKind, SynthSpec};

    const SR: u32 = 16_000;

    fn tiny_config(activation: Activation) -> MaskNetConfig {
        MaskNetConfig {
            input_bins: 9,
            context_frames: 1,
            hidden_sizes: vec![8],
            mask_bound: 2.0,
            activation,
            normalize_input: true,
        }
    }

    fn tiny_params() -> StftParams {
        // 16-point window -> 9 one-sided bins
        StftParams {
            win_len: 16,
            hop: 8,
            window: crate::stft::WindowKind::Hamming,
        }
    }

    fn clip(seed: u64, duration_s: f64) -> Waveform {
        synth(
            &SynthSpec {
                kind: SynthKind::SpeechLike,
                duration_s,
                seed,
            },
            SR,
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = MaskNetConfig::default();
        c.context_frames = 4;
        assert!(matches!(
            MaskNet::init(c, 0),
            Err(ModelError::BadConfig(_))
        ));

        let mut c = MaskNetConfig::default();
        c.hidden_sizes = vec![16, 0];
        assert!(MaskNet::init(c, 0).is_err());

        let mut c = MaskNetConfig::default();
        c.mask_bound = -1.0;
        assert!(MaskNet::init(c, 0).is_err());
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = MaskNet::init(MaskNetConfig::default(), 5).unwrap();
        let b = MaskNet::init(MaskNetConfig::default(), 5).unwrap();
        assert_eq!(a, b);
        let c = MaskNet::init(MaskNetConfig::default(), 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn initial_mask_is_near_identity() {
        let net = MaskNet::init(MaskNetConfig::default(), 1).unwrap();
        let params = StftParams::default();
        let x = clip(2, 0.4);
        let spec = stft(&x, &params).unwrap();
        let feats = log_magnitude(&spec, DEFAULT_LOG_EPS).unwrap();
        let mask = net.forward(&feats).unwrap();
        for m in mask.values.iter() {
            let dev = (m - Complex64::new(1.0, 0.0)).norm();
            assert!(dev < 0.3, "mask {m} deviates {dev}");
        }
    }

    #[test]
    fn mask_components_respect_bound() {
        let mut config = MaskNetConfig::default();
        config.mask_bound = 1.5;
        let b = config.mask_bound;
        let net = MaskNet::init(config, 3).unwrap();
        let params = StftParams::default();
        let x = clip(4, 0.3);
        let feats = log_magnitude(&stft(&x, &params).unwrap(), DEFAULT_LOG_EPS).unwrap();
        let mask = net.forward(&feats).unwrap();
        for m in mask.values.iter() {
            assert!(m.re.abs() <= b && m.im.abs() <= b, "mask {m} out of bound");
        }
    }

    #[test]
    fn forward_rejects_wrong_bin_count() {
        let net = MaskNet::init(tiny_config(Activation::Tanh), 0).unwrap();
        let feats = Array2::zeros((11, 4));
        assert!(matches!(
            net.forward(&feats),
            Err(ModelError::WrongBins {
                expected: 9,
                got: 11
            })
        ));
    }

    #[test]
    fn enhance_output_matches_input_length() {
        let net = MaskNet::init(MaskNetConfig::default(), 7).unwrap();
        let params = StftParams::default();
        for len_s in [0.13, 0.5] {
            let x = clip(9, len_s);
            let y = net.enhance(&x, &params).unwrap();
            assert_eq!(y.len(), x.len());
            assert_eq!(y.sample_rate(), x.sample_rate());
        }
    }

    #[test]
    fn backward_loss_matches_training_loss() {
        let net = MaskNet::init(tiny_config(Activation::Tanh), 11).unwrap();
        let params = tiny_params();
        let input = clip(12, 0.05);
        let target = clip(13, 0.05);
        let (loss, _) = net.backward(&input, &target, &params).unwrap();
        let direct = net.training_loss(&input, &target, &params).unwrap();
        assert_eq!(loss, direct);
    }

    #[test]
    fn backward_is_deterministic() {
        let net = MaskNet::init(tiny_config(Activation::Relu), 17).unwrap();
        let params = tiny_params();
        let input = clip(18, 0.05);
        let target = clip(19, 0.05);
        let (l1, g1) = net.backward(&input, &target, &params).unwrap();
        let (l2, g2) = net.backward(&input, &target, &params).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(g1, g2);
    }

    fn gradcheck(activation: Activation, probe_count: usize, tol: f64) {
        let config = tiny_config(activation);
        let mut net = MaskNet::init(config, 23).unwrap();
        let params = tiny_params();
        let input = clip(24, 0.05);
        let target = clip(25, 0.05);

        let (_, grads) = net.backward(&input, &target, &params).unwrap();
        let n = net.param_count();
        assert!(n >= 30, "need at least 30 params, have {n}");

        // spread probes across all layers
        let stride = n / probe_count;
        let h = 1e-5;
        for p in 0..probe_count {
            let idx = p * stride;
            let orig = net.param(idx);
            net.set_param(idx, orig + h);
            let lp = net.training_loss(&input, &target, &params).unwrap();
            net.set_param(idx, orig - h);
            let lm = net.training_loss(&input, &target, &params).unwrap();
            net.set_param(idx, orig);

            let numeric = (lp - lm) / (2.0 * h);
            let analytic = grads.param(idx);
            let denom = numeric.abs().max(analytic.abs()).max(1.0);
            assert!(
                (numeric - analytic).abs() / denom < tol,
                "param {idx}: numeric {numeric} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn gradients_match_central_differences_tanh() {
        gradcheck(Activation::Tanh, 40, 1e-6);
    }

    #[test]
    fn gradients_match_central_differences_relu() {
        gradcheck(Activation::Relu, 40, 1e-4);
    }

    #[test]
    fn adam_first_step_formula() {
        let mut net = MaskNet::init(tiny_config(Activation::Relu), 31).unwrap();
        let mut state = AdamState::new(&net, 1e-4);
        let mut grads = Gradients::zeros_like(&net);
        grads.layers[0].d_weights[(0, 0)] = 1.0;

        // start the probed parameter at zero so the post-step value is
        // the update itself, free of cancellation error
        net.set_param(0, 0.0);
        adam_step(&mut net, &grads, &mut state).unwrap();
        let delta = net.param(0);

        // first step with unit gradient: m_hat = v_hat = 1 exactly, so
        // delta = -lr / (1 + epsilon)
        let expected = -1e-4 / (1.0 + 1e-8);
        assert_eq!(delta, expected);
        assert!((delta - -9.9999999e-5).abs() < 1e-15);

        // untouched parameters stay put (zero gradient, zero moments)
        assert_eq!(net.param(1), {
            let reference = MaskNet::init(tiny_config(Activation::Relu), 31).unwrap();
            reference.param(1)
        });
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn adam_rejects_mismatched_shapes() {
        let mut net = MaskNet::init(tiny_config(Activation::Relu), 37).unwrap();
        let other = MaskNet::init(
            MaskNetConfig {
                hidden_sizes: vec![4],
                ..tiny_config(Activation::Relu)
            },
            37,
        )
        .unwrap();
        let grads = Gradients::zeros_like(&other);
        let mut state = AdamState::new(&net, 1e-4);
        assert!(matches!(
            adam_step(&mut net, &grads, &mut state),
            Err(ModelError::GradientShapeMismatch)
        ));
    }

    #[test]
    fn gradient_accumulation_scales_linearly() {
        let net = MaskNet::init(tiny_config(Activation::Tanh), 41).unwrap();
        let params = tiny_params();
        let input = clip(42, 0.05);
        let target = clip(43, 0.05);
        let (_, g) = net.backward(&input, &target, &params).unwrap();

        let mut doubled = Gradients::zeros_like(&net);
        doubled.accumulate(&g).unwrap();
        doubled.accumulate(&g).unwrap();

        let mut scaled = g.clone();
        scaled.scale(2.0);
        // adding a gradient to itself is bitwise identical to doubling
        assert_eq!(doubled, scaled);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("masklab-model-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ckpt.json");

        let mut net = MaskNet::init(tiny_config(Activation::Relu), 47).unwrap();
        let mut state = AdamState::new(&net, 1e-4);
        let params = tiny_params();
        let input = clip(48, 0.05);
        let target = clip(49, 0.05);
        for _ in 0..3 {
            let (_, g) = net.backward(&input, &target, &params).unwrap();
            adam_step(&mut net, &g, &mut state).unwrap();
        }

        save_checkpoint(&path, &net, Some(&state)).unwrap();
        let (restored, restored_adam) = load_checkpoint(&path).unwrap();
        assert_eq!(restored, net);
        let restored_adam = restored_adam.unwrap();
        assert_eq!(restored_adam.step_count(), state.step_count());

        // continuing training from the restored state is bitwise identical
        let mut net_a = net.clone();
        let mut net_b = restored;
        let mut state_b = restored_adam;
        let (_, ga) = net_a.backward(&input, &target, &params).unwrap();
        adam_step(&mut net_a, &ga, &mut state).unwrap();
        let (_, gb) = net_b.backward(&input, &target, &params).unwrap();
        adam_step(&mut net_b, &gb, &mut state_b).unwrap();
        assert_eq!(net_a, net_b);
    }

    #[test]
    fn corrupt_checkpoint_is_rejected() {
        let dir = std::env::temp_dir().join("masklab-model-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("corrupt.json");

        let net = MaskNet::init(tiny_config(Activation::Relu), 53).unwrap();
        save_checkpoint(&path, &net, None).unwrap();
        let mut json = std::fs::read_to_string(&path).unwrap();
        json = json.replace("\"rows\":8", "\"rows\":9");
        std::fs::write(&path, json).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(ModelError::CorruptCheckpoint(_))
        ));
    }
}
