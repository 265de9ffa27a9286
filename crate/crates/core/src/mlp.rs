//! From-scratch dense feed-forward classifier: ReLU hidden layers, softmax
//! output, exact backpropagation.
//!
//! The math is generic over [`Scalar`] so training runs in `f32` while
//! gradient-check oracles can drive the very same code in `f64`.
//!
//! Shape misuse on the hot-path methods (`forward_into`, `backward_into`,
//! `sgd_step`) is a programmer error and panics via `assert!`; fallible
//! validation lives at the training/evaluation/file layer.

use crate::bitmap::Bitmap;
use crate::dataset::{ClassLabel, SampleRecord, CLASS_COUNT};
use crate::rng::RngStream;

/// Probabilities are clipped to `[CLIP, 1]` before the log in the loss.
pub const PROB_CLIP: f64 = 1e-12;

/// Floating-point element type of a network.
pub trait Scalar:
    Copy
    + PartialOrd
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::ops::DivAssign
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
    fn exp(self) -> Self {
        self.exp()
    }
    fn is_finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        self.exp()
    }
    fn is_finite(self) -> bool {
        self.is_finite()
    }
}

/// Layer widths of a network: input, hidden stack, output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_layers: Vec<usize>,
    pub output_dim: usize,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, hidden_layers: Vec<usize>, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_layers,
            output_dim,
        }
    }

    /// The image-classifier family: 900 inputs, `depth` hidden layers of
    /// `width` neurons, 3 outputs.
    pub fn image_classifier(depth: usize, width: usize) -> Self {
        Self::new(
            crate::bitmap::IMAGE_CELLS,
            vec![width; depth],
            CLASS_COUNT,
        )
    }

    /// Widths from input to output, e.g. `[900, 100, 3]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_layers.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_layers);
        dims.push(self.output_dim);
        dims
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        if self.dims().iter().any(|&d| d == 0) {
            return Err(MlpError::InvalidConfig(
                "all layer widths must be at least 1".into(),
            ));
        }
        if self.hidden_layers.is_empty() {
            return Err(MlpError::InvalidConfig(
                "at least one hidden layer is required".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MlpError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("input dimension mismatch: network expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite parameter values")]
    NonFinite,
    #[error("empty sample set")]
    EmptySet,
}

/// One dense layer: weights in `fan_in x fan_out` row-major order
/// (`weights[k * fan_out + j]`), one bias per output.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<F> {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Scalar> Layer<F> {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![F::ZERO; fan_in * fan_out],
            bias: vec![F::ZERO; fan_out],
        }
    }

    fn weight_row(&self, k: usize) -> &[F] {
        &self.weights[k * self.fan_out..(k + 1) * self.fan_out]
    }
}

/// All weights and biases of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParameters<F> {
    pub layers: Vec<Layer<F>>,
}

/// Gradients share the parameter layout exactly.
pub type Gradients<F> = NetworkParameters<F>;

/// A batch of input rows: dense values, or per-row indices of the cells
/// that are on (value exactly 1). Both forms produce bit-identical
/// results because zero-valued inputs contribute nothing to an affine map
/// and are skipped in the same ascending-index order.
#[derive(Clone, Copy)]
pub enum InputBatch<'a, F> {
    Dense { rows: &'a [F], dim: usize },
    Binary { rows: &'a [&'a [u16]], dim: usize },
}

impl<F: Scalar> InputBatch<'_, F> {
    pub fn batch_len(&self) -> usize {
        match self {
            InputBatch::Dense { rows, dim } => {
                assert!(*dim > 0 && rows.len() % dim == 0, "ragged dense batch");
                rows.len() / dim
            }
            InputBatch::Binary { rows, .. } => rows.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InputBatch::Dense { dim, .. } | InputBatch::Binary { dim, .. } => *dim,
        }
    }
}

/// Reusable activation/delta buffers so the step loop stays allocation-free.
pub struct Workspace<F> {
    layer_dims: Vec<usize>,
    batch_cap: usize,
    acts: Vec<Vec<F>>,
    deltas: Vec<Vec<F>>,
    batch_len: usize,
}

impl<F: Scalar> Workspace<F> {
    pub fn new(config: &NetworkConfig, batch_cap: usize) -> Self {
        assert!(batch_cap > 0);
        let mut layer_dims = config.hidden_layers.clone();
        layer_dims.push(config.output_dim);
        let acts = layer_dims
            .iter()
            .map(|&d| vec![F::ZERO; d * batch_cap])
            .collect();
        let deltas = layer_dims
            .iter()
            .map(|&d| vec![F::ZERO; d * batch_cap])
            .collect();
        Self {
            layer_dims,
            batch_cap,
            acts,
            deltas,
            batch_len: 0,
        }
    }

    /// Output probabilities of the most recent forward pass,
    /// `batch_len x output_dim` row-major.
    pub fn probs(&self) -> &[F] {
        let out_dim = *self.layer_dims.last().expect("no layers");
        &self.acts[self.layer_dims.len() - 1][..self.batch_len * out_dim]
    }

    pub fn batch_len(&self) -> usize {
        self.batch_len
    }
}

impl<F: Scalar> NetworkParameters<F> {
    /// Glorot-uniform weights, zero biases: each weight is drawn uniformly
    /// from `(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`, layer by
    /// layer in index order.
    pub fn init(config: &NetworkConfig, rng: &mut RngStream) -> Self {
        let dims = config.dims();
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut layer = Layer::zeros(fan_in, fan_out);
            for weight in &mut layer.weights {
                *weight = F::from_f64((rng.next_f64() * 2.0 - 1.0) * bound);
            }
            layers.push(layer);
        }
        Self { layers }
    }

    /// All-zero parameters (useful as a symmetric baseline).
    pub fn zeros(config: &NetworkConfig) -> Self {
        let dims = config.dims();
        Self {
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn config(&self) -> NetworkConfig {
        let hidden = self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.fan_out)
            .collect();
        NetworkConfig::new(
            self.layers[0].fan_in,
            hidden,
            self.layers.last().expect("no layers").fan_out,
        )
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("no layers").fan_out
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Zero-valued buffer with the same shapes (e.g. for gradients).
    pub fn zero_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.fan_in, l.fan_out))
                .collect(),
        }
    }

    /// Run the network on a batch; activations land in `ws` and the
    /// returned slice views the output probabilities.
    pub fn forward_into<'w>(&self, input: InputBatch<'_, F>, ws: &'w mut Workspace<F>) -> &'w [F] {
        let batch = input.batch_len();
        assert!(batch <= ws.batch_cap, "batch exceeds workspace capacity");
        assert_eq!(input.dim(), self.input_dim(), "input dimension mismatch");
        assert_eq!(ws.layer_dims.len(), self.layers.len(), "workspace mismatch");
        ws.batch_len = batch;

        for (l, layer) in self.layers.iter().enumerate() {
            let (lower, upper) = ws.acts.split_at_mut(l);
            let out = &mut upper[0][..batch * layer.fan_out];
            match (l, input) {
                (0, InputBatch::Binary { rows, .. }) => affine_binary(rows, layer, out),
                (0, InputBatch::Dense { rows, .. }) => affine_dense(rows, batch, layer, out),
                _ => {
                    let prev = &lower[l - 1][..batch * layer.fan_in];
                    affine_dense(prev, batch, layer, out)
                }
            }
            if l + 1 < self.layers.len() {
                relu_in_place(out);
            } else {
                softmax_rows(out, layer.fan_out);
            }
        }
        ws.probs()
    }

    /// Exact gradients of the mean cross-entropy over the batch, written
    /// into `grads` (overwritten, same shapes as `self`). Requires the
    /// activations of the matching `forward_into` call in `ws`.
    pub fn backward_into(
        &self,
        input: InputBatch<'_, F>,
        ws: &mut Workspace<F>,
        labels: &[u8],
        grads: &mut Gradients<F>,
    ) {
        let batch = ws.batch_len;
        assert_eq!(input.batch_len(), batch, "input/forward batch mismatch");
        assert_eq!(labels.len(), batch, "labels/batch mismatch");
        assert_eq!(grads.layers.len(), self.layers.len(), "gradient shape mismatch");

        let depth = self.layers.len();
        let out_dim = self.output_dim();
        let inv_batch = F::ONE / F::from_f64(batch as f64);

        // Output delta: (probs - one_hot) / batch.
        {
            let probs = &ws.acts[depth - 1][..batch * out_dim];
            let delta = &mut ws.deltas[depth - 1][..batch * out_dim];
            delta.copy_from_slice(probs);
            for (b, &label) in labels.iter().enumerate() {
                debug_assert!((label as usize) < out_dim);
                delta[b * out_dim + label as usize] -= F::ONE;
            }
            for d in delta.iter_mut() {
                *d *= inv_batch;
            }
        }

        for l in (0..depth).rev() {
            let layer = &self.layers[l];
            let grad = &mut grads.layers[l];
            assert_eq!(grad.fan_in, layer.fan_in);
            assert_eq!(grad.fan_out, layer.fan_out);
            grad.weights.iter_mut().for_each(|g| *g = F::ZERO);
            grad.bias.iter_mut().for_each(|g| *g = F::ZERO);

            let delta = &ws.deltas[l][..batch * layer.fan_out];
            for b in 0..batch {
                let drow = &delta[b * layer.fan_out..(b + 1) * layer.fan_out];
                for (g, &d) in grad.bias.iter_mut().zip(drow) {
                    *g += d;
                }
            }

            // Weight gradient: a_{l-1}^T . delta, skipping zero activations.
            match (l, input) {
                (0, InputBatch::Binary { rows, .. }) => {
                    for (b, idxs) in rows.iter().enumerate() {
                        let drow = &delta[b * layer.fan_out..(b + 1) * layer.fan_out];
                        for &k in idxs.iter() {
                            let grow = &mut grad.weights
                                [k as usize * layer.fan_out..(k as usize + 1) * layer.fan_out];
                            for (g, &d) in grow.iter_mut().zip(drow) {
                                *g += d;
                            }
                        }
                    }
                }
                (0, InputBatch::Dense { rows, .. }) => {
                    accumulate_weight_grad(rows, delta, batch, layer.fan_in, layer.fan_out, grad);
                }
                _ => {
                    let prev = &ws.acts[l - 1][..batch * layer.fan_in];
                    accumulate_weight_grad(prev, delta, batch, layer.fan_in, layer.fan_out, grad);
                }
            }

            // Propagate delta to the previous hidden layer through the
            // ReLU mask (derivative at 0 is 0).
            if l > 0 {
                let (dl, du) = ws.deltas.split_at_mut(l);
                let prev_delta = &mut dl[l - 1][..batch * layer.fan_in];
                let delta = &du[0][..batch * layer.fan_out];
                let prev_act = &ws.acts[l - 1][..batch * layer.fan_in];
                for b in 0..batch {
                    let drow = &delta[b * layer.fan_out..(b + 1) * layer.fan_out];
                    let prow = &mut prev_delta[b * layer.fan_in..(b + 1) * layer.fan_in];
                    let arow = &prev_act[b * layer.fan_in..(b + 1) * layer.fan_in];
                    for (k, (p, &a)) in prow.iter_mut().zip(arow).enumerate() {
                        if a > F::ZERO {
                            let wrow = layer.weight_row(k);
                            let mut acc = F::ZERO;
                            for (&w, &d) in wrow.iter().zip(drow) {
                                acc += w * d;
                            }
                            *p = acc;
                        } else {
                            *p = F::ZERO;
                        }
                    }
                }
            }
        }
    }

    /// Plain SGD: `p <- p - lr * g` for every parameter.
    pub fn sgd_step(&mut self, grads: &Gradients<F>, learning_rate: F) {
        assert_eq!(self.layers.len(), grads.layers.len(), "gradient shape mismatch");
        for (layer, grad) in self.layers.iter_mut().zip(&grads.layers) {
            assert_eq!(layer.weights.len(), grad.weights.len());
            for (w, &g) in layer.weights.iter_mut().zip(&grad.weights) {
                *w -= learning_rate * g;
            }
            for (b, &g) in layer.bias.iter_mut().zip(&grad.bias) {
                *b -= learning_rate * g;
            }
        }
    }
}

fn affine_dense<F: Scalar>(input: &[F], batch: usize, layer: &Layer<F>, out: &mut [F]) {
    debug_assert_eq!(input.len(), batch * layer.fan_in);
    debug_assert_eq!(out.len(), batch * layer.fan_out);
    for b in 0..batch {
        let irow = &input[b * layer.fan_in..(b + 1) * layer.fan_in];
        let orow = &mut out[b * layer.fan_out..(b + 1) * layer.fan_out];
        orow.copy_from_slice(&layer.bias);
        for (k, &a) in irow.iter().enumerate() {
            if a != F::ZERO {
                let wrow = layer.weight_row(k);
                for (o, &w) in orow.iter_mut().zip(wrow) {
                    *o += a * w;
                }
            }
        }
    }
}

fn affine_binary<F: Scalar>(rows: &[&[u16]], layer: &Layer<F>, out: &mut [F]) {
    debug_assert_eq!(out.len(), rows.len() * layer.fan_out);
    for (b, idxs) in rows.iter().enumerate() {
        let orow = &mut out[b * layer.fan_out..(b + 1) * layer.fan_out];
        orow.copy_from_slice(&layer.bias);
        for &k in idxs.iter() {
            debug_assert!((k as usize) < layer.fan_in);
            let wrow = layer.weight_row(k as usize);
            for (o, &w) in orow.iter_mut().zip(wrow) {
                *o += w;
            }
        }
    }
}

fn accumulate_weight_grad<F: Scalar>(
    input: &[F],
    delta: &[F],
    batch: usize,
    fan_in: usize,
    fan_out: usize,
    grad: &mut Layer<F>,
) {
    for b in 0..batch {
        let irow = &input[b * fan_in..(b + 1) * fan_in];
        let drow = &delta[b * fan_out..(b + 1) * fan_out];
        for (k, &a) in irow.iter().enumerate() {
            if a != F::ZERO {
                let grow = &mut grad.weights[k * fan_out..(k + 1) * fan_out];
                for (g, &d) in grow.iter_mut().zip(drow) {
                    *g += a * d;
                }
            }
        }
    }
}

fn relu_in_place<F: Scalar>(values: &mut [F]) {
    for v in values.iter_mut() {
        if *v < F::ZERO {
            *v = F::ZERO;
        }
    }
}

/// Numerically stable softmax applied to each row in place: subtract the
/// row max before exponentiation, then normalize.
pub fn softmax_rows<F: Scalar>(values: &mut [F], row_len: usize) {
    assert!(row_len > 0 && values.len() % row_len == 0);
    for row in values.chunks_exact_mut(row_len) {
        let mut max = row[0];
        for &v in row.iter() {
            if v > max {
                max = v;
            }
        }
        let mut sum = F::ZERO;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Mean over the batch of `-ln p[true class]`, with probabilities clipped
/// to `[1e-12, 1]` before the log.
pub fn cross_entropy_mean<F: Scalar>(probs: &[F], labels: &[u8], classes: usize) -> f64 {
    assert!(classes > 0 && probs.len() == labels.len() * classes);
    let mut total = 0.0f64;
    for (b, &label) in labels.iter().enumerate() {
        let p = probs[b * classes + label as usize].to_f64();
        total -= p.clamp(PROB_CLIP, 1.0).ln();
    }
    total / labels.len() as f64
}

/// Index of the row maximum; ties break toward the lowest index.
pub fn argmax<F: Scalar>(row: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Accuracy and per-class confusion counts on a sample set.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Fraction of correctly classified samples, in `[0, 1]`.
    pub accuracy: f64,
    /// `confusion[true_class][predicted_class]`.
    pub confusion: [[u32; CLASS_COUNT]; CLASS_COUNT],
    pub total: usize,
}

impl EvalReport {
    pub fn accuracy_percent(&self) -> f64 {
        self.accuracy * 100.0
    }
}

const EVAL_BATCH: usize = 256;

/// Classify every sample (argmax of the class probabilities) and count
/// hits per class.
pub fn evaluate(
    params: &NetworkParameters<f32>,
    samples: &[SampleRecord],
) -> Result<EvalReport, MlpError> {
    if samples.is_empty() {
        return Err(MlpError::EmptySet);
    }
    if params.input_dim() != crate::bitmap::IMAGE_CELLS {
        return Err(MlpError::DimensionMismatch {
            expected: crate::bitmap::IMAGE_CELLS,
            actual: params.input_dim(),
        });
    }
    let config = params.config();
    let mut ws = Workspace::new(&config, EVAL_BATCH);
    let mut confusion = [[0u32; CLASS_COUNT]; CLASS_COUNT];
    let out_dim = params.output_dim();

    for chunk in samples.chunks(EVAL_BATCH) {
        let index_rows: Vec<Vec<u16>> = chunk.iter().map(|s| s.bitmap.on_indices()).collect();
        let rows: Vec<&[u16]> = index_rows.iter().map(|r| r.as_slice()).collect();
        let probs = params.forward_into(
            InputBatch::Binary {
                rows: &rows,
                dim: crate::bitmap::IMAGE_CELLS,
            },
            &mut ws,
        );
        for (b, sample) in chunk.iter().enumerate() {
            let predicted = argmax(&probs[b * out_dim..(b + 1) * out_dim]);
            confusion[sample.label.index()][predicted] += 1;
        }
    }

    let correct: u32 = (0..CLASS_COUNT).map(|c| confusion[c][c]).sum();
    Ok(EvalReport {
        accuracy: f64::from(correct) / samples.len() as f64,
        confusion,
        total: samples.len(),
    })
}

/// Class probabilities for a single image.
pub fn predict_proba(
    params: &NetworkParameters<f32>,
    bitmap: &Bitmap,
) -> Result<[f32; CLASS_COUNT], MlpError> {
    if params.input_dim() != crate::bitmap::IMAGE_CELLS {
        return Err(MlpError::DimensionMismatch {
            expected: crate::bitmap::IMAGE_CELLS,
            actual: params.input_dim(),
        });
    }
    if params.output_dim() != CLASS_COUNT {
        return Err(MlpError::DimensionMismatch {
            expected: CLASS_COUNT,
            actual: params.output_dim(),
        });
    }
    let config = params.config();
    let mut ws = Workspace::new(&config, 1);
    let indices = bitmap.on_indices();
    let rows = [indices.as_slice()];
    let probs = params.forward_into(
        InputBatch::Binary {
            rows: &rows,
            dim: crate::bitmap::IMAGE_CELLS,
        },
        &mut ws,
    );
    let mut out = [0.0f32; CLASS_COUNT];
    out.copy_from_slice(probs);
    Ok(out)
}

/// One-hot encoding helper for the three classes.
pub fn one_hot(label: ClassLabel) -> [f32; CLASS_COUNT] {
    let mut row = [0.0; CLASS_COUNT];
    row[label.index()] = 1.0;
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> NetworkConfig {
        NetworkConfig::new(4, vec![5], 3)
    }

    #[test]
    fn init_respects_glorot_bounds_and_zero_bias() {
        let config = NetworkConfig::image_classifier(1, 100);
        let mut rng = RngStream::new(42, 0);
        let params: NetworkParameters<f32> = NetworkParameters::init(&config, &mut rng);
        let bound = (6.0f64 / (900.0 + 100.0)).sqrt() as f32;
        let first = &params.layers[0];
        assert!(first.weights.iter().all(|w| w.abs() < bound));
        assert!(first.bias.iter().all(|&b| b == 0.0));
        assert!(params.layers[1].bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn init_is_deterministic() {
        let config = tiny_config();
        let a: NetworkParameters<f32> =
            NetworkParameters::init(&config, &mut RngStream::new(7, 1));
        let b: NetworkParameters<f32> =
            NetworkParameters::init(&config, &mut RngStream::new(7, 1));
        assert_eq!(a, b);
        let c: NetworkParameters<f32> =
            NetworkParameters::init(&config, &mut RngStream::new(8, 1));
        assert_ne!(a, c);
    }

    #[test]
    fn zero_network_outputs_uniform_probabilities() {
        let config = tiny_config();
        let params: NetworkParameters<f32> = NetworkParameters::zeros(&config);
        let mut ws = Workspace::new(&config, 2);
        let rows = [1.0f32, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let probs = params.forward_into(InputBatch::Dense { rows: &rows, dim: 4 }, &mut ws);
        for &p in probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let mut row = vec![0.0f32; 3];
        softmax_rows(&mut row, 3);
        for &p in &row {
            assert!((p - 1.0 / 3.0).abs() < 1e-7);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one_even_for_huge_logits() {
        let mut rows = vec![1.0e4f32, 0.0, -1.0e4, 312.5, 312.5, -7.0];
        softmax_rows(&mut rows, 3);
        for row in rows.chunks_exact(3) {
            let sum: f32 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|p| p.is_finite()));
        }
        // The dominant logit takes essentially all the mass.
        assert!(rows[0] > 0.999);
    }

    #[test]
    fn binary_and_dense_inputs_agree_bitwise() {
        let config = NetworkConfig::new(10, vec![7, 6], 3);
        let params: NetworkParameters<f32> =
            NetworkParameters::init(&config, &mut RngStream::new(3, 3));
        let mut dense = vec![0.0f32; 2 * 10];
        let idx_rows: [&[u16]; 2] = [&[0, 3, 9], &[2, 4, 5, 7]];
        for (b, idxs) in idx_rows.iter().enumerate() {
            for &k in idxs.iter() {
                dense[b * 10 + k as usize] = 1.0;
            }
        }
        let mut ws1 = Workspace::new(&config, 2);
        let mut ws2 = Workspace::new(&config, 2);
        let p_dense = params
            .forward_into(InputBatch::Dense { rows: &dense, dim: 10 }, &mut ws1)
            .to_vec();
        let p_binary = params
            .forward_into(InputBatch::Binary { rows: &idx_rows, dim: 10 }, &mut ws2)
            .to_vec();
        assert_eq!(p_dense, p_binary);

        let labels = [0u8, 2];
        let mut g1 = params.zero_like();
        let mut g2 = params.zero_like();
        params.backward_into(InputBatch::Dense { rows: &dense, dim: 10 }, &mut ws1, &labels, &mut g1);
        params.backward_into(
            InputBatch::Binary { rows: &idx_rows, dim: 10 },
            &mut ws2,
            &labels,
            &mut g2,
        );
        assert_eq!(g1, g2);
    }

    #[test]
    fn loss_is_zero_for_perfect_prediction_and_ln3_for_uniform() {
        let probs = [1.0f32, 0.0, 0.0];
        assert!((cross_entropy_mean(&probs, &[0], 3) - 0.0).abs() < 1e-9);

        let uniform = [1.0f32 / 3.0; 3];
        let loss = cross_entropy_mean(&uniform, &[1], 3);
        assert!((loss - 3.0f64.ln()).abs() < 1e-6, "loss = {loss}");
    }

    #[test]
    fn loss_is_clipped_for_zero_probability()
    {
        let probs = [0.0f32, 1.0, 0.0];
        let loss = cross_entropy_mean(&probs, &[0], 3);
        let expected = -(PROB_CLIP.ln());
        assert!((loss - expected).abs() < 1e-9, "loss = {loss}");
        assert!(loss.is_finite());
    }

    #[test]
    fn output_bias_gradient_is_mean_residual() {
        let config = tiny_config();
        let params: NetworkParameters<f32> =
            NetworkParameters::init(&config, &mut RngStream::new(5, 0));
        let rows = [1.0f32, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let labels = [2u8, 0];
        let mut ws = Workspace::new(&config, 2);
        let probs = params
            .forward_into(InputBatch::Dense { rows: &rows, dim: 4 }, &mut ws)
            .to_vec();
        let mut grads = params.zero_like();
        params.backward_into(InputBatch::Dense { rows: &rows, dim: 4 }, &mut ws, &labels, &mut grads);

        for j in 0..3 {
            let mut expected = 0.0f32;
            for b in 0..2 {
                let y = if labels[b] as usize == j { 1.0 } else { 0.0 };
                expected += (probs[b * 3 + j] - y) / 2.0;
            }
            let actual = grads.layers[1].bias[j];
            assert!((actual - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_rows_give_single_sample_gradient() {
        let config = tiny_config();
        let params: NetworkParameters<f32> =
            NetworkParameters::init(&config, &mut RngStream::new(6, 0));
        let one = [1.0f32, 0.0, 1.0, 1.0];
        let four: Vec<f32> = one.repeat(4);
        let mut ws = Workspace::new(&config, 4);

        params.forward_into(InputBatch::Dense { rows: &one, dim: 4 }, &mut ws);
        let mut g_single = params.zero_like();
        params.backward_into(InputBatch::Dense { rows: &one, dim: 4 }, &mut ws, &[1], &mut g_single);

        params.forward_into(InputBatch::Dense { rows: &four, dim: 4 }, &mut ws);
        let mut g_batch = params.zero_like();
        params.backward_into(
            InputBatch::Dense { rows: &four, dim: 4 },
            &mut ws,
            &[1, 1, 1, 1],
            &mut g_batch,
        );

        for (ls, lb) in g_single.layers.iter().zip(&g_batch.layers) {
            for (a, b) in ls.weights.iter().zip(&lb.weights) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sgd_step_applies_learning_rate() {
        let config = tiny_config();
        let mut params: NetworkParameters<f32> = NetworkParameters::zeros(&config);
        params.layers[0].weights[0] = 1.0;
        let mut grads = params.zero_like();
        grads.layers[0].weights[0] = 2.0;

        let before = params.clone();
        params.sgd_step(&grads, 0.0);
        assert_eq!(params, before);

        params.sgd_step(&params.zero_like(), 0.1);
        assert_eq!(params, before);

        params.sgd_step(&grads, 0.1);
        assert!((params.layers[0].weights[0] - 0.8).abs() < 1e-7);
    }

    #[test]
    fn argmax_breaks_ties_toward_lowest_index() {
        assert_eq!(argmax(&[0.2f32, 0.2, 0.2]), 0);
        assert_eq!(argmax(&[0.1f32, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[0.1f32, 0.2, 0.7]), 2);
    }

    #[test]
    fn zero_network_accuracy_equals_class_one_frequency() {
        let mut samples = Vec::new();
        for index in 0..30u32 {
            let label = ClassLabel::from_index(index as usize % 3).unwrap();
            let mut rng = RngStream::new(1, index as u64);
            samples.push(
                crate::dataset::make_sample(
                    crate::dataset::DatasetKind::BothCues,
                    label,
                    false,
                    index,
                    &mut rng,
                )
                .unwrap(),
            );
        }
        let config = NetworkConfig::image_classifier(1, 8);
        let params: NetworkParameters<f32> = NetworkParameters::zeros(&config);
        let report = evaluate(&params, &samples).unwrap();
        // Uniform probabilities + lowest-index tie rule: everything lands
        // in class I.
        let class_one = samples
            .iter()
            .filter(|s| s.label == ClassLabel::I)
            .count() as f64;
        assert_eq!(report.accuracy, class_one / samples.len() as f64);
        let row_sums: u32 = report.confusion.iter().flatten().sum();
        assert_eq!(row_sums as usize, samples.len());
    }

    #[test]
    fn predict_proba_matches_batched_forward_row() {
        let config = NetworkConfig::image_classifier(1, 6);
        let params: NetworkParameters<f32> =
            NetworkParameters::init(&config, &mut RngStream::new(11, 0));
        let mut rng = RngStream::new(2, 5);
        let a = crate::dataset::make_sample(
            crate::dataset::DatasetKind::Symbol,
            ClassLabel::II,
            false,
            0,
            &mut rng,
        )
        .unwrap();
        let b = crate::dataset::make_sample(
            crate::dataset::DatasetKind::Pattern,
            ClassLabel::III,
            false,
            1,
            &mut rng,
        )
        .unwrap();

        let single = predict_proba(&params, &a.bitmap).unwrap();
        let sum: f32 = single.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);

        // The same row inside a larger batch gives the same output.
        let rows_idx = [a.bitmap.on_indices(), b.bitmap.on_indices()];
        let rows: [&[u16]; 2] = [&rows_idx[0], &rows_idx[1]];
        let mut ws = Workspace::new(&config, 2);
        let probs = params.forward_into(
            InputBatch::Binary { rows: &rows, dim: 900 },
            &mut ws,
        );
        for c in 0..3 {
            assert_eq!(single[c], probs[c]);
        }
    }

    #[test]
    fn evaluate_rejects_dimension_mismatch() {
        let params: NetworkParameters<f32> =
            NetworkParameters::zeros(&NetworkConfig::new(10, vec![4], 3));
        let mut rng = RngStream::new(0, 0);
        let sample = crate::dataset::make_sample(
            crate::dataset::DatasetKind::Symbol,
            ClassLabel::I,
            false,
            0,
            &mut rng,
        )
        .unwrap();
        let err = evaluate(&params, &[sample]).unwrap_err();
        assert!(matches!(err, MlpError::DimensionMismatch { .. }));
    }
}
