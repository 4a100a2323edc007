//! Minimal 1-D convolutional network engine: Conv1D stacks with 'same'
//! padding, ReLU, one hidden dense layer, a linear output neuron,
//! mean-squared-error loss with L2 penalty on convolution kernels, and
//! Adam optimization. All arithmetic is double precision so gradients
//! can be validated against finite differences.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub filters: usize,
    pub kernel_size: usize,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub conv_layers: Vec<ConvLayerSpec>,
    pub dense_units: usize,
    pub output_units: usize,
    pub input_length: usize,
    pub input_channels: usize,
}

impl NetworkSpec {
    /// Conv stack over a 1-channel sequence, one 64-unit hidden dense
    /// layer, one output neuron.
    pub fn new(conv_layers: Vec<ConvLayerSpec>, input_length: usize) -> Result<NetworkSpec> {
        let spec = NetworkSpec {
            conv_layers,
            dense_units: 64,
            output_units: 1,
            input_length,
            input_channels: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_length == 0 || self.input_channels == 0 {
            return Err(Error::config("input length and channels must be >= 1"));
        }
        if self.dense_units == 0 || self.output_units == 0 {
            return Err(Error::config("dense and output units must be >= 1"));
        }
        for (i, layer) in self.conv_layers.iter().enumerate() {
            if !(8..=64).contains(&layer.filters) {
                return Err(Error::config(format!(
                    "conv layer {i}: filters must be in [8, 64], got {}",
                    layer.filters
                )));
            }
            if !matches!(layer.kernel_size, 2 | 3) {
                return Err(Error::config(format!(
                    "conv layer {i}: kernel_size must be 2 or 3, got {}",
                    layer.kernel_size
                )));
            }
            if layer.l2 < 0.0 {
                return Err(Error::config(format!("conv layer {i}: l2 must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 1000,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            validation_fraction: 0.2,
        }
    }
}

/// Per-layer parameter offsets into the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ConvLayout {
    w_off: usize,
    b_off: usize,
    filters: usize,
    c_in: usize,
    k: usize,
    pad_left: usize,
    l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layout {
    conv: Vec<ConvLayout>,
    d1_w: usize,
    d1_b: usize,
    d2_w: usize,
    d2_b: usize,
    flat_len: usize,
    dense_units: usize,
    total: usize,
    input_length: usize,
    input_channels: usize,
}

fn layout(spec: &NetworkSpec) -> Layout {
    let mut off = 0;
    let mut c_in = spec.input_channels;
    let mut conv = Vec::with_capacity(spec.conv_layers.len());
    for l in &spec.conv_layers {
        let w_off = off;
        off += l.filters * c_in * l.kernel_size;
        let b_off = off;
        off += l.filters;
        conv.push(ConvLayout {
            w_off,
            b_off,
            filters: l.filters,
            c_in,
            k: l.kernel_size,
            // 'Same' padding for stride 1: total k-1, extra on the right.
            pad_left: (l.kernel_size - 1) / 2,
            l2: l.l2,
        });
        c_in = l.filters;
    }
    let flat_len = spec.input_length * c_in;
    let d1_w = off;
    off += spec.dense_units * flat_len;
    let d1_b = off;
    off += spec.dense_units;
    let d2_w = off;
    off += spec.output_units * spec.dense_units;
    let d2_b = off;
    off += spec.output_units;
    Layout {
        conv,
        d1_w,
        d1_b,
        d2_w,
        d2_b,
        flat_len,
        dense_units: spec.dense_units,
        total: off,
        input_length: spec.input_length,
        input_channels: spec.input_channels,
    }
}

/// A network with concrete weights. Parameters live in one flat vector
/// addressed through the layout, which keeps Adam and the gradient check
/// uniform across layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
    layout: Layout,
}

impl Network {
    /// Seeded uniform fan-in initialization: U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
    pub fn init(spec: &NetworkSpec, rng: &mut ChaCha8Rng) -> Result<Network> {
        spec.validate()?;
        let layout = layout(spec);
        let mut params = vec![0.0f64; layout.total];
        for cl in &layout.conv {
            let bound = 1.0 / ((cl.c_in * cl.k) as f64).sqrt();
            for p in &mut params[cl.w_off..cl.b_off] {
                *p = rng.random_range(-bound..bound);
            }
        }
        let d1_bound = 1.0 / (layout.flat_len as f64).sqrt();
        for p in &mut params[layout.d1_w..layout.d1_b] {
            *p = rng.random_range(-d1_bound..d1_bound);
        }
        let d2_bound = 1.0 / (layout.dense_units as f64).sqrt();
        for p in &mut params[layout.d2_w..layout.d2_b] {
            *p = rng.random_range(-d2_bound..d2_bound);
        }
        Ok(Network {
            spec: spec.clone(),
            params,
            layout,
        })
    }

    pub fn zeros(spec: &NetworkSpec) -> Result<Network> {
        spec.validate()?;
        let layout = layout(spec);
        Ok(Network {
            spec: spec.clone(),
            params: vec![0.0; layout.total],
            layout,
        })
    }

    pub fn n_params(&self) -> usize {
        self.layout.total
    }

    /// Sum of squared convolution-kernel weights, weighted by each
    /// layer's l2 coefficient.
    pub fn l2_penalty(&self) -> f64 {
        self.layout
            .conv
            .iter()
            .map(|cl| {
                cl.l2
                    * self.params[cl.w_off..cl.b_off]
                        .iter()
                        .map(|w| w * w)
                        .sum::<f64>()
            })
            .sum()
    }

    pub fn predict(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        if m.n_features() != self.spec.input_length {
            return Err(Error::data(format!(
                "network expects {} features, got {}",
                self.spec.input_length,
                m.n_features()
            )));
        }
        let mut scratch = Scratch::new(&self.layout);
        let mut row = vec![0.0f64; self.spec.input_length];
        Ok((0..m.n_rows())
            .map(|i| {
                for j in 0..row.len() {
                    row[j] = m.values[(i, j)];
                }
                forward(&self.layout, &self.params, &row, &mut scratch)
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Network> {
        let net: Network = serde_json::from_str(text)?;
        net.spec.validate()?;
        if net.layout != layout(&net.spec) || net.params.len() != net.layout.total {
            return Err(Error::config("network artifact inconsistent with its spec"));
        }
        Ok(net)
    }
}

/// Per-sample activation buffers, reused across rows.
struct Scratch {
    /// a[0] = input as (L, C) row-major; a[l+1] = ReLU(z[l]).
    acts: Vec<Vec<f64>>,
    /// Pre-activations per conv layer.
    pre: Vec<Vec<f64>>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    d_acts: Vec<Vec<f64>>,
    d_pre: Vec<Vec<f64>>,
    d_hidden: Vec<f64>,
}

impl Scratch {
    fn new(lay: &Layout) -> Scratch {
        let mut acts = vec![vec![0.0; lay.input_length * lay.input_channels]];
        let mut pre = Vec::new();
        for cl in &lay.conv {
            pre.push(vec![0.0; lay.input_length * cl.filters]);
            acts.push(vec![0.0; lay.input_length * cl.filters]);
        }
        Scratch {
            d_acts: acts.clone(),
            d_pre: pre.clone(),
            acts,
            pre,
            hidden_pre: vec![0.0; lay.dense_units],
            hidden: vec![0.0; lay.dense_units],
            d_hidden: vec![0.0; lay.dense_units],
        }
    }
}

/// Conv1D with 'same' zero padding and stride 1:
/// out[t, f] = b_f + sum_{c,j} w[f,c,j] * in[t + j - pad_left, c].
fn conv_forward(lay: &ConvLayout, params: &[f64], input: &[f64], len: usize, out: &mut [f64]) {
    let (f_n, c_n, k) = (lay.filters, lay.c_in, lay.k);
    for t in 0..len {
        for f in 0..f_n {
            let mut acc = params[lay.b_off + f];
            let w_base = lay.w_off + f * c_n * k;
            for j in 0..k {
                let s = t + j;
                if s < lay.pad_left || s - lay.pad_left >= len {
                    continue;
                }
                let s = s - lay.pad_left;
                for c in 0..c_n {
                    acc += params[w_base + c * k + j] * input[s * c_n + c];
                }
            }
            out[t * f_n + f] = acc;
        }
    }
}

fn forward(lay: &Layout, params: &[f64], row: &[f64], s: &mut Scratch) -> f64 {
    let len = lay.input_length;
    s.acts[0].copy_from_slice(row);
    for (l, cl) in lay.conv.iter().enumerate() {
        // Split-borrow: activations l (input) and the layer's buffers.
        let (head, tail) = s.acts.split_at_mut(l + 1);
        let input = &head[l];
        conv_forward(cl, params, input, len, &mut s.pre[l]);
        for (a, &z) in tail[0].iter_mut().zip(s.pre[l].iter()) {
            *a = z.max(0.0);
        }
    }
    let flat = &s.acts[lay.conv.len()];
    for u in 0..lay.dense_units {
        let w = &params[lay.d1_w + u * lay.flat_len..lay.d1_w + (u + 1) * lay.flat_len];
        let mut acc = params[lay.d1_b + u];
        for (wi, xi) in w.iter().zip(flat.iter()) {
            acc += wi * xi;
        }
        s.hidden_pre[u] = acc;
        s.hidden[u] = acc.max(0.0);
    }
    let mut out = params[lay.d2_b];
    for u in 0..lay.dense_units {
        out += params[lay.d2_w + u] * s.hidden[u];
    }
    out
}

/// Mean-squared-error loss over the batch plus the L2 kernel penalty,
/// with gradients for every parameter.
pub fn loss_and_grad(net: &Network, xs: &[Vec<f64>], ys: &[f64]) -> Result<(f64, Vec<f64>)> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::data("batch must be nonempty with matching targets"));
    }
    let lay = &net.layout;
    let params = &net.params;
    let mut grad = vec![0.0f64; lay.total];
    let mut scratch = Scratch::new(lay);
    let b = xs.len() as f64;
    let len = lay.input_length;
    let mut data_loss = 0.0;

    for (row, &y) in xs.iter().zip(ys.iter()) {
        if row.len() != len * lay.input_channels {
            return Err(Error::data("input row length mismatch"));
        }
        let out = forward(lay, params, row, &mut scratch);
        let err = out - y;
        data_loss += err * err / b;
        let dout = 2.0 * err / b;

        // Output layer.
        grad[lay.d2_b] += dout;
        for u in 0..lay.dense_units {
            grad[lay.d2_w + u] += dout * scratch.hidden[u];
            scratch.d_hidden[u] = if scratch.hidden_pre[u] > 0.0 {
                dout * params[lay.d2_w + u]
            } else {
                0.0
            };
        }

        // Hidden dense layer.
        let n_conv = lay.conv.len();
        let dflat = &mut scratch.d_acts[n_conv];
        dflat.iter_mut().for_each(|v| *v = 0.0);
        {
            let flat = &scratch.acts[n_conv];
            for u in 0..lay.dense_units {
                let dh = scratch.d_hidden[u];
                if dh == 0.0 {
                    continue;
                }
                let w_base = lay.d1_w + u * lay.flat_len;
                grad[lay.d1_b + u] += dh;
                for i in 0..lay.flat_len {
                    grad[w_base + i] += dh * flat[i];
                    dflat[i] += dh * params[w_base + i];
                }
            }
        }

        // Conv stack, in reverse.
        for l in (0..n_conv).rev() {
            let cl = &lay.conv[l];
            let (f_n, c_n, k) = (cl.filters, cl.c_in, cl.k);
            for i in 0..scratch.d_pre[l].len() {
                scratch.d_pre[l][i] = if scratch.pre[l][i] > 0.0 {
                    scratch.d_acts[l + 1][i]
                } else {
                    0.0
                };
            }
            let (d_head, d_tail) = scratch.d_acts.split_at_mut(l + 1);
            let d_in = &mut d_head[l];
            let _ = &d_tail;
            d_in.iter_mut().for_each(|v| *v = 0.0);
            let input = &scratch.acts[l];
            let dz = &scratch.d_pre[l];
            for t in 0..len {
                for f in 0..f_n {
                    let g = dz[t * f_n + f];
                    if g == 0.0 {
                        continue;
                    }
                    grad[cl.b_off + f] += g;
                    let w_base = cl.w_off + f * c_n * k;
                    for j in 0..k {
                        let s = t + j;
                        if s < cl.pad_left || s - cl.pad_left >= len {
                            continue;
                        }
                        let s = s - cl.pad_left;
                        for c in 0..c_n {
                            grad[w_base + c * k + j] += g * input[s * c_n + c];
                            d_in[s * c_n + c] += g * params[w_base + c * k + j];
                        }
                    }
                }
            }
        }
    }

    // L2 penalty on convolution kernels only.
    let l2_loss = net.l2_penalty();
    for cl in &lay.conv {
        if cl.l2 > 0.0 {
            for i in cl.w_off..cl.b_off {
                grad[i] += 2.0 * cl.l2 * params[i];
            }
        }
    }
    Ok((data_loss + l2_loss, grad))
}

/// Adam moment state over the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> AdamState {
        AdamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// Standard Adam update with bias correction.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedNetwork {
    /// Weights from the epoch with the lowest validation loss.
    pub best: Network,
    /// Weights after the final epoch, kept for comparison.
    pub last: Network,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub config: TrainConfig,
}

fn rows_of(m: &FeatureMatrix) -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..m.n_rows())
        .map(|i| (0..m.n_features()).map(|j| m.values[(i, j)]).collect())
        .collect();
    let ys: Vec<f64> = m.target.as_ref().map_or(Vec::new(), |t| t.iter().cloned().collect());
    (xs, ys)
}

fn mse(net: &Network, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    let lay = &net.layout;
    let mut scratch = Scratch::new(lay);
    let mut acc = 0.0;
    for (row, &y) in xs.iter().zip(ys.iter()) {
        let e = forward(lay, &net.params, row, &mut scratch) - y;
        acc += e * e;
    }
    acc / xs.len() as f64
}

/// Train with seeded mini-batch shuffling, recording per-epoch train and
/// validation MSE and retaining the best-validation-epoch weights.
pub fn train(
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    train_m: &FeatureMatrix,
    val_m: &FeatureMatrix,
) -> Result<TrainedNetwork> {
    if train_m.n_features() != spec.input_length || val_m.n_features() != spec.input_length {
        return Err(Error::data("feature count does not match input_length"));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::config("batch_size and epochs must be >= 1"));
    }
    train_m.target_ref()?;
    val_m.target_ref()?;
    let (train_x, train_y) = rows_of(train_m);
    let (val_x, val_y) = rows_of(val_m);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::init(spec, &mut rng)?;
    let mut adam = AdamState::new(net.n_params());

    let n = train_x.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best_epoch = 0usize;
    let mut best_val = f64::INFINITY;
    let mut best_params = net.params.clone();

    let mut batch_x: Vec<Vec<f64>> = Vec::with_capacity(cfg.batch_size);
    let mut batch_y: Vec<f64> = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.push(train_x[i].clone());
                batch_y.push(train_y[i]);
            }
            let (loss, grad) = loss_and_grad(&net, &batch_x, &batch_y)?;
            if !loss.is_finite() {
                return Err(Error::numerical(format!(
                    "non-finite loss at epoch {epoch}; consider a smaller learning rate"
                )));
            }
            adam.step(&mut net.params, &grad, cfg);
        }
        let train_loss = mse(&net, &train_x, &train_y);
        let val_loss = mse(&net, &val_x, &val_y);
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::numerical(format!(
                "non-finite loss at epoch {epoch}; consider a smaller learning rate"
            )));
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params.copy_from_slice(&net.params);
        }
    }

    let best = Network {
        spec: spec.clone(),
        params: best_params,
        layout: net.layout.clone(),
    };
    Ok(TrainedNetwork {
        best,
        last: net,
        history,
        best_epoch,
        config: cfg.clone(),
    })
}

/// Seeded row split into (train, validation) by fraction.
pub fn validation_split(
    m: &FeatureMatrix,
    fraction: f64,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    if !(0.0 < fraction && fraction < 1.0) {
        return Err(Error::config("validation fraction must be in (0, 1)"));
    }
    let n = m.n_rows();
    let n_val = ((n as f64) * fraction).round() as usize;
    if n_val == 0 || n_val == n {
        return Err(Error::data("validation split would be empty"));
    }
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let mut val: Vec<usize> = idx[..n_val].to_vec();
    let mut train: Vec<usize> = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((m.take_rows(&train), m.take_rows(&val)))
}
