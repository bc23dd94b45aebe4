//! Conditional MLP noise predictor with hand-written forward/backward passes.
//!
//! The network maps `(a_noised, condition, timestep)` to a scalar noise estimate.
//! Three input projections (plain linear for the noised value, a small ReLU tower
//! for the condition, sinusoidal embedding plus two SiLU layers for the timestep)
//! are concatenated and pushed through residual MLP blocks and a SiLU output head.
//!
//! Training state lives in [`OptimizerState`]: decoupled weight-decay AdamW with a
//! cosine-annealed learning rate.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Architecture hyperparameters.
///
/// At the full-size defaults (width 512, condition tower 16/32/4, 16-d time
/// embedding, two residual blocks with x2 expansion) the model has exactly
/// 9,260,893 learnable parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenoiserConfig {
    pub width: usize,
    pub cond_widths: [usize; 3],
    pub time_embed_dim: usize,
    pub n_res_blocks: usize,
    pub res_expand: usize,
    /// Largest timestep the model accepts; forward validates `1 <= t <= t_max`.
    pub t_max: usize,
    /// When false the condition input is masked to zero (ablation mode); the
    /// architecture is unchanged.
    pub conditional: bool,
}

impl DenoiserConfig {
    /// Full-size configuration (512-wide, two residual blocks).
    pub fn paper() -> Self {
        DenoiserConfig {
            width: 512,
            cond_widths: [16, 32, 4],
            time_embed_dim: 16,
            n_res_blocks: 2,
            res_expand: 2,
            t_max: 256,
            conditional: true,
        }
    }

    /// Reduced configuration for CPU-budget runs: width 128, one residual block.
    pub fn desk() -> Self {
        DenoiserConfig {
            width: 128,
            n_res_blocks: 1,
            ..DenoiserConfig::paper()
        }
    }

    /// Width of the concatenated trunk input: `width + cond_out + width`.
    pub fn concat_width(&self) -> usize {
        2 * self.width + self.cond_widths[2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0
            || self.cond_widths.contains(&0)
            || self.n_res_blocks == 0
            || self.res_expand == 0
            || self.t_max == 0
        {
            return Err(Error::Parameter("denoiser dimensions must be >= 1".into()));
        }
        if self.time_embed_dim == 0 || !self.time_embed_dim.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "time embedding dimension must be even and positive, got {}",
                self.time_embed_dim
            )));
        }
        Ok(())
    }

    /// Layer shapes `(fan_in, fan_out)` in storage order.
    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let w = self.width;
        let [c0, c1, c2] = self.cond_widths;
        let cat = self.concat_width();
        let exp = cat * self.res_expand;
        let mut shapes = vec![
            (1, w), // a projection
            (1, c0),
            (c0, c1),
            (c1, c2), // condition tower
            (self.time_embed_dim, w),
            (w, w), // time tower
        ];
        for _ in 0..self.n_res_blocks {
            shapes.push((cat, exp));
            shapes.push((exp, cat));
        }
        shapes.push((cat, w));
        shapes.push((w, 1));
        shapes
    }

    fn block_layer(&self, block: usize) -> usize {
        6 + 2 * block
    }

    fn out_layer(&self) -> usize {
        6 + 2 * self.n_res_blocks
    }
}

/// Sinusoidal timestep embedding: interleaved `[sin(t*w_j), cos(t*w_j), ...]`
/// with geometric frequencies `w_j = 10000^(-2j/dim)`, `j = 0 .. dim/2`.
pub fn time_embed(t: f64, dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "embedding dimension must be even, got {dim}"
        )));
    }
    let mut out = Vec::with_capacity(dim);
    for j in 0..dim / 2 {
        let omega = 10_000f64.powf(-2.0 * j as f64 / dim as f64);
        out.push((t * omega).sin());
        out.push((t * omega).cos());
    }
    Ok(out)
}

/// One dense layer; weights stored `(fan_in, fan_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    fn zeros(fan_in: usize, fan_out: usize) -> Linear {
        Linear {
            w: Array2::zeros((fan_in, fan_out)),
            b: Array1::zeros(fan_out),
        }
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// The complete set of model parameters (also reused for gradients and
/// optimizer moments, which share the layout).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub layers: Vec<Linear>,
}

impl ParamSet {
    fn zeros(config: &DenoiserConfig) -> ParamSet {
        let layers = config
            .layer_shapes()
            .iter()
            .map(|&(i, o)| Linear::zeros(i, o))
            .collect();
        ParamSet { layers }
    }

    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            layers: self
                .layers
                .iter()
                .map(|l| Linear::zeros(l.w.nrows(), l.w.ncols()))
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }

    pub fn has_nan(&self) -> bool {
        self.layers
            .iter()
            .any(|l| l.w.iter().any(|x| x.is_nan()) || l.b.iter().any(|x| x.is_nan()))
    }

    /// All parameters in storage order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    /// Overwrite from a flat vector in storage order.
    pub fn assign_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        let mut it = values.iter();
        for l in &mut self.layers {
            for w in l.w.iter_mut() {
                *w = *it.next().unwrap();
            }
            for b in l.b.iter_mut() {
                *b = *it.next().unwrap();
            }
        }
        Ok(())
    }
}

/// Parameter counts per architectural stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageCounts {
    pub input: usize,
    pub condition: usize,
    pub time: usize,
    pub residual: usize,
    pub output: usize,
}

impl StageCounts {
    pub fn total(&self) -> usize {
        self.input + self.condition + self.time + self.residual + self.output
    }
}

/// The noise-prediction model.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserModel {
    pub config: DenoiserConfig,
    pub params: ParamSet,
}

impl DenoiserModel {
    /// All-zero parameters (predicts 0 everywhere).
    pub fn zeros(config: DenoiserConfig) -> Result<DenoiserModel> {
        config.validate()?;
        let params = ParamSet::zeros(&config);
        Ok(DenoiserModel { config, params })
    }

    /// Fan-in-scaled uniform initialisation, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// for weights and biases. Deterministic given the rng stream.
    pub fn init(config: DenoiserConfig, rng: &mut Rng) -> Result<DenoiserModel> {
        let mut model = DenoiserModel::zeros(config)?;
        for l in &mut model.params.layers {
            let bound = 1.0 / (l.w.nrows() as f64).sqrt();
            for w in l.w.iter_mut() {
                *w = rng.uniform_in(-bound, bound);
            }
            for b in l.b.iter_mut() {
                *b = rng.uniform_in(-bound, bound);
            }
        }
        Ok(model)
    }

    pub fn param_count(&self) -> usize {
        self.params.param_count()
    }

    pub fn stage_param_counts(&self) -> StageCounts {
        let count = |range: std::ops::Range<usize>| {
            range.map(|i| self.params.layers[i].param_count()).sum()
        };
        StageCounts {
            input: count(0..1),
            condition: count(1..4),
            time: count(4..6),
            residual: count(6..self.config.out_layer()),
            output: count(self.config.out_layer()..self.params.layers.len()),
        }
    }

    fn layer(&self, idx: usize) -> &Linear {
        &self.params.layers[idx]
    }

    fn check_inputs(&self, a: &[f64], b: &[f64], t: &[usize]) -> Result<()> {
        if a.len() != b.len() || a.len() != t.len() {
            return Err(Error::Shape(format!(
                "input lengths differ: a={} b={} t={}",
                a.len(),
                b.len(),
                t.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::Parameter("empty batch".into()));
        }
        if a.iter().chain(b).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite network input".into()));
        }
        if let Some(&bad) = t.iter().find(|&&ti| ti < 1 || ti > self.config.t_max) {
            return Err(Error::Parameter(format!(
                "timestep {bad} outside [1, {}]",
                self.config.t_max
            )));
        }
        Ok(())
    }

    /// Condition column as a matrix, masked to zero in unconditional mode.
    fn cond_input(&self, b: &[f64]) -> Array2<f64> {
        if self.config.conditional {
            column(b)
        } else {
            Array2::zeros((b.len(), 1))
        }
    }

    /// Single-sample forward pass.
    pub fn forward(&self, a: f64, b: f64, t: usize) -> Result<(f64, ForwardCache)> {
        let (pred, cache) = self.forward_batch(&[a], &[b], &[t])?;
        Ok((pred[0], cache))
    }

    /// Batched forward pass with per-row timesteps, keeping the activations
    /// needed by [`DenoiserModel::backward`].
    pub fn forward_batch(
        &self,
        a: &[f64],
        b: &[f64],
        t: &[usize],
    ) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_inputs(a, b, t)?;
        let n = a.len();
        let dim = self.config.time_embed_dim;

        let a_in = column(a);
        let a_feat = affine(&a_in, self.layer(0));

        let c_in = self.cond_input(b);
        let c_z1 = affine(&c_in, self.layer(1));
        let c_h1 = c_z1.mapv(relu);
        let c_z2 = affine(&c_h1, self.layer(2));
        let c_h2 = c_z2.mapv(relu);
        let c_feat = affine(&c_h2, self.layer(3));

        let mut t_emb = Array2::zeros((n, dim));
        for (i, &ti) in t.iter().enumerate() {
            let row = time_embed(ti as f64, dim)?;
            t_emb.row_mut(i).assign(&Array1::from(row));
        }
        let t_z1 = affine(&t_emb, self.layer(4));
        let t_h1 = t_z1.mapv(silu);
        let t_z2 = affine(&t_h1, self.layer(5));
        let t_feat = t_z2.mapv(silu);

        let mut x = concat_features(&a_feat, &c_feat, &t_feat);

        let mut blocks = Vec::with_capacity(self.config.n_res_blocks);
        for i in 0..self.config.n_res_blocks {
            let l1 = self.layer(self.config.block_layer(i));
            let l2 = self.layer(self.config.block_layer(i) + 1);
            let x_in = x.clone();
            let z1 = affine(&x_in, l1);
            let h = z1.mapv(silu);
            let z2 = affine(&h, l2);
            x += &z2;
            blocks.push(BlockCache { x_in, z1, h });
        }

        let o_z1 = affine(&x, self.layer(self.config.out_layer()));
        let o_h = o_z1.mapv(silu);
        let y = affine(&o_h, self.layer(self.config.out_layer() + 1));
        let pred: Vec<f64> = y.column(0).to_vec();
        if pred.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite network output".into()));
        }

        let cache = ForwardCache {
            a_in,
            c_in,
            c_z1,
            c_h1,
            c_z2,
            c_h2,
            t_emb,
            t_z1,
            t_h1,
            t_z2,
            blocks,
            x_final: x,
            o_z1,
            o_h,
        };
        Ok((pred, cache))
    }

    /// Evaluation-only forward pass at a single timestep shared by every row.
    /// The time tower runs once and its output row is broadcast.
    pub fn predict_fixed_t(&self, a: &[f64], b: &[f64], t: usize) -> Result<Vec<f64>> {
        if a.len() != b.len() {
            return Err(Error::Shape(format!(
                "input lengths differ: a={} b={}",
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::Parameter("empty batch".into()));
        }
        if a.iter().chain(b).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite network input".into()));
        }
        if t < 1 || t > self.config.t_max {
            return Err(Error::Parameter(format!(
                "timestep {t} outside [1, {}]",
                self.config.t_max
            )));
        }
        let n = a.len();
        let dim = self.config.time_embed_dim;

        let a_in = column(a);
        let a_feat = affine(&a_in, self.layer(0));

        let c_in = self.cond_input(b);
        let c_h1 = affine(&c_in, self.layer(1)).mapv(relu);
        let c_h2 = affine(&c_h1, self.layer(2)).mapv(relu);
        let c_feat = affine(&c_h2, self.layer(3));

        let emb =
            Array2::from_shape_vec((1, dim), time_embed(t as f64, dim)?).expect("embedding shape");
        let t_row = affine(&affine(&emb, self.layer(4)).mapv(silu), self.layer(5)).mapv(silu);

        let width = self.config.width;
        let cat = self.config.concat_width();
        let mut x = Array2::zeros((n, cat));
        x.slice_mut(s![.., 0..width]).assign(&a_feat);
        x.slice_mut(s![.., width..width + self.config.cond_widths[2]])
            .assign(&c_feat);
        let t_row1 = t_row.row(0);
        for mut row in x
            .slice_mut(s![.., width + self.config.cond_widths[2]..cat])
            .rows_mut()
        {
            row.assign(&t_row1);
        }

        for i in 0..self.config.n_res_blocks {
            let l1 = self.layer(self.config.block_layer(i));
            let l2 = self.layer(self.config.block_layer(i) + 1);
            let h = affine(&x, l1).mapv(silu);
            let z2 = affine(&h, l2);
            x += &z2;
        }
        let o_h = affine(&x, self.layer(self.config.out_layer())).mapv(silu);
        let y = affine(&o_h, self.layer(self.config.out_layer() + 1));
        Ok(y.column(0).to_vec())
    }

    /// Exact gradients of the loss w.r.t. every parameter, given the gradient of
    /// the loss w.r.t. the predictions.
    pub fn backward(&self, cache: &ForwardCache, loss_grad: &[f64]) -> Result<ParamSet> {
        let n = cache.a_in.nrows();
        if loss_grad.len() != n {
            return Err(Error::Shape(format!(
                "loss gradient has {} entries for a batch of {n}",
                loss_grad.len()
            )));
        }
        let mut grads = ParamSet::zeros(&self.config);
        let d_y = column(loss_grad);

        // output head
        let out = self.config.out_layer();
        let d_oh = backprop_linear(
            &cache.o_h,
            &d_y,
            self.layer(out + 1),
            &mut grads.layers[out + 1],
        );
        let d_oz1 = &d_oh * &cache.o_z1.mapv(silu_deriv);
        let mut d_x = backprop_linear(
            &cache.x_final,
            &d_oz1,
            self.layer(out),
            &mut grads.layers[out],
        );

        // residual blocks, reversed
        for i in (0..self.config.n_res_blocks).rev() {
            let li = self.config.block_layer(i);
            let bc = &cache.blocks[i];
            let d_h = backprop_linear(&bc.h, &d_x, self.layer(li + 1), &mut grads.layers[li + 1]);
            let d_z1 = &d_h * &bc.z1.mapv(silu_deriv);
            let d_branch = backprop_linear(&bc.x_in, &d_z1, self.layer(li), &mut grads.layers[li]);
            d_x += &d_branch;
        }

        // split the concat gradient
        let width = self.config.width;
        let c2 = self.config.cond_widths[2];
        let d_a = d_x.slice(s![.., 0..width]).to_owned();
        let d_cfeat = d_x.slice(s![.., width..width + c2]).to_owned();
        let d_tfeat = d_x.slice(s![.., width + c2..]).to_owned();

        // a projection (input gradient unused)
        accumulate_linear_grads(&cache.a_in, &d_a, &mut grads.layers[0]);

        // condition tower
        let d_ch2 = backprop_linear(&cache.c_h2, &d_cfeat, self.layer(3), &mut grads.layers[3]);
        let d_cz2 = &d_ch2 * &cache.c_z2.mapv(relu_deriv);
        let d_ch1 = backprop_linear(&cache.c_h1, &d_cz2, self.layer(2), &mut grads.layers[2]);
        let d_cz1 = &d_ch1 * &cache.c_z1.mapv(relu_deriv);
        accumulate_linear_grads(&cache.c_in, &d_cz1, &mut grads.layers[1]);

        // time tower
        let d_tz2 = &d_tfeat * &cache.t_z2.mapv(silu_deriv);
        let d_th1 = backprop_linear(&cache.t_h1, &d_tz2, self.layer(5), &mut grads.layers[5]);
        let d_tz1 = &d_th1 * &cache.t_z1.mapv(silu_deriv);
        accumulate_linear_grads(&cache.t_emb, &d_tz1, &mut grads.layers[4]);

        Ok(grads)
    }
}

/// Activations cached by the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    a_in: Array2<f64>,
    c_in: Array2<f64>,
    c_z1: Array2<f64>,
    c_h1: Array2<f64>,
    c_z2: Array2<f64>,
    c_h2: Array2<f64>,
    t_emb: Array2<f64>,
    t_z1: Array2<f64>,
    t_h1: Array2<f64>,
    t_z2: Array2<f64>,
    blocks: Vec<BlockCache>,
    x_final: Array2<f64>,
    o_z1: Array2<f64>,
    o_h: Array2<f64>,
}

#[derive(Debug, Clone)]
struct BlockCache {
    x_in: Array2<f64>,
    z1: Array2<f64>,
    h: Array2<f64>,
}

fn column(xs: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).expect("column shape")
}

fn affine(x: &Array2<f64>, l: &Linear) -> Array2<f64> {
    let mut y = Array2::zeros((x.nrows(), l.w.ncols()));
    general_mat_mul(1.0, x, &l.w, 0.0, &mut y);
    y += &l.b;
    y
}

/// Accumulate weight/bias gradients for one layer and return the gradient
/// w.r.t. its input.
fn backprop_linear(
    x: &Array2<f64>,
    d_y: &Array2<f64>,
    l: &Linear,
    grad: &mut Linear,
) -> Array2<f64> {
    accumulate_linear_grads(x, d_y, grad);
    let mut d_x = Array2::zeros((x.nrows(), x.ncols()));
    general_mat_mul(1.0, d_y, &l.w.t(), 0.0, &mut d_x);
    d_x
}

fn accumulate_linear_grads(x: &Array2<f64>, d_y: &Array2<f64>, grad: &mut Linear) {
    general_mat_mul(1.0, &x.t(), d_y, 1.0, &mut grad.w);
    grad.b += &d_y.sum_axis(Axis(0));
}

fn concat_features(a: &Array2<f64>, c: &Array2<f64>, t: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let cat = a.ncols() + c.ncols() + t.ncols();
    let mut x = Array2::zeros((n, cat));
    x.slice_mut(s![.., 0..a.ncols()]).assign(a);
    x.slice_mut(s![.., a.ncols()..a.ncols() + c.ncols()])
        .assign(c);
    x.slice_mut(s![.., a.ncols() + c.ncols()..cat]).assign(t);
    x
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn silu(z: f64) -> f64 {
    z * sigmoid(z)
}

fn silu_deriv(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 + z * (1.0 - s))
}

fn relu(z: f64) -> f64 {
    z.max(0.0)
}

fn relu_deriv(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Cosine-annealed learning rate:
/// `lr(e) = lr_final + (lr_init - lr_final) * (1 + cos(pi * e / E)) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub lr_init: f64,
    pub lr_final: f64,
    pub total_epochs: usize,
}

impl LrSchedule {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if self.total_epochs == 0 {
            return self.lr_init;
        }
        let frac = epoch as f64 / self.total_epochs as f64;
        self.lr_final
            + 0.5 * (self.lr_init - self.lr_final) * (1.0 + (std::f64::consts::PI * frac).cos())
    }
}

/// AdamW state: first/second moments per parameter plus the step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    m: ParamSet,
    v: ParamSet,
    step: usize,
    pub schedule: LrSchedule,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerState {
    pub fn new(model: &DenoiserModel, schedule: LrSchedule, weight_decay: f64) -> OptimizerState {
        OptimizerState {
            m: model.params.zeros_like(),
            v: model.params.zeros_like(),
            step: 0,
            schedule,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&self) -> usize {
        self.step
    }
}

/// One decoupled weight-decay AdamW update at the given epoch's learning rate.
/// Returns the learning rate used.
pub fn adamw_step(
    model: &mut DenoiserModel,
    grads: &ParamSet,
    state: &mut OptimizerState,
    epoch: usize,
) -> Result<f64> {
    let lr = state.schedule.lr_at(epoch);
    if grads.has_nan() {
        return Err(Error::Training {
            epoch,
            lr,
            message: "NaN gradient".into(),
        });
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - state.beta1.powf(t);
    let bc2 = 1.0 - state.beta2.powf(t);
    let (b1, b2, eps, wd) = (state.beta1, state.beta2, state.eps, state.weight_decay);

    for ((pl, gl), (ml, vl)) in model
        .params
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.m.layers.iter_mut().zip(state.v.layers.iter_mut()))
    {
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *p *= 1.0 - lr * wd;
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for ((p, &g), (m, v)) in
            pl.w.iter_mut()
                .zip(gl.w.iter())
                .zip(ml.w.iter_mut().zip(vl.w.iter_mut()))
        {
            update(p, g, m, v);
        }
        for ((p, &g), (m, v)) in
            pl.b.iter_mut()
                .zip(gl.b.iter())
                .zip(ml.b.iter_mut().zip(vl.b.iter_mut()))
        {
            update(p, g, m, v);
        }
    }
    Ok(lr)
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"BIDDMDL1";

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

impl DenoiserModel {
    /// Serialise to the versioned checkpoint format: magic bytes, JSON config
    /// block, little-endian f64 parameter payload, FNV-1a checksum.
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let cfg = serde_json::to_vec(&self.config).expect("config serialises");
        let flat = self.params.flatten();
        let mut out = Vec::with_capacity(16 + cfg.len() + flat.len() * 8 + 8);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
        out.extend_from_slice(&cfg);
        out.extend_from_slice(&(flat.len() as u64).to_le_bytes());
        for v in &flat {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let checksum = fnv1a64(&out);
        out.extend_from_slice(&checksum.to_le_bytes());
        out
    }

    pub fn save_checkpoint(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_bytes())?;
        Ok(())
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<DenoiserModel> {
        let fail = |msg: &str| Error::Checkpoint(msg.to_string());
        if bytes.len() < 8 + 4 + 8 + 8 {
            return Err(fail("truncated checkpoint"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().unwrap());
        if fnv1a64(body) != stored {
            return Err(fail("checksum mismatch"));
        }
        if &body[0..8] != CHECKPOINT_MAGIC {
            return Err(fail("bad magic bytes"));
        }
        let cfg_len = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
        let cfg_end = 12 + cfg_len;
        if body.len() < cfg_end + 8 {
            return Err(fail("truncated config block"));
        }
        let config: DenoiserConfig = serde_json::from_slice(&body[12..cfg_end])
            .map_err(|e| fail(&format!("config block: {e}")))?;
        let count = u64::from_le_bytes(body[cfg_end..cfg_end + 8].try_into().unwrap()) as usize;
        let payload = &body[cfg_end + 8..];
        if payload.len() != count * 8 {
            return Err(fail("parameter payload length mismatch"));
        }
        let mut model = DenoiserModel::zeros(config)?;
        if model.param_count() != count {
            return Err(fail("parameter count does not match config"));
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        model.params.assign_flat(&values)?;
        Ok(model)
    }

    pub fn load_checkpoint(path: &std::path::Path) -> Result<DenoiserModel> {
        DenoiserModel::from_checkpoint_bytes(&std::fs::read(path)?)
    }
}
