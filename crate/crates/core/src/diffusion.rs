//! Noise schedule, forward noising, the full-batch training loop, and batched
//! noise prediction for evaluation.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::denoiser::{adamw_step, DenoiserConfig, DenoiserModel, LrSchedule, OptimizerState};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// How beta moves from its minimum to its maximum across timesteps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Linear,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub epochs: usize,
    pub timesteps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub schedule: ScheduleKind,
    pub lr_init: f64,
    pub lr_final: f64,
    pub weight_decay: f64,
}

impl TrainSpec {
    /// Published hyperparameters: 4000 epochs, 256 timesteps, beta linear in
    /// `[1e-4, 0.02]`, lr cosine-annealed from 1e-4 to 1e-5.
    pub fn paper() -> Self {
        TrainSpec {
            epochs: 4000,
            timesteps: 256,
            beta_min: 1e-4,
            beta_max: 0.02,
            schedule: ScheduleKind::Linear,
            lr_init: 1e-4,
            lr_final: 1e-5,
            weight_decay: 0.01,
        }
    }

    /// CPU-budget variant: 1500 epochs, same schedule.
    pub fn desk() -> Self {
        TrainSpec {
            epochs: 1500,
            ..TrainSpec::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.timesteps == 0 {
            return Err(Error::Parameter("need at least one timestep".into()));
        }
        if !(0.0 < self.beta_min && self.beta_min <= self.beta_max && self.beta_max < 1.0) {
            return Err(Error::Parameter(format!(
                "betas must satisfy 0 < beta_min <= beta_max < 1, got [{}, {}]",
                self.beta_min, self.beta_max
            )));
        }
        if self.lr_init <= 0.0 || self.lr_final <= 0.0 || self.weight_decay < 0.0 {
            return Err(Error::Parameter("learning rates must be positive".into()));
        }
        Ok(())
    }

    pub fn lr_schedule(&self) -> LrSchedule {
        LrSchedule {
            lr_init: self.lr_init,
            lr_final: self.lr_final,
            total_epochs: self.epochs,
        }
    }
}

/// Per-timestep corruption strengths. Timesteps are 1-based throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t - 1]
    }
}

/// Build the noise schedule: `beta_t` on the inclusive linear grid
/// `beta_min + (t-1)/(T-1) * (beta_max - beta_min)`, with `alpha_t = 1 - beta_t`
/// and `alpha_bar_t` their running product. A single-step schedule (`T = 1`)
/// uses `beta_min` alone.
pub fn make_schedule(spec: &TrainSpec) -> Result<NoiseSchedule> {
    spec.validate()?;
    let t_steps = spec.timesteps;
    let mut beta = Vec::with_capacity(t_steps);
    for t in 1..=t_steps {
        // endpoints assigned exactly, interior interpolated
        let b = if t == 1 {
            spec.beta_min
        } else if t == t_steps {
            spec.beta_max
        } else {
            spec.beta_min + (t - 1) as f64 / (t_steps - 1) as f64 * (spec.beta_max - spec.beta_min)
        };
        beta.push(b);
    }
    let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
    let mut alpha_bar = Vec::with_capacity(t_steps);
    let mut prod = 1.0;
    for a in &alpha {
        prod *= a;
        alpha_bar.push(prod);
    }
    for w in alpha_bar.windows(2) {
        debug_assert!(w[1] < w[0], "alpha_bar must be strictly decreasing");
    }
    Ok(NoiseSchedule {
        beta,
        alpha,
        alpha_bar,
    })
}

/// Variance-preserving corruption at step `t`:
/// `sqrt(alpha_bar_t) * a + sqrt(1 - alpha_bar_t) * eps`.
pub fn noised(a: f64, eps: f64, t: usize, schedule: &NoiseSchedule) -> f64 {
    let ab = schedule.alpha_bar(t);
    ab.sqrt() * a + (1.0 - ab).sqrt() * eps
}

/// One point of the training loss trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
}

/// A trained model together with its loss trace.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: DenoiserModel,
    pub loss_trace: Vec<TracePoint>,
}

impl TrainedModel {
    /// Loss trace as CSV with header `epoch,loss,lr`.
    pub fn trace_csv(&self) -> String {
        trace_csv(&self.loss_trace)
    }
}

/// Render a loss trace as CSV with header `epoch,loss,lr`.
pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from("epoch,loss,lr\n");
    for p in trace {
        out.push_str(&format!("{},{:.17e},{:.17e}\n", p.epoch, p.loss, p.lr));
    }
    out
}

/// Train a conditional denoiser to predict the noise injected into `target`,
/// conditioned on `cond`.
///
/// Each epoch samples one timestep and one noise draw per row, builds the noised
/// inputs, and performs a single full-batch AdamW update on the mean squared
/// noise-prediction error. With `epochs = 0` the freshly initialised model is
/// returned untouched.
pub fn train_conditional(
    target: &[f64],
    cond: &[f64],
    config: &DenoiserConfig,
    spec: &TrainSpec,
    rng: &mut Rng,
) -> Result<TrainedModel> {
    if target.len() != cond.len() {
        return Err(Error::Shape(format!(
            "target/condition lengths differ: {} vs {}",
            target.len(),
            cond.len()
        )));
    }
    if target.len() < 2 {
        return Err(Error::Parameter("need at least 2 training rows".into()));
    }
    if config.t_max != spec.timesteps {
        return Err(Error::Parameter(format!(
            "model t_max {} does not match schedule length {}",
            config.t_max, spec.timesteps
        )));
    }
    let schedule = make_schedule(spec)?;
    let n = target.len();

    let mut model = DenoiserModel::init(config.clone(), rng)?;
    let mut opt = OptimizerState::new(&model, spec.lr_schedule(), spec.weight_decay);
    let mut loss_trace = Vec::with_capacity(spec.epochs);

    let mut noised_buf = vec![0.0; n];
    let mut t_buf = vec![0usize; n];
    let mut eps_buf = vec![0.0; n];

    for epoch in 0..spec.epochs {
        for ti in t_buf.iter_mut() {
            *ti = 1 + (rng.next_u64() % spec.timesteps as u64) as usize;
        }
        for e in eps_buf.iter_mut() {
            *e = rng.standard_normal();
        }
        for i in 0..n {
            noised_buf[i] = noised(target[i], eps_buf[i], t_buf[i], &schedule);
        }

        let (pred, cache) = model.forward_batch(&noised_buf, cond, &t_buf)?;
        let mut loss = 0.0;
        let mut d_y = vec![0.0; n];
        for i in 0..n {
            let r = pred[i] - eps_buf[i];
            loss += r * r;
            d_y[i] = 2.0 * r / n as f64;
        }
        loss /= n as f64;

        let lr = opt.schedule.lr_at(epoch);
        if !loss.is_finite() {
            return Err(Error::Training {
                epoch,
                lr,
                message: format!("loss = {loss}"),
            });
        }

        let grads = model.backward(&cache, &d_y)?;
        let lr = adamw_step(&mut model, &grads, &mut opt, epoch)?;
        loss_trace.push(TracePoint { epoch, loss, lr });
    }

    Ok(TrainedModel { model, loss_trace })
}

/// Noise predictions for the evaluation set at one timestep.
#[derive(Debug, Clone)]
pub struct PredictOutput {
    /// Model outputs, length `k * n` (row-major: all repeats of row 0 first).
    pub eps_hat: Vec<f64>,
    /// The conditioning value of each prediction (each row's condition repeated
    /// `k` times).
    pub conditions: Vec<f64>,
    /// The noise that was actually injected.
    pub true_noise: Vec<f64>,
}

/// Noise the evaluation targets `k` times each with fresh draws, and predict the
/// injected noise at timestep `t`.
pub fn predict_noise(
    model: &DenoiserModel,
    target: &[f64],
    cond: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut Rng,
    oversample: usize,
) -> Result<PredictOutput> {
    if target.len() != cond.len() {
        return Err(Error::Shape("target/condition lengths differ".into()));
    }
    if oversample == 0 {
        return Err(Error::Parameter("oversample factor must be >= 1".into()));
    }
    let n = target.len();
    let total = n * oversample;
    let mut noised_vals = Vec::with_capacity(total);
    let mut conditions = Vec::with_capacity(total);
    let mut true_noise = Vec::with_capacity(total);
    for i in 0..n {
        for _ in 0..oversample {
            let eps = rng.standard_normal();
            noised_vals.push(noised(target[i], eps, t, schedule));
            conditions.push(cond[i]);
            true_noise.push(eps);
        }
    }
    let eps_hat = model.predict_fixed_t(&noised_vals, &conditions, t)?;
    Ok(PredictOutput {
        eps_hat,
        conditions,
        true_noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::variance;

    #[test]
    fn schedule_endpoints_exact() {
        let schedule = make_schedule(&TrainSpec::paper()).unwrap();
        assert_eq!(schedule.len(), 256);
        assert_eq!(schedule.beta(1), 1e-4);
        assert_eq!(schedule.beta(256), 0.02);
        assert_eq!(schedule.alpha_bar(1), 1.0 - 1e-4);
    }

    #[test]
    fn schedule_alpha_bar_matches_product_oracle() {
        let spec = TrainSpec::paper();
        let schedule = make_schedule(&spec).unwrap();
        // independent brute-force product over the same beta grid
        let mut prod = 1.0;
        for t in 1..=256usize {
            let b = if t == 1 {
                spec.beta_min
            } else if t == 256 {
                spec.beta_max
            } else {
                spec.beta_min + (t - 1) as f64 / 255.0 * (spec.beta_max - spec.beta_min)
            };
            prod *= 1.0 - b;
        }
        assert!((schedule.alpha_bar(256) - prod).abs() < 1e-12);
        // frozen value from the product oracle
        assert!((schedule.alpha_bar(256) - 0.07500804942906498).abs() < 1e-12);
    }

    #[test]
    fn schedule_is_strictly_monotone() {
        let schedule = make_schedule(&TrainSpec::paper()).unwrap();
        for t in 1..256 {
            assert!(schedule.beta(t) < schedule.beta(t + 1));
            assert!(schedule.alpha_bar(t + 1) < schedule.alpha_bar(t));
        }
        assert!(schedule.alpha_bar(256) < schedule.alpha_bar(1));
    }

    #[test]
    fn single_step_schedule_uses_beta_min() {
        let spec = TrainSpec {
            timesteps: 1,
            ..TrainSpec::paper()
        };
        let schedule = make_schedule(&spec).unwrap();
        assert_eq!(schedule.beta(1), spec.beta_min);
    }

    #[test]
    fn noised_degenerate_mixes() {
        let schedule = NoiseSchedule {
            beta: vec![0.0, 1.0],
            alpha: vec![1.0, 0.0],
            alpha_bar: vec![1.0, 0.0],
        };
        assert_eq!(noised(1.5, -0.3, 1, &schedule), 1.5); // alpha_bar = 1 returns a
        assert_eq!(noised(1.5, -0.3, 2, &schedule), -0.3); // alpha_bar = 0 returns eps
    }

    #[test]
    fn noised_preserves_unit_variance() {
        let schedule = make_schedule(&TrainSpec::paper()).unwrap();
        let mut rng = Rng::new(17);
        for &t in &[1usize, 64, 128, 256] {
            let mut vals = Vec::with_capacity(100_000);
            for _ in 0..100_000 {
                let a = rng.standard_normal();
                let e = rng.standard_normal();
                vals.push(noised(a, e, t, &schedule));
            }
            let v = variance(&vals);
            assert!((v - 1.0).abs() < 0.03, "t={t}: variance {v}");
        }
    }

    #[test]
    fn zero_epochs_returns_initialized_model() {
        let spec = TrainSpec {
            epochs: 0,
            timesteps: 8,
            ..TrainSpec::paper()
        };
        let config = DenoiserConfig {
            width: 8,
            cond_widths: [3, 4, 2],
            time_embed_dim: 4,
            n_res_blocks: 1,
            res_expand: 2,
            t_max: 8,
            conditional: true,
        };
        let mut rng = Rng::new(31);
        let data: Vec<f64> = rng.standard_normal_vec(16);
        let cond: Vec<f64> = rng.standard_normal_vec(16);

        let mut train_rng = rng.split(0);
        let trained = train_conditional(&data, &cond, &config, &spec, &mut train_rng).unwrap();
        assert!(trained.loss_trace.is_empty());

        let mut init_rng = rng.split(0);
        let fresh = DenoiserModel::init(config, &mut init_rng).unwrap();
        assert_eq!(trained.model.params, fresh.params);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let spec = TrainSpec {
            epochs: 25,
            timesteps: 8,
            ..TrainSpec::paper()
        };
        let config = DenoiserConfig {
            width: 8,
            cond_widths: [3, 4, 2],
            time_embed_dim: 4,
            n_res_blocks: 1,
            res_expand: 2,
            t_max: 8,
            conditional: true,
        };
        let mut rng = Rng::new(5);
        let data: Vec<f64> = rng.standard_normal_vec(32);
        let cond: Vec<f64> = rng.standard_normal_vec(32);

        let run = |seed| {
            let mut r = Rng::new(seed);
            train_conditional(&data, &cond, &config, &spec, &mut r).unwrap()
        };
        let a = run(11);
        let b = run(11);
        assert_eq!(a.model.params, b.model.params);
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn predict_noise_shapes_and_zero_model() {
        let spec = TrainSpec {
            timesteps: 8,
            ..TrainSpec::paper()
        };
        let schedule = make_schedule(&spec).unwrap();
        let config = DenoiserConfig {
            width: 8,
            cond_widths: [3, 4, 2],
            time_embed_dim: 4,
            n_res_blocks: 1,
            res_expand: 2,
            t_max: 8,
            conditional: true,
        };
        let model = DenoiserModel::zeros(config).unwrap();
        let mut rng = Rng::new(2);
        let target = rng.standard_normal_vec(10);
        let cond = rng.standard_normal_vec(10);

        let out = predict_noise(&model, &target, &cond, 3, &schedule, &mut rng, 1).unwrap();
        assert_eq!(out.eps_hat.len(), 10);
        assert!(out.eps_hat.iter().all(|&p| p == 0.0));

        let out = predict_noise(&model, &target, &cond, 3, &schedule, &mut rng, 4).unwrap();
        assert_eq!(out.eps_hat.len(), 40);
        assert_eq!(out.conditions.len(), 40);
        // conditions repeat each row k times
        assert_eq!(out.conditions[0], cond[0]);
        assert_eq!(out.conditions[3], cond[0]);
        assert_eq!(out.conditions[4], cond[1]);
        assert!(predict_noise(&model, &target, &cond, 3, &schedule, &mut rng, 0).is_err());
    }

    #[test]
    fn trace_csv_format() {
        let trained = TrainedModel {
            model: DenoiserModel::zeros(DenoiserConfig {
                width: 8,
                cond_widths: [3, 4, 2],
                time_embed_dim: 4,
                n_res_blocks: 1,
                res_expand: 2,
                t_max: 8,
                conditional: true,
            })
            .unwrap(),
            loss_trace: vec![TracePoint {
                epoch: 0,
                loss: 1.25,
                lr: 1e-4,
            }],
        };
        let csv = trained.trace_csv();
        assert!(csv.starts_with("epoch,loss,lr\n0,"));
    }
}
