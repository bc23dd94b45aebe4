//! The BiDD decision procedure: MI-profile construction, the voting and mean
//! comparison rules, data-split policies, and three lightweight baselines.
//!
//! Direction bookkeeping: the profile labelled `A` comes from the model that
//! denoises column `a` conditioned on column `b`, and vice versa. Low dependence
//! between predicted noise and the condition indicates the condition is the
//! cause, so the voting rule concludes `b -> a` exactly when the `A` profile
//! sits below the `B` profile at a strict majority of timesteps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoiser::{DenoiserConfig, DenoiserModel};
use crate::dependence::EstimatorKind;
use crate::dependence::{hsic, HsicConfig};
use crate::dgp::{Direction, PairDataset};
use crate::diffusion::{
    make_schedule, predict_noise, train_conditional, NoiseSchedule, TracePoint, TrainSpec,
};
use crate::error::{Error, Result};
use crate::numerics::{variance, Rng};
use crate::regression::{crossfit_mse, crossfit_residuals};

/// Which variable a profile's model denoised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denoised {
    A,
    B,
}

/// Per-timestep dependence between predicted noise and the conditioning value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MIProfile {
    pub denoised: Denoised,
    pub values: Vec<f64>,
}

impl MIProfile {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// How two MI profiles are reduced to a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionRule {
    /// Per-timestep majority: conclude `b -> a` iff `MI_A,t < MI_B,t` at
    /// strictly more than half of the timesteps.
    Voting,
    /// Conclude `b -> a` iff `mean(MI_A) < mean(MI_B)`.
    Mean,
}

impl std::fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecisionRule::Voting => write!(f, "voting"),
            DecisionRule::Mean => write!(f, "mean"),
        }
    }
}

/// Which rows the dependence estimation runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPolicy {
    /// Train on the training fraction, estimate dependence on the held-out rest.
    Test,
    /// Train on the training fraction, estimate dependence on the full dataset.
    Total,
}

impl std::fmt::Display for SplitPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitPolicy::Test => write!(f, "test"),
            SplitPolicy::Total => write!(f, "total"),
        }
    }
}

/// Outcome of a direction decision.
///
/// For BiDD verdicts `mean_mi_a`/`mean_mi_b` are the profile means; the
/// baselines store their two per-direction decision statistics there instead
/// (variances, cross-fitted MSEs, or residual HSIC values) with `votes` and
/// `timesteps` zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionVerdict {
    pub verdict: Direction,
    pub rule: DecisionRule,
    /// Number of timesteps with `MI_A,t < MI_B,t`.
    pub votes: usize,
    pub timesteps: usize,
    pub mean_mi_a: f64,
    pub mean_mi_b: f64,
    /// Set when the comparison landed exactly on the decision boundary; the tie
    /// goes to `a -> b`.
    pub tie: bool,
    /// Confidence proxy: the vote fraction `v/T` for the voting rule, otherwise
    /// the absolute gap between the compared statistics.
    pub margin: f64,
}

/// Everything needed to run the BiDD decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiddConfig {
    pub denoiser: DenoiserConfig,
    pub train: TrainSpec,
    pub estimator: EstimatorKind,
    pub rule: DecisionRule,
    pub policy: SplitPolicy,
    pub train_fraction: f64,
    /// Evaluation oversampling factor: each row is noised this many times.
    pub oversample: usize,
}

impl BiddConfig {
    /// Published configuration: full-size model, 4000 epochs, oversample 10.
    pub fn paper() -> Self {
        BiddConfig {
            denoiser: DenoiserConfig::paper(),
            train: TrainSpec::paper(),
            estimator: EstimatorKind::Hsic(HsicConfig::default()),
            rule: DecisionRule::Voting,
            policy: SplitPolicy::Total,
            train_fraction: 0.8,
            oversample: 10,
        }
    }

    /// CPU-budget configuration: width-128 model, 1500 epochs, oversample 2.
    pub fn desk() -> Self {
        BiddConfig {
            denoiser: DenoiserConfig::desk(),
            train: TrainSpec::desk(),
            oversample: 2,
            ..BiddConfig::paper()
        }
    }

    fn validate(&self) -> Result<()> {
        self.denoiser.validate()?;
        self.train.validate()?;
        if !(0.0 < self.train_fraction && self.train_fraction < 1.0) {
            return Err(Error::Parameter(format!(
                "train fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.oversample == 0 {
            return Err(Error::Parameter("oversample factor must be >= 1".into()));
        }
        Ok(())
    }
}

/// The full result of one BiDD run.
#[derive(Debug, Clone)]
pub struct BiddOutcome {
    pub verdict: DirectionVerdict,
    pub profile_a: MIProfile,
    pub profile_b: MIProfile,
    pub trace_a: Vec<TracePoint>,
    pub trace_b: Vec<TracePoint>,
}

/// MI profile of one trained model over every timestep of the schedule.
///
/// Timesteps are evaluated independently (fresh noise per row, repeat, and
/// timestep, from split rng streams), so the loop runs in parallel while
/// remaining deterministic.
#[allow(clippy::too_many_arguments)]
pub fn mi_profile(
    model: &DenoiserModel,
    target: &[f64],
    cond: &[f64],
    schedule: &NoiseSchedule,
    estimator: &EstimatorKind,
    oversample: usize,
    rng: &Rng,
    denoised: Denoised,
) -> Result<MIProfile> {
    let values = mi_profiles_multi(
        model,
        target,
        cond,
        schedule,
        &[*estimator],
        oversample,
        rng,
    )?
    .pop()
    .expect("one estimator in, one profile out");
    Ok(MIProfile { denoised, values })
}

/// Per-timestep dependence values for several estimators sharing one set of
/// noise predictions. Returns one value vector per estimator.
pub fn mi_profiles_multi(
    model: &DenoiserModel,
    target: &[f64],
    cond: &[f64],
    schedule: &NoiseSchedule,
    estimators: &[EstimatorKind],
    oversample: usize,
    rng: &Rng,
) -> Result<Vec<Vec<f64>>> {
    if estimators.is_empty() {
        return Err(Error::Parameter("no estimators given".into()));
    }
    let repeated: Vec<f64> = cond
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c, oversample))
        .collect();
    let prepared = estimators
        .iter()
        .map(|e| e.prepare(&repeated))
        .collect::<Result<Vec<_>>>()?;

    let t_steps = schedule.len();
    let per_t: Vec<Vec<f64>> = (1..=t_steps)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let mut t_rng = rng.split(t as u64);
            let out = predict_noise(model, target, cond, t, schedule, &mut t_rng, oversample)?;
            estimators
                .iter()
                .zip(&prepared)
                .map(|(est, prep)| {
                    est.measure_prepared(&out.eps_hat, prep).map_err(|e| {
                        Error::Parameter(format!("estimator failed at timestep {t}: {e}"))
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut profiles = vec![Vec::with_capacity(t_steps); estimators.len()];
    for row in per_t {
        for (p, v) in profiles.iter_mut().zip(row) {
            p.push(v);
        }
    }
    Ok(profiles)
}

/// Apply the voting or mean rule to a pair of profiles.
pub fn compare_profiles(
    mi_a: &MIProfile,
    mi_b: &MIProfile,
    rule: DecisionRule,
) -> Result<DirectionVerdict> {
    if mi_a.values.len() != mi_b.values.len() {
        return Err(Error::Parameter(format!(
            "profile lengths differ: {} vs {}",
            mi_a.values.len(),
            mi_b.values.len()
        )));
    }
    if mi_a.values.is_empty() {
        return Err(Error::Parameter("empty profiles".into()));
    }
    let t_steps = mi_a.values.len();
    let votes = mi_a
        .values
        .iter()
        .zip(&mi_b.values)
        .filter(|(a, b)| a < b)
        .count();
    let mean_a = mi_a.mean();
    let mean_b = mi_b.mean();

    let (verdict, tie, margin) = match rule {
        DecisionRule::Voting => {
            let verdict = if 2 * votes > t_steps {
                Direction::BtoA
            } else {
                Direction::AtoB
            };
            (verdict, 2 * votes == t_steps, votes as f64 / t_steps as f64)
        }
        DecisionRule::Mean => {
            let verdict = if mean_a < mean_b {
                Direction::BtoA
            } else {
                Direction::AtoB
            };
            (verdict, mean_a == mean_b, (mean_a - mean_b).abs())
        }
    };
    Ok(DirectionVerdict {
        verdict,
        rule,
        votes,
        timesteps: t_steps,
        mean_mi_a: mean_a,
        mean_mi_b: mean_b,
        tie,
        margin,
    })
}

/// CSV export of a profile pair: `t,mi_a,mi_b`.
pub fn profiles_csv(mi_a: &MIProfile, mi_b: &MIProfile) -> Result<String> {
    if mi_a.values.len() != mi_b.values.len() {
        return Err(Error::Parameter("profile lengths differ".into()));
    }
    let mut out = String::from("t,mi_a,mi_b\n");
    for (t, (a, b)) in mi_a.values.iter().zip(&mi_b.values).enumerate() {
        out.push_str(&format!("{},{a:.17e},{b:.17e}\n", t + 1));
    }
    Ok(out)
}

/// Minimum rows for the learned and regression-based deciders.
pub const MIN_DECISION_ROWS: usize = 50;

/// Run the full BiDD decision: train one conditional denoiser per direction,
/// build both MI profiles under the split policy, and compare.
///
/// Both trainings and both evaluation passes consume identical derived rng
/// streams, so running the same seed on column-swapped data exchanges the two
/// profiles exactly.
pub fn bidd_decide(data: &PairDataset, cfg: &BiddConfig, rng: &Rng) -> Result<BiddOutcome> {
    let (mut profiles, trace_a, trace_b) = bidd_profiles(data, cfg, &[cfg.estimator], rng)?;
    let (profile_a, profile_b) = profiles.pop().expect("one estimator in, one pair out");
    let verdict = compare_profiles(&profile_a, &profile_b, cfg.rule)?;
    Ok(BiddOutcome {
        verdict,
        profile_a,
        profile_b,
        trace_a,
        trace_b,
    })
}

/// Train both direction models once and return profile pairs for every
/// estimator in `estimators`. Backbone of `bidd_decide` and of the estimator
/// ablation, which would otherwise retrain per estimator.
#[allow(clippy::type_complexity)]
pub fn bidd_profiles(
    data: &PairDataset,
    cfg: &BiddConfig,
    estimators: &[EstimatorKind],
    rng: &Rng,
) -> Result<(
    Vec<(MIProfile, MIProfile)>,
    Vec<TracePoint>,
    Vec<TracePoint>,
)> {
    cfg.validate()?;
    let n = data.len();
    if n < MIN_DECISION_ROWS {
        return Err(Error::Parameter(format!(
            "BiDD needs at least {MIN_DECISION_ROWS} rows for meaningful estimation, got {n}"
        )));
    }
    let mut data = data.clone();
    data.standardize()?;
    let schedule = make_schedule(&cfg.train)?;

    // shared split: identical row selection for both directions
    let mut idx: Vec<usize> = (0..n).collect();
    let mut split_rng = rng.split(0);
    split_rng.shuffle(&mut idx);
    let n_train = ((n as f64 * cfg.train_fraction).round() as usize).clamp(2, n - 1);
    let mut train_idx: Vec<usize> = idx[..n_train].to_vec();
    train_idx.sort_unstable();
    let mut eval_idx: Vec<usize> = match cfg.policy {
        SplitPolicy::Test => idx[n_train..].to_vec(),
        SplitPolicy::Total => (0..n).collect(),
    };
    eval_idx.sort_unstable();
    if eval_idx.len() < 4 {
        return Err(Error::Parameter(
            "held-out split too small for estimation".into(),
        ));
    }

    let gather = |src: &[f64], idx: &[usize]| idx.iter().map(|&i| src[i]).collect::<Vec<f64>>();
    let (train_a, train_b) = (gather(&data.a, &train_idx), gather(&data.b, &train_idx));
    let (eval_a, eval_b) = (gather(&data.a, &eval_idx), gather(&data.b, &eval_idx));

    // both directions draw from the same derived streams: swapping the columns
    // swaps the roles of the two models exactly
    let train_rng = rng.split(1);
    let (res_a, res_b) = rayon::join(
        || {
            train_conditional(
                &train_a,
                &train_b,
                &cfg.denoiser,
                &cfg.train,
                &mut train_rng.clone(),
            )
        },
        || {
            train_conditional(
                &train_b,
                &train_a,
                &cfg.denoiser,
                &cfg.train,
                &mut train_rng.clone(),
            )
        },
    );
    let (trained_a, trained_b) = (res_a?, res_b?);

    let eval_rng = rng.split(2);
    let values_a = mi_profiles_multi(
        &trained_a.model,
        &eval_a,
        &eval_b,
        &schedule,
        estimators,
        cfg.oversample,
        &eval_rng,
    )?;
    let values_b = mi_profiles_multi(
        &trained_b.model,
        &eval_b,
        &eval_a,
        &schedule,
        estimators,
        cfg.oversample,
        &eval_rng,
    )?;

    let pairs = values_a
        .into_iter()
        .zip(values_b)
        .map(|(va, vb)| {
            (
                MIProfile {
                    denoised: Denoised::A,
                    values: va,
                },
                MIProfile {
                    denoised: Denoised::B,
                    values: vb,
                },
            )
        })
        .collect();
    Ok((pairs, trained_a.loss_trace, trained_b.loss_trace))
}

/// Variance-sorting heuristic: the lower-variance column is declared the cause.
/// Refuses standardized input, where the artifact it exploits is destroyed.
pub fn baseline_var_sort(data: &PairDataset) -> Result<DirectionVerdict> {
    let va = variance(&data.a);
    let vb = variance(&data.b);
    if data.standardized || ((va - 1.0).abs() < 1e-9 && (vb - 1.0).abs() < 1e-9) {
        return Err(Error::Parameter(
            "var-sort requires unstandardized data (marginal variances carry the signal)".into(),
        ));
    }
    let (verdict, tie) = if va == vb {
        (Direction::AtoB, true)
    } else if va < vb {
        (Direction::AtoB, false)
    } else {
        (Direction::BtoA, false)
    };
    Ok(DirectionVerdict {
        verdict,
        rule: DecisionRule::Mean,
        votes: 0,
        timesteps: 0,
        mean_mi_a: va,
        mean_mi_b: vb,
        tie,
        margin: (va - vb).abs(),
    })
}

const BASELINE_FOLDS: usize = 5;
const MSE_TIE_TOLERANCE: f64 = 1e-12;

/// MSE-minimisation baseline: cross-fitted Nadaraya-Watson regression each way;
/// the direction with the lower out-of-fold MSE wins.
pub fn baseline_mse_min(data: &PairDataset) -> Result<DirectionVerdict> {
    check_baseline_rows(data)?;
    let loss_ab = crossfit_mse(&data.a, &data.b, BASELINE_FOLDS)?;
    let loss_ba = crossfit_mse(&data.b, &data.a, BASELINE_FOLDS)?;
    let tie = (loss_ab - loss_ba).abs() <= MSE_TIE_TOLERANCE;
    let verdict = if tie || loss_ab < loss_ba {
        Direction::AtoB
    } else {
        Direction::BtoA
    };
    Ok(DirectionVerdict {
        verdict,
        rule: DecisionRule::Mean,
        votes: 0,
        timesteps: 0,
        mean_mi_a: loss_ab,
        mean_mi_b: loss_ba,
        tie,
        margin: (loss_ab - loss_ba).abs(),
    })
}

/// Residual-independence baseline (dependence-comparison variant): cross-fitted
/// residuals each way; the direction whose residual has the smaller HSIC with
/// its regressor wins.
pub fn baseline_resid_indep(data: &PairDataset) -> Result<DirectionVerdict> {
    check_baseline_rows(data)?;
    let hsic_cfg = HsicConfig::default();
    let resid_ab = crossfit_residuals(&data.a, &data.b, BASELINE_FOLDS)?;
    let resid_ba = crossfit_residuals(&data.b, &data.a, BASELINE_FOLDS)?;
    let dep_ab = hsic(&resid_ab, &data.a, &hsic_cfg)?;
    let dep_ba = hsic(&resid_ba, &data.b, &hsic_cfg)?;
    let tie = dep_ab == dep_ba;
    let verdict = if dep_ab <= dep_ba {
        Direction::AtoB
    } else {
        Direction::BtoA
    };
    Ok(DirectionVerdict {
        verdict,
        rule: DecisionRule::Mean,
        votes: 0,
        timesteps: 0,
        mean_mi_a: dep_ab,
        mean_mi_b: dep_ba,
        tie,
        margin: (dep_ab - dep_ba).abs(),
    })
}

fn check_baseline_rows(data: &PairDataset) -> Result<()> {
    if data.len() < MIN_DECISION_ROWS {
        return Err(Error::Parameter(format!(
            "baseline needs at least {MIN_DECISION_ROWS} rows, got {}",
            data.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::make_schedule;

    fn profile(denoised: Denoised, values: Vec<f64>) -> MIProfile {
        MIProfile { denoised, values }
    }

    #[test]
    fn voting_counts_strict_wins() {
        let a = profile(Denoised::A, vec![1.0, 2.0, 3.0]);
        let b = profile(Denoised::B, vec![2.0, 3.0, 1.0]);
        let v = compare_profiles(&a, &b, DecisionRule::Voting).unwrap();
        assert_eq!(v.votes, 2);
        assert_eq!(v.verdict, Direction::BtoA);
        assert!(!v.tie);
    }

    #[test]
    fn elementwise_equal_profiles_go_to_a() {
        let a = profile(Denoised::A, vec![0.4, 0.4, 0.4]);
        let b = profile(Denoised::B, vec![0.4, 0.4, 0.4]);
        for rule in [DecisionRule::Voting, DecisionRule::Mean] {
            let v = compare_profiles(&a, &b, rule).unwrap();
            assert_eq!(v.verdict, Direction::AtoB);
            assert_eq!(v.votes, 0);
        }
    }

    #[test]
    fn voting_boundary_is_a_tie() {
        let a = profile(Denoised::A, vec![0.0, 1.0]);
        let b = profile(Denoised::B, vec![1.0, 0.0]);
        let v = compare_profiles(&a, &b, DecisionRule::Voting).unwrap();
        assert_eq!(v.votes, 1);
        assert_eq!(v.verdict, Direction::AtoB);
        assert!(v.tie);
    }

    #[test]
    fn mean_rule_compares_means() {
        let a = profile(Denoised::A, vec![0.1, 0.9]);
        let b = profile(Denoised::B, vec![0.4, 0.4]);
        let v = compare_profiles(&a, &b, DecisionRule::Mean).unwrap();
        // means 0.5 vs 0.4
        assert_eq!(v.verdict, Direction::AtoB);
        assert!((v.mean_mi_a - 0.5).abs() < 1e-15);
        assert!((v.mean_mi_b - 0.4).abs() < 1e-15);
    }

    #[test]
    fn compare_rejects_length_mismatch() {
        let a = profile(Denoised::A, vec![0.1]);
        let b = profile(Denoised::B, vec![0.1, 0.2]);
        assert!(compare_profiles(&a, &b, DecisionRule::Voting).is_err());
    }

    #[test]
    fn voting_invariant_under_monotone_transforms() {
        let mut rng = Rng::new(31);
        for _ in 0..50 {
            let t = 9;
            let va: Vec<f64> = (0..t).map(|_| rng.uniform_01()).collect();
            let vb: Vec<f64> = (0..t).map(|_| rng.uniform_01()).collect();
            let base = compare_profiles(
                &profile(Denoised::A, va.clone()),
                &profile(Denoised::B, vb.clone()),
                DecisionRule::Voting,
            )
            .unwrap();
            // strictly increasing map applied to all values at each timestep
            let f = |x: f64| (3.0 * x).exp() + 0.5 * x;
            let ta: Vec<f64> = va.iter().map(|&x| f(x)).collect();
            let tb: Vec<f64> = vb.iter().map(|&x| f(x)).collect();
            let mapped = compare_profiles(
                &profile(Denoised::A, ta),
                &profile(Denoised::B, tb),
                DecisionRule::Voting,
            )
            .unwrap();
            assert_eq!(base.verdict, mapped.verdict);
            assert_eq!(base.votes, mapped.votes);
        }
    }

    #[test]
    fn zero_model_profile_is_zero_under_hsic() {
        let spec = TrainSpec {
            timesteps: 4,
            ..TrainSpec::paper()
        };
        let schedule = make_schedule(&spec).unwrap();
        let config = DenoiserConfig {
            width: 8,
            cond_widths: [3, 4, 2],
            time_embed_dim: 4,
            n_res_blocks: 1,
            res_expand: 2,
            t_max: 4,
            conditional: true,
        };
        let model = DenoiserModel::zeros(config).unwrap();
        let mut rng = Rng::new(2);
        let target = rng.standard_normal_vec(30);
        let cond = rng.standard_normal_vec(30);
        let est = EstimatorKind::Hsic(HsicConfig::default());
        let p = mi_profile(
            &model,
            &target,
            &cond,
            &schedule,
            &est,
            2,
            &rng,
            Denoised::A,
        )
        .unwrap();
        assert_eq!(p.values.len(), 4);
        assert!(p.values.iter().all(|&v| v == 0.0));

        // single-timestep schedule gives a single-entry profile
        let spec1 = TrainSpec {
            timesteps: 1,
            ..TrainSpec::paper()
        };
        let schedule1 = make_schedule(&spec1).unwrap();
        let config1 = DenoiserConfig {
            width: 8,
            cond_widths: [3, 4, 2],
            time_embed_dim: 4,
            n_res_blocks: 1,
            res_expand: 2,
            t_max: 1,
            conditional: true,
        };
        let model1 = DenoiserModel::zeros(config1).unwrap();
        let p1 = mi_profile(
            &model1,
            &target,
            &cond,
            &schedule1,
            &est,
            1,
            &rng,
            Denoised::B,
        )
        .unwrap();
        assert_eq!(p1.values.len(), 1);
    }

    #[test]
    fn mi_profile_is_deterministic() {
        let spec = TrainSpec {
            timesteps: 6,
            ..TrainSpec::paper()
        };
        let schedule = make_schedule(&spec).unwrap();
        let config = DenoiserConfig {
            width: 8,
            cond_widths: [3, 4, 2],
            time_embed_dim: 4,
            n_res_blocks: 1,
            res_expand: 2,
            t_max: 6,
            conditional: true,
        };
        let mut init_rng = Rng::new(8);
        let model = DenoiserModel::init(config, &mut init_rng).unwrap();
        let mut rng = Rng::new(3);
        let target = rng.standard_normal_vec(40);
        let cond = rng.standard_normal_vec(40);
        let est = EstimatorKind::Hsic(HsicConfig::default());
        let p1 = mi_profile(
            &model,
            &target,
            &cond,
            &schedule,
            &est,
            3,
            &Rng::new(9),
            Denoised::A,
        )
        .unwrap();
        let p2 = mi_profile(
            &model,
            &target,
            &cond,
            &schedule,
            &est,
            3,
            &Rng::new(9),
            Denoised::A,
        )
        .unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn var_sort_rule_and_refusal() {
        let mut rng = Rng::new(4);
        let a = rng.standard_normal_vec(100);
        let b: Vec<f64> = a.iter().map(|x| x * 2.0).collect();
        let mut data = PairDataset::new(a.clone(), b, None).unwrap();
        let v = baseline_var_sort(&data).unwrap();
        assert_eq!(v.verdict, Direction::AtoB); // var(a) < var(b)
        assert!(!v.tie);

        let swapped = data.swapped();
        assert_eq!(
            baseline_var_sort(&swapped).unwrap().verdict,
            Direction::BtoA
        );

        // equal variances: tie, goes to a -> b
        let twin = PairDataset::new(a.clone(), a.clone(), None).unwrap();
        let v = baseline_var_sort(&twin).unwrap();
        assert!(v.tie);
        assert_eq!(v.verdict, Direction::AtoB);

        data.standardize().unwrap();
        assert!(baseline_var_sort(&data).is_err());
    }

    #[test]
    fn mse_min_prefers_low_noise_direction() {
        // b = a^2 + small noise: predicting b from a is easy, while a given b
        // stays bimodal, so the backward conditional variance is far larger
        let mut rng = Rng::new(6);
        let a = rng.standard_normal_vec(400);
        let b: Vec<f64> = a
            .iter()
            .map(|x| x * x + 0.3 * rng.standard_normal())
            .collect();
        let data = PairDataset::new(a, b, None).unwrap();
        let v = baseline_mse_min(&data).unwrap();
        assert_eq!(v.verdict, Direction::AtoB);
        assert!(v.mean_mi_a < v.mean_mi_b);
    }

    #[test]
    fn mse_min_tie_goes_to_a() {
        let mut rng = Rng::new(7);
        let a = rng.standard_normal_vec(100);
        let data = PairDataset::new(a.clone(), a.clone(), None).unwrap();
        let v = baseline_mse_min(&data).unwrap();
        assert!(v.tie);
        assert_eq!(v.verdict, Direction::AtoB);
    }

    #[test]
    fn baselines_reject_small_samples() {
        let a = vec![0.0, 1.0, 2.0, 3.0];
        let data = PairDataset::new(a.clone(), a, None).unwrap();
        assert!(baseline_mse_min(&data).is_err());
        assert!(baseline_resid_indep(&data).is_err());
    }

    #[test]
    fn profiles_csv_format() {
        let a = profile(Denoised::A, vec![0.5, 0.25]);
        let b = profile(Denoised::B, vec![0.75, 0.125]);
        let csv = profiles_csv(&a, &b).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,mi_a,mi_b"));
        assert!(lines.next().unwrap().starts_with("1,5.0"));
    }
}
