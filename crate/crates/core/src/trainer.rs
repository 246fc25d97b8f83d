//! Likelihood-ratio policy-gradient training.
//!
//! Each iteration samples `m` rollouts from the current policy and ascends
//!
//! ```text
//! g = 1/m sum_i sum_t grad log pi(a_t | s_t) * (sum_{j > t} gamma^j r_j - b_t)
//! ```
//!
//! where `r_j` is indexed as in [`Trajectory`]: `r_0` is the reset scan and
//! action `t` earns `r_{t+1}`. Discounting uses absolute time. The baseline
//! `b_t` is chosen by [`BaselineKind`].

use alloc::vec;
use alloc::vec::Vec;

use crate::env::{rollout_with, EnvConfig, RolloutMode, Trajectory};
use crate::error::{Error, Result};
use crate::math;
use crate::policy::Policy;
use crate::probmap::{generate_map, random_mixture, GridSpec, ProbabilityMap};
use crate::rng::{rng_from_seed, split_seed, stream};

#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    /// Train on one map throughout.
    Fixed(ProbabilityMap),
    /// Draw a fresh random mixture map every iteration.
    RandomMixture { spec: GridSpec, components: usize },
}

/// Baseline subtracted from the reward-to-go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BaselineKind {
    /// The batch's mean discounted return, the same for every step.
    #[default]
    MeanReturn,
    /// The batch's mean reward-to-go at each step index. Tracks the
    /// `gamma^t` decay of the reward-to-go, which a constant cannot.
    PerStep,
    /// No baseline.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Rollouts per iteration (`m`).
    pub rollouts: usize,
    pub learning_rate: f64,
    pub env: EnvConfig,
    pub map_source: MapSource,
    pub seed: u64,
    pub baseline: BaselineKind,
    /// Keep a copy of theta every this many iterations (0 = never).
    pub snapshot_every: usize,
}

impl TrainConfig {
    pub const DEFAULT_ROLLOUTS: usize = 20;
    pub const DEFAULT_ITERATIONS: usize = 1500;
    pub const DEFAULT_LEARNING_RATE: f64 = 3.0e4;

    pub fn new(map_source: MapSource) -> Self {
        TrainConfig {
            iterations: Self::DEFAULT_ITERATIONS,
            rollouts: Self::DEFAULT_ROLLOUTS,
            learning_rate: Self::DEFAULT_LEARNING_RATE,
            env: EnvConfig::default(),
            map_source,
            seed: 0,
            baseline: BaselineKind::default(),
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if self.rollouts < 1 {
            return Err(Error::InvalidConfig("need at least one rollout per iteration"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning rate must be positive"));
        }
        if let MapSource::RandomMixture { components, .. } = self.map_source {
            if components < 1 {
                return Err(Error::InvalidComponentCount(components));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mean_total_reward: f64,
    pub mean_discounted_return: f64,
    /// Baseline at the first action.
    pub baseline: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<IterationRecord>,
    /// `(iteration, theta before that iteration's update)`.
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

impl TrainLog {
    /// Mean of `mean_discounted_return` over records `range`.
    pub fn mean_return(&self, range: core::ops::Range<usize>) -> f64 {
        let slice = &self.records[range];
        slice.iter().map(|r| r.mean_discounted_return).sum::<f64>() / slice.len() as f64
    }
}

/// Mean discounted return of the batch.
pub fn compute_baseline(trajectories: &[Trajectory], gamma: f64) -> Result<f64> {
    if trajectories.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let total: f64 = trajectories.iter().map(|t| t.discounted_return(gamma)).sum();
    Ok(total / trajectories.len() as f64)
}

/// Mean over the batch of the discounted reward-to-go after each action:
/// `b[t] = 1/m sum_i sum_{j > t} gamma^j r_j`. Shorter trajectories count
/// as zero past their end.
pub fn compute_step_baselines(trajectories: &[Trajectory], gamma: f64) -> Result<Vec<f64>> {
    if trajectories.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let longest = trajectories.iter().map(Trajectory::steps).max().unwrap_or(0);
    let mut b = vec![0.0; longest];
    let mut to_go = Vec::new();
    for traj in trajectories {
        discounted_to_go(&traj.rewards, gamma, &mut to_go);
        for (t, slot) in b.iter_mut().enumerate().take(traj.steps()) {
            *slot += to_go[t + 1];
        }
    }
    let m = trajectories.len() as f64;
    b.iter_mut().for_each(|x| *x /= m);
    Ok(b)
}

/// Likelihood-ratio gradient with discounted reward-to-go and a scalar
/// baseline.
pub fn estimate_gradient(
    trajectories: &[Trajectory],
    policy: &Policy,
    gamma: f64,
    baseline: f64,
) -> Result<Vec<f64>> {
    gradient_with(trajectories, policy, gamma, |_| baseline)
}

/// As [`estimate_gradient`] with baseline `baselines[t]` for action `t`
/// (zero past the end).
pub fn estimate_gradient_per_step(
    trajectories: &[Trajectory],
    policy: &Policy,
    gamma: f64,
    baselines: &[f64],
) -> Result<Vec<f64>> {
    gradient_with(trajectories, policy, gamma, |t| baselines.get(t).copied().unwrap_or(0.0))
}

fn gradient_with(
    trajectories: &[Trajectory],
    policy: &Policy,
    gamma: f64,
    baseline: impl Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    if trajectories.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut grad = vec![0.0; policy.theta().len()];
    let mut to_go = Vec::new();
    for traj in trajectories {
        discounted_to_go(&traj.rewards, gamma, &mut to_go);
        for t in 0..traj.steps() {
            // rewards earned by action t onwards
            let weight = to_go[t + 1] - baseline(t);
            policy.add_scaled_score(&traj.features[t], traj.actions[t], traj.legal[t], weight, &mut grad)?;
        }
    }
    let m = trajectories.len() as f64;
    for g in &mut grad {
        *g /= m;
    }
    Ok(grad)
}

/// `out[j] = sum_{i >= j} gamma^i rewards[i]`, with a trailing zero.
pub(crate) fn discounted_to_go(rewards: &[f64], gamma: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(rewards.len() + 1, 0.0);
    let mut discount = 1.0;
    let mut discounted = Vec::with_capacity(rewards.len());
    for r in rewards {
        discounted.push(discount * r);
        discount *= gamma;
    }
    for j in (0..rewards.len()).rev() {
        out[j] = out[j + 1] + discounted[j];
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum())
}

/// Seed of rollout `r` in iteration `it` under root seed `seed`.
pub fn rollout_seed(seed: u64, iteration: usize, r: usize) -> u64 {
    split_seed(split_seed(split_seed(seed, stream::ROLLOUT), iteration as u64), r as u64)
}

/// Map used at iteration `it`.
pub fn training_map(source: &MapSource, seed: u64, iteration: usize) -> Result<ProbabilityMap> {
    match source {
        MapSource::Fixed(map) => Ok(map.clone()),
        MapSource::RandomMixture { spec, components } => {
            let s = split_seed(split_seed(seed, stream::MAP), iteration as u64);
            generate_map(&random_mixture(*components, *spec, s)?, *spec)
        }
    }
}

/// Samples `m` rollouts from `policy` for one iteration.
pub fn sample_batch(
    map: &ProbabilityMap,
    policy: &Policy,
    config: &TrainConfig,
    iteration: usize,
) -> Result<Vec<Trajectory>> {
    (0..config.rollouts)
        .map(|r| {
            let mut rng = rng_from_seed(rollout_seed(config.seed, iteration, r));
            rollout_with(map, policy, &config.env, RolloutMode::Sample, &mut rng)
        })
        .collect()
}

/// Runs `config.iterations` gradient-ascent steps from `policy`.
pub fn train(mut policy: Policy, config: &TrainConfig) -> Result<(Policy, TrainLog)> {
    config.validate()?;
    let mut log = TrainLog::default();
    let fixed_map = match &config.map_source {
        MapSource::Fixed(map) => {
            policy.design().check_compatible(map.spec())?;
            Some(map)
        }
        MapSource::RandomMixture { spec, .. } => {
            policy.design().check_compatible(*spec)?;
            None
        }
    };
    for it in 0..config.iterations {
        let generated;
        let map = match fixed_map {
            Some(map) => map,
            None => {
                generated = training_map(&config.map_source, config.seed, it)?;
                &generated
            }
        };
        let batch = sample_batch(map, &policy, config, it)?;
        let gamma = config.env.gamma;
        let mean_return = compute_baseline(&batch, gamma)?;
        let (grad, baseline) = match config.baseline {
            BaselineKind::MeanReturn => (estimate_gradient(&batch, &policy, gamma, mean_return)?, mean_return),
            BaselineKind::PerStep => {
                let b = compute_step_baselines(&batch, gamma)?;
                (estimate_gradient_per_step(&batch, &policy, gamma, &b)?, b.first().copied().unwrap_or(0.0))
            }
            BaselineKind::Zero => (estimate_gradient(&batch, &policy, gamma, 0.0)?, 0.0),
        };
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { iteration: it });
        }
        if config.snapshot_every > 0 && it % config.snapshot_every == 0 {
            log.snapshots.push((it, policy.theta().to_vec()));
        }
        for (t, g) in policy.theta_mut().iter_mut().zip(&grad) {
            *t += config.learning_rate * g;
        }
        if policy.theta().iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite { iteration: it });
        }
        let m = batch.len() as f64;
        log.records.push(IterationRecord {
            iteration: it,
            mean_total_reward: batch.iter().map(|t| t.total_reward()).sum::<f64>() / m,
            mean_discounted_return: mean_return,
            baseline,
            grad_norm: l2_norm(&grad),
        });
    }
    Ok((policy, log))
}
