//! Method comparison and empirical checks of the proxy-reward propositions.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::baselines::{boustrophedon_path, execute_cells, spiral_path};
use crate::env::{argmax_path, rollout_with, EnvConfig, RolloutMode, SearchState, StartCell, Trajectory};
use crate::error::{Error, Result};
use crate::features::extract_state_features;
use crate::math;
use crate::policy::Policy;
use crate::probmap::{Cell, GridSpec, ProbabilityMap};
use crate::rng::{rng_from_seed, split_seed, stream};

/// Default spiral re-targeting threshold.
pub const DEFAULT_SPIRAL_THRESHOLD: f64 = 0.05;
/// Most action sequences the exact checkers will walk.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;
/// Fewest batches accepted by the variance check.
pub const MIN_PROP2_BATCHES: usize = 30;

const Z_ONE_SIDED_95: f64 = 1.6448536269514722;

#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    /// Argmax rollout of a trained policy.
    Policy(&'a Policy),
    Boustrophedon,
    Spiral { threshold: f64 },
}

impl Method<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Policy(_) => "policy",
            Method::Boustrophedon => "boustrophedon",
            Method::Spiral { .. } => "spiral",
        }
    }
}

/// Per-step series of one method. All series have `horizon + 1` entries,
/// index 0 being the start scan; a path that ends early is padded with
/// zero rewards.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MethodSeries {
    pub method: String,
    pub cells: Vec<Cell>,
    pub rewards: Vec<f64>,
    pub cumulative_total: Vec<f64>,
    pub cumulative_discounted: Vec<f64>,
    pub remaining: Vec<f64>,
}

impl MethodSeries {
    pub fn final_total(&self) -> f64 {
        self.cumulative_total.last().copied().unwrap_or(0.0)
    }

    pub fn final_discounted(&self) -> f64 {
        self.cumulative_discounted.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ComparisonReport {
    pub start: Cell,
    pub horizon: usize,
    pub gamma: f64,
    pub initial_mass: f64,
    pub methods: Vec<MethodSeries>,
}

impl ComparisonReport {
    /// Largest `|collected + remaining - initial|` over all methods and steps.
    pub fn max_conservation_error(&self) -> f64 {
        self.methods
            .iter()
            .flat_map(|m| m.cumulative_total.iter().zip(&m.remaining))
            .map(|(c, r)| (c + r - self.initial_mass).abs())
            .fold(0.0, f64::max)
    }

    pub fn get(&self, method: &str) -> Option<&MethodSeries> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Runs every method from `start` for `horizon` moves on private copies of
/// `map`.
pub fn compare_methods(
    map: &ProbabilityMap,
    methods: &[Method<'_>],
    start: Cell,
    horizon: usize,
    gamma: f64,
) -> Result<ComparisonReport> {
    map.spec().check_cell(start)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidConfig("gamma must lie in (0, 1]"));
    }
    let mut report = ComparisonReport {
        start,
        horizon,
        gamma,
        initial_mass: map.remaining_mass(),
        methods: Vec::with_capacity(methods.len()),
    };
    for method in methods {
        let cells = match method {
            Method::Policy(policy) => argmax_path(map, policy, start, horizon)?,
            Method::Boustrophedon => boustrophedon_path(map.spec(), start, horizon)?.into_cells(),
            Method::Spiral { threshold } => spiral_path(map, start, horizon, *threshold)?.into_cells(),
        };
        let outcome = execute_cells(map, &cells, gamma)?;
        let mut series = MethodSeries {
            method: method.name().into(),
            cells,
            rewards: outcome.rewards,
            cumulative_total: Vec::with_capacity(horizon + 1),
            cumulative_discounted: Vec::with_capacity(horizon + 1),
            remaining: outcome.remaining,
        };
        let last_remaining = series.remaining.last().copied().unwrap_or(report.initial_mass);
        series.rewards.resize(horizon + 1, 0.0);
        series.remaining.resize(horizon + 1, last_remaining);
        let (mut total, mut disc, mut discount) = (0.0, 0.0, 1.0);
        for r in &series.rewards {
            total += r;
            disc += discount * r;
            discount *= gamma;
            series.cumulative_total.push(total);
            series.cumulative_discounted.push(disc);
        }
        report.methods.push(series);
    }
    Ok(report)
}

/// Number of legal action sequences of length `horizon` the policy could
/// produce from `config.start` (all starts when random). Saturates.
pub fn count_action_sequences(spec: GridSpec, start: StartCell, horizon: usize) -> u128 {
    let n = spec.num_cells();
    let mut counts = vec![1u128; n];
    let mut next = vec![0u128; n];
    for _ in 0..horizon {
        for (i, slot) in next.iter_mut().enumerate() {
            let cell = spec.cell_at(i);
            let state_legal = crate::env::legal_actions_at(spec, cell);
            *slot = if state_legal.is_empty() {
                counts[i]
            } else {
                state_legal
                    .iter()
                    .map(|a| {
                        let (dx, dy) = a.delta();
                        let c = Cell::new((cell.x as i64 + dx) as usize, (cell.y as i64 + dy) as usize);
                        counts[spec.index(c)]
                    })
                    .fold(0u128, u128::saturating_add)
            };
        }
        core::mem::swap(&mut counts, &mut next);
    }
    match start {
        StartCell::Fixed(c) => counts[spec.index(c)],
        StartCell::Random => counts.iter().copied().fold(0, u128::saturating_add),
    }
}

/// Walks the full trajectory tree of `policy` on `map` and calls
/// `visit(probability, cells, rewards)` at every leaf with positive
/// probability. A random start weights each start cell by `1 / cells`.
pub fn enumerate_trajectories(
    map: &ProbabilityMap,
    policy: &Policy,
    config: &EnvConfig,
    mut visit: impl FnMut(f64, &[Cell], &[f64]),
) -> Result<u128> {
    config.validate()?;
    let spec = map.spec();
    policy.design().check_compatible(spec)?;
    if let StartCell::Fixed(c) = config.start {
        spec.check_cell(c)?;
    }
    let branches = count_action_sequences(spec, config.start, config.horizon);
    if branches > ENUMERATION_BUDGET {
        return Err(Error::EnumerationBudget { branches, budget: ENUMERATION_BUDGET });
    }
    let starts: Vec<Cell> = match config.start {
        StartCell::Fixed(c) => vec![c],
        StartCell::Random => spec.cells().collect(),
    };
    let weight = 1.0 / starts.len() as f64;
    let mut cells = Vec::with_capacity(config.horizon + 1);
    let mut rewards = Vec::with_capacity(config.horizon + 1);
    for start in starts {
        let mut m = map.clone();
        let r0 = m.clear(start);
        let state = SearchState::new(m, start)?;
        cells.push(start);
        rewards.push(r0);
        descend(policy, state, weight, config.horizon, &mut cells, &mut rewards, &mut visit)?;
        cells.clear();
        rewards.clear();
    }
    Ok(branches)
}

fn descend(
    policy: &Policy,
    state: SearchState,
    prob: f64,
    left: usize,
    cells: &mut Vec<Cell>,
    rewards: &mut Vec<f64>,
    visit: &mut impl FnMut(f64, &[Cell], &[f64]),
) -> Result<()> {
    let legal = state.legal_actions();
    if left == 0 || legal.is_empty() {
        visit(prob, cells, rewards);
        return Ok(());
    }
    let phi = extract_state_features(state.map(), state.pos(), policy.design());
    let dist = policy.action_probs(&phi, legal)?;
    for a in legal.iter() {
        let p = dist.prob(a);
        if p == 0.0 {
            continue;
        }
        let mut child = state.clone();
        let outcome = child.step(a)?;
        cells.push(outcome.cell);
        rewards.push(outcome.reward);
        descend(policy, child, prob * p, left - 1, cells, rewards, visit)?;
        cells.pop();
        rewards.pop();
    }
    Ok(())
}

/// Exact `E[sum_t gamma^t r_t]` by enumeration.
pub fn exact_expected_return(map: &ProbabilityMap, policy: &Policy, config: &EnvConfig) -> Result<f64> {
    let gamma = config.gamma;
    let mut total = 0.0;
    enumerate_trajectories(map, policy, config, |p, _, rewards| {
        total += p * crate::env::discounted_return(rewards, gamma);
    })?;
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CheckMode {
    /// Exact sums over the trajectory tree.
    Enumerate,
    /// Sample averages over seeded rollouts.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Extra numbers from the variance comparison.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VarianceDetail {
    pub batches: usize,
    pub batch_size: usize,
    /// Summed per-component variance of each estimator across batches.
    pub var_proxy: f64,
    pub var_indicator: f64,
    /// Indicator estimator integrated over the target location.
    pub var_integrated: f64,
    /// Standard error of `var_proxy - var_indicator`.
    pub var_diff_se: f64,
    /// One-sided 95% upper bound on `var_proxy - var_indicator`.
    pub var_diff_upper: f64,
    pub variance_ok: bool,
    /// Largest `|mean difference| / combined standard error` over components.
    pub max_mean_z: f64,
    pub means_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PropositionReport {
    pub proposition: u8,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_se: Option<f64>,
    pub rhs_se: Option<f64>,
    pub exact: bool,
    /// Largest `|lhs - rhs|` that passes.
    pub tolerance: f64,
    pub passed: bool,
    pub variance: Option<VarianceDetail>,
}

fn describe(map: &ProbabilityMap, config: &EnvConfig) -> String {
    let spec = map.spec();
    let start = match config.start {
        StartCell::Fixed(c) => format!("({},{})", c.x, c.y),
        StartCell::Random => "random".into(),
    };
    format!(
        "{}x{} grid, H={}, gamma={}, start={}, mass={:.6}",
        spec.width,
        spec.height,
        config.horizon,
        config.gamma,
        start,
        map.remaining_mass()
    )
}

/// First index at which each cell appears in `cells`.
fn first_visits(spec: GridSpec, cells: &[Cell]) -> Vec<Option<usize>> {
    let mut first = vec![None; spec.num_cells()];
    for (t, c) in cells.iter().enumerate() {
        let slot = &mut first[spec.index(*c)];
        if slot.is_none() {
            *slot = Some(t);
        }
    }
    first
}

/// Index of the cell holding a target drawn from `q`, read as a
/// sub-probability: with probability `1 - sum(q)` the target is off the grid.
fn sample_target<R: Rng + ?Sized>(q: &[f64], rng: &mut R) -> Option<usize> {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, v) in q.iter().enumerate() {
        acc += v;
        if u < acc {
            return Some(i);
        }
    }
    None
}

/// The map as a target distribution. Masses above one are rescaled; a
/// deficit is the chance the target is not on the grid.
fn target_distribution(map: &ProbabilityMap) -> Result<ProbabilityMap> {
    let mut m = map.clone();
    if m.remaining_mass() > 1.0 {
        m.normalize()?;
    }
    Ok(m)
}

/// Checks that the expected discounted proxy return equals the expected
/// `gamma^T` of finding a target drawn from the map, `T` the first-visit
/// time (no credit if never visited). A map with total mass `g < 1` places
/// the target off the grid with probability `1 - g`.
pub fn check_proposition1(
    map: &ProbabilityMap,
    policy: &Policy,
    config: &EnvConfig,
    mode: CheckMode,
) -> Result<PropositionReport> {
    check_proposition1_with_hook(map, policy, config, mode, &|_, r| r)
}

/// As [`check_proposition1`], with `hook(t, r)` applied to each proxy
/// reward before it is summed. Used as a negative control.
pub fn check_proposition1_with_hook(
    map: &ProbabilityMap,
    policy: &Policy,
    config: &EnvConfig,
    mode: CheckMode,
    hook: &dyn Fn(usize, f64) -> f64,
) -> Result<PropositionReport> {
    config.validate()?;
    let q0 = target_distribution(map)?;
    let spec = q0.spec();
    let gamma = config.gamma;
    let proxy = |rewards: &[f64]| -> f64 {
        let mut discount = 1.0;
        let mut total = 0.0;
        for (t, r) in rewards.iter().enumerate() {
            total += discount * hook(t, *r);
            discount *= gamma;
        }
        total
    };
    let mut report = PropositionReport {
        proposition: 1,
        instance: describe(&q0, config),
        lhs: 0.0,
        rhs: 0.0,
        lhs_se: None,
        rhs_se: None,
        exact: false,
        tolerance: 0.0,
        passed: false,
        variance: None,
    };
    match mode {
        CheckMode::Enumerate => {
            let (mut lhs, mut rhs) = (0.0, 0.0);
            enumerate_trajectories(&q0, policy, config, |p, cells, rewards| {
                lhs += p * proxy(rewards);
                let first = first_visits(spec, cells);
                let found: f64 = q0
                    .values()
                    .iter()
                    .zip(&first)
                    .filter_map(|(q, t)| t.map(|t| q * math::powi(gamma, t)))
                    .sum();
                rhs += p * found;
            })?;
            report.lhs = lhs;
            report.rhs = rhs;
            report.exact = true;
            report.tolerance = 1e-12;
        }
        CheckMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidConfig("Monte Carlo mode needs at least 2 samples"));
            }
            let (mut l, mut r) = (Vec::with_capacity(samples), Vec::with_capacity(samples));
            for i in 0..samples {
                let mut rng = rng_from_seed(split_seed(split_seed(seed, stream::ROLLOUT), i as u64));
                let traj = rollout_with(&q0, policy, config, RolloutMode::Sample, &mut rng)?;
                l.push(proxy(&traj.rewards));
                let mut trng = rng_from_seed(split_seed(split_seed(seed, stream::TARGET), i as u64));
                let found = sample_target(q0.values(), &mut trng)
                    .and_then(|y| traj.cells.iter().position(|c| *c == spec.cell_at(y)))
                    .map_or(0.0, |t| math::powi(gamma, t));
                r.push(found);
            }
            let (lm, lse) = mean_se(&l);
            let (rm, rse) = mean_se(&r);
            report.lhs = lm;
            report.rhs = rm;
            report.lhs_se = Some(lse);
            report.rhs_se = Some(rse);
            report.tolerance = 3.0 * math::sqrt(lse * lse + rse * rse);
        }
    }
    report.passed = (report.lhs - report.rhs).abs() <= report.tolerance;
    Ok(report)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, math::sqrt(var / n))
}

/// Gradient estimates of one trajectory in the form
/// `sum_j gamma^j r_j S_j`, `S_j` the summed scores of the actions taken
/// before step `j`: proxy rewards, one sampled target, and the target
/// integrated out.
#[allow(clippy::too_many_arguments)]
fn prop2_terms(
    traj: &Trajectory,
    policy: &Policy,
    q0: &ProbabilityMap,
    gamma: f64,
    target: Option<Cell>,
    proxy: &mut [f64],
    indicator: &mut [f64],
    integrated: &mut [f64],
) -> Result<()> {
    let spec = q0.spec();
    let mut score_sum = vec![0.0; policy.theta().len()];
    let mut seen = vec![false; spec.num_cells()];
    seen[spec.index(traj.cells[0])] = true;
    let mut discount = 1.0;
    for j in 1..traj.rewards.len() {
        let t = j - 1;
        policy.add_scaled_score(&traj.features[t], traj.actions[t], traj.legal[t], 1.0, &mut score_sum)?;
        discount *= gamma;
        let cell = traj.cells[j];
        let first = !core::mem::replace(&mut seen[spec.index(cell)], true);
        let r = traj.rewards[j];
        if r != 0.0 {
            axpy(discount * r, &score_sum, proxy);
        }
        if first {
            let q = q0.get(cell);
            if q != 0.0 {
                axpy(discount * q, &score_sum, integrated);
            }
            if target == Some(cell) {
                axpy(discount, &score_sum, indicator);
            }
        }
    }
    Ok(())
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Summed per-component sample variance across batches.
fn trace_variance(estimates: &[Vec<f64>], mean: &[f64]) -> f64 {
    let n = estimates.len() as f64;
    estimates
        .iter()
        .map(|g| g.iter().zip(mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>())
        .sum::<f64>()
        / (n - 1.0)
}

fn component_means(estimates: &[Vec<f64>]) -> Vec<f64> {
    let n = estimates.len() as f64;
    let mut mean = vec![0.0; estimates[0].len()];
    for g in estimates {
        axpy(1.0 / n, g, &mut mean);
    }
    mean
}

/// Compares the variance of the proxy-reward gradient estimator with the
/// estimator that rewards finding one sampled target, both computed from
/// the same trajectories. Passes when the proxy variance is lower at
/// one-sided 95% confidence and every gradient component's means agree
/// within three combined standard errors.
pub fn check_proposition2(
    map: &ProbabilityMap,
    policy: &Policy,
    config: &EnvConfig,
    batches: usize,
    batch_size: usize,
    seed: u64,
) -> Result<PropositionReport> {
    config.validate()?;
    if batches < MIN_PROP2_BATCHES {
        return Err(Error::InsufficientBatches { required: MIN_PROP2_BATCHES, found: batches });
    }
    if batch_size == 0 {
        return Err(Error::EmptyBatch);
    }
    let q0 = target_distribution(map)?;
    let spec = q0.spec();
    let dim = policy.theta().len();
    let mut proxy = Vec::with_capacity(batches);
    let mut indicator = Vec::with_capacity(batches);
    let mut integrated = Vec::with_capacity(batches);
    for b in 0..batches {
        let (mut gp, mut gi, mut gq) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
        let batch_seed = split_seed(split_seed(seed, stream::BATCH), b as u64);
        for i in 0..batch_size {
            let mut rng = rng_from_seed(split_seed(split_seed(batch_seed, stream::ROLLOUT), i as u64));
            let traj = rollout_with(&q0, policy, config, RolloutMode::Sample, &mut rng)?;
            let mut trng = rng_from_seed(split_seed(split_seed(batch_seed, stream::TARGET), i as u64));
            let target = sample_target(q0.values(), &mut trng).map(|y| spec.cell_at(y));
            prop2_terms(&traj, policy, &q0, config.gamma, target, &mut gp, &mut gi, &mut gq)?;
        }
        let inv = 1.0 / batch_size as f64;
        for g in [&mut gp, &mut gi, &mut gq] {
            g.iter_mut().for_each(|x| *x *= inv);
        }
        proxy.push(gp);
        indicator.push(gi);
        integrated.push(gq);
    }
    let (mp, mi, mq) = (component_means(&proxy), component_means(&indicator), component_means(&integrated));
    let var_proxy = trace_variance(&proxy, &mp);
    let var_indicator = trace_variance(&indicator, &mi);
    let var_integrated = trace_variance(&integrated, &mq);

    // per-batch contributions whose mean is exactly var_proxy - var_indicator
    let n = batches as f64;
    let diffs: Vec<f64> = proxy
        .iter()
        .zip(&indicator)
        .map(|(gp, gi)| {
            let sp: f64 = gp.iter().zip(&mp).map(|(x, m)| (x - m) * (x - m)).sum();
            let si: f64 = gi.iter().zip(&mi).map(|(x, m)| (x - m) * (x - m)).sum();
            n / (n - 1.0) * (sp - si)
        })
        .collect();
    let (diff_mean, diff_se) = mean_se(&diffs);
    let var_diff_upper = diff_mean + Z_ONE_SIDED_95 * diff_se;
    let variance_ok = var_diff_upper <= 0.0;

    let mut max_mean_z: f64 = 0.0;
    let mut means_ok = true;
    for c in 0..dim {
        let sp = math::sqrt(proxy.iter().map(|g| (g[c] - mp[c]) * (g[c] - mp[c])).sum::<f64>() / (n - 1.0) / n);
        let si = math::sqrt(indicator.iter().map(|g| (g[c] - mi[c]) * (g[c] - mi[c])).sum::<f64>() / (n - 1.0) / n);
        let gap = (mp[c] - mi[c]).abs();
        let se = math::sqrt(sp * sp + si * si);
        if gap > 3.0 * se {
            means_ok = false;
        }
        if se > 0.0 {
            max_mean_z = max_mean_z.max(gap / se);
        }
    }
    Ok(PropositionReport {
        proposition: 2,
        instance: format!("{}, {} batches of {}", describe(&q0, config), batches, batch_size),
        lhs: var_proxy,
        rhs: var_indicator,
        lhs_se: None,
        rhs_se: None,
        exact: false,
        tolerance: 0.0,
        passed: variance_ok && means_ok,
        variance: Some(VarianceDetail {
            batches,
            batch_size,
            var_proxy,
            var_indicator,
            var_integrated,
            var_diff_se: diff_se,
            var_diff_upper,
            variance_ok,
            max_mean_z,
            means_ok,
        }),
    })
}
