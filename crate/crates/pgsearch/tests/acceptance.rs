//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails. Run with `cargo test -p pgsearch --test acceptance`.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use pgsearch::io;
use pgsearch::timing::timing_profile;
use pgsearch_core::eval::DEFAULT_SPIRAL_THRESHOLD;
use pgsearch_core::features::{feature_dim, multires_index, segments, MULTIRES_DIM};
use pgsearch_core::rng::{rng_from_seed, split_seed};
use pgsearch_core::{
    check_proposition1, check_proposition2, compare_methods, discounted_return, extract_state_features,
    generate_map, random_mixture, rollout, scenarios, train, Action, ActionSet, Cell, CheckMode, EnvConfig,
    FeatureDesign, FeatureKind, GridSpec, MapSource, Method, Policy, ProbabilityMap, RolloutMode, StartCell,
    TrainConfig,
};
use rand::Rng;

const GAMMA: f64 = 0.9;
const TEST_HORIZON: usize = 300;
const TRAINING_SEEDS: u64 = 5;
/// All methods start in the same grid corner in the comparison.
const COMPARISON_START: Cell = Cell { x: 0, y: 0 };

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn random_map(spec: GridSpec, seed: u64) -> ProbabilityMap {
    let mut rng = rng_from_seed(seed);
    let mut map = ProbabilityMap::from_fn(spec, |_| rng.gen::<f64>()).unwrap();
    map.normalize().unwrap();
    map
}

fn random_policy(seed: u64, scale: f64) -> Policy {
    let design = FeatureDesign::multires();
    let mut rng = rng_from_seed(seed);
    let theta = (0..4 * design.k).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    Policy::from_parts(design, theta).unwrap()
}

fn proposition1() -> Outcome {
    let t = Instant::now();
    let sizes = [(2, 2), (3, 2), (2, 3), (3, 3), (1, 3)];
    let (mut n, mut worst, mut all) = (0, 0.0f64, true);
    for i in 0..24u64 {
        let (w, h) = sizes[i as usize % sizes.len()];
        let spec = GridSpec::sized(w, h).unwrap();
        let map = random_map(spec, split_seed(100, i));
        let policy = if i % 2 == 0 { Policy::zeros(FeatureDesign::multires()) } else { random_policy(split_seed(200, i), 30.0) };
        let start = if i % 3 == 0 { StartCell::Random } else { StartCell::Fixed(spec.cell_at(i as usize % spec.num_cells())) };
        let horizon = 1 + i as usize % 5;
        let env = EnvConfig::new(GAMMA, horizon, start).unwrap();
        let report = check_proposition1(&map, &policy, &env, CheckMode::Enumerate).unwrap();
        worst = worst.max((report.lhs - report.rhs).abs());
        all &= report.exact && report.passed && (report.lhs - report.rhs).abs() <= 1e-12;
        n += 1;
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(all && secs < 60.0, format!("{n} instances, max |lhs - rhs| = {worst:.2e} (tol 1e-12), {secs:.1}s (limit 60s)"))
}

fn proposition2() -> Outcome {
    let t = Instant::now();
    let spec = GridSpec::sized(5, 5).unwrap();
    let map = random_map(spec, 77);
    let env = EnvConfig::new(GAMMA, 8, StartCell::Random).unwrap();
    let report = check_proposition2(&map, &Policy::zeros(FeatureDesign::multires()), &env, 200, 20, 2024).unwrap();
    let v = report.variance.expect("variance detail");
    let secs = t.elapsed().as_secs_f64();
    outcome(
        report.passed && v.variance_ok && v.means_ok && secs < 300.0,
        format!(
            "var proxy {:.3e} < var indicator {:.3e} (95% upper bound of difference {:.3e}), max mean gap {:.2} SE (limit 3), {secs:.1}s",
            v.var_proxy, v.var_indicator, v.var_diff_upper, v.max_mean_z
        ),
    )
}

/// Log-softmax over legal actions, written out independently of the policy.
fn log_pi(theta: &[f64], phi: &[f64], legal: ActionSet, a: Action) -> f64 {
    let k = phi.len();
    let logit = |b: Action| -> f64 { theta[b.index() * k..(b.index() + 1) * k].iter().zip(phi).map(|(t, p)| t * p).sum() };
    let logits: Vec<f64> = legal.iter().map(logit).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logit(a) - lse
}

fn gradients() -> Outcome {
    let mut rng = rng_from_seed(31);
    let design = FeatureDesign::multires();
    let (mut worst_rel, mut worst_norm, mut worst_score) = (0.0f64, 0.0f64, 0.0f64);
    let h = 1e-3;
    for _ in 0..100 {
        let theta: Vec<f64> = (0..4 * design.k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let phi: Vec<f64> = (0..design.k).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mask: u8 = rng.gen_range(1..16);
        let legal: ActionSet = Action::ALL.into_iter().filter(|a| mask & (1 << a.index()) != 0).collect();
        let policy = Policy::from_parts(design, theta.clone()).unwrap();
        let dist = policy.action_probs(&phi, legal).unwrap();
        worst_norm = worst_norm.max((dist.probs().iter().sum::<f64>() - 1.0).abs());
        let mut expected_score = vec![0.0; theta.len()];
        for a in legal.iter() {
            let g = policy.grad_log_pi(&phi, a, legal).unwrap();
            for (e, gi) in expected_score.iter_mut().zip(&g) {
                *e += dist.prob(a) * gi;
            }
            let mut fd = vec![0.0; theta.len()];
            let mut th = theta.clone();
            // fourth-order central stencil
            for i in 0..theta.len() {
                let mut at = |offset: f64| {
                    th[i] = theta[i] + offset;
                    log_pi(&th, &phi, legal, a)
                };
                let d = 8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h));
                th[i] = theta[i];
                fd[i] = d / (12.0 * h);
            }
            let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
            let err = g.iter().zip(&fd).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            worst_rel = worst_rel.max(err / scale);
        }
        worst_score = worst_score.max(expected_score.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }
    outcome(
        worst_rel <= 1e-6 && worst_norm <= 1e-12 && worst_score <= 1e-12,
        format!(
            "100 pairs: max relative FD error {worst_rel:.2e} (tol 1e-6), |sum pi - 1| {worst_norm:.2e}, |E[score]| {worst_score:.2e} (tol 1e-12)"
        ),
    )
}

fn train_seeds() -> Vec<(Policy, f64, f64)> {
    let map = scenarios::training_map();
    (0..TRAINING_SEEDS)
        .map(|seed| {
            let mut config = TrainConfig::new(MapSource::Fixed(map.clone()));
            config.seed = seed;
            let (policy, log) = train(Policy::zeros(FeatureDesign::multires()), &config).unwrap();
            let n = log.records.len();
            (policy, log.mean_return(0..10), log.mean_return(n - 10..n))
        })
        .collect()
}

fn learning(trained: &[(Policy, f64, f64)], secs: f64) -> Outcome {
    let ratios: Vec<f64> = trained.iter().map(|(_, first, last)| last / first).collect();
    let improved = ratios.iter().filter(|r| **r >= 1.5).count();
    let per_seed = secs / trained.len() as f64;
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    outcome(
        improved >= 4 && per_seed < 900.0,
        format!(
            "last-10 / first-10 return per seed [{}], {improved}/5 >= 1.5 (need 4), {per_seed:.0}s per seed",
            shown.join(", ")
        ),
    )
}

fn ordering(trained: &[(Policy, f64, f64)]) -> Outcome {
    let spec = scenarios::standard_grid();
    let two = scenarios::two_gaussian_map(spec).unwrap();
    let ring = scenarios::ring_map(spec).unwrap();
    let mut good = 0;
    let mut rows = Vec::new();
    for (policy, _, _) in trained {
        let methods = [Method::Policy(policy), Method::Boustrophedon, Method::Spiral { threshold: DEFAULT_SPIRAL_THRESHOLD }];
        let finals = |map: &ProbabilityMap| -> Vec<f64> {
            let report = compare_methods(map, &methods, COMPARISON_START, TEST_HORIZON, GAMMA).unwrap();
            report.methods.iter().map(|m| m.final_discounted()).collect()
        };
        let (t, r) = (finals(&two), finals(&ring));
        let ok = t[0] > t[1] && r[0] > r[1] && r[0] >= r[2];
        good += ok as usize;
        rows.push(format!(
            "{}(two {:.4}/{:.4}, ring {:.4}/{:.4}/{:.4})",
            if ok { "ok" } else { "no" },
            t[0],
            t[1],
            r[0],
            r[1],
            r[2]
        ));
    }
    outcome(
        good >= 4,
        format!(
            "{good}/5 seeds satisfy policy > boustrophedon on both and >= spiral on ring (need 4); policy/boustrophedon[/spiral]: {}",
            rows.join(" ")
        ),
    )
}

fn check_series(cells: &[Cell], rewards: &[f64], remaining: &[f64], initial: f64, worst: &mut f64) -> bool {
    let mut seen = HashSet::new();
    let mut collected = 0.0;
    let mut ok = true;
    for (step, cell) in cells.iter().enumerate() {
        collected += rewards[step];
        *worst = worst.max((collected + remaining[step] - initial).abs());
        if !seen.insert(*cell) {
            ok &= rewards[step] == 0.0;
        }
    }
    ok && collected <= 1.0 + 1e-12
}

fn conservation(trained: &[(Policy, f64, f64)]) -> Outcome {
    let spec = scenarios::standard_grid();
    let maps = [
        scenarios::training_map(),
        scenarios::two_gaussian_map(spec).unwrap(),
        scenarios::ring_map(spec).unwrap(),
        generate_map(&random_mixture(5, spec, 9).unwrap(), spec).unwrap(),
    ];
    let uniform = Policy::zeros(FeatureDesign::multires());
    let starts = [Cell::new(0, 0), Cell::new(15, 15), Cell::new(29, 3), Cell::new(7, 29)];
    let (mut worst, mut ok, mut series) = (0.0f64, true, 0);
    for map in &maps {
        let initial = map.remaining_mass();
        for start in starts {
            let methods = [
                Method::Policy(&trained[0].0),
                Method::Policy(&uniform),
                Method::Boustrophedon,
                Method::Spiral { threshold: DEFAULT_SPIRAL_THRESHOLD },
            ];
            let report = compare_methods(map, &methods, start, TEST_HORIZON, GAMMA).unwrap();
            for m in &report.methods {
                ok &= check_series(&m.cells, &m.rewards, &m.remaining, initial, &mut worst);
                series += 1;
            }
        }
        let env = EnvConfig::new(GAMMA, TEST_HORIZON, StartCell::Random).unwrap();
        for seed in 0..10 {
            let traj = rollout(map, &uniform, &env, RolloutMode::Sample, seed).unwrap();
            let mut remaining = Vec::new();
            let mut replay = map.clone();
            for cell in &traj.cells {
                replay.clear(*cell);
                remaining.push(replay.remaining_mass());
            }
            ok &= check_series(&traj.cells, &traj.rewards, &remaining, initial, &mut worst);
            series += 1;
        }
    }
    outcome(
        ok && worst <= 1e-9,
        format!("{series} series: max |collected + remaining - 1| = {worst:.2e} (tol 1e-9), totals <= 1, revisits earn 0: {ok}"),
    )
}

fn features() -> Outcome {
    let mut dims_ok = true;
    for (w, h) in [(15, 15), (20, 20), (30, 30), (45, 60), (60, 60), (100, 100), (15, 100)] {
        let spec = GridSpec::sized(w, h).unwrap();
        let map = random_map(spec, w as u64 * 1000 + h as u64);
        dims_ok &= feature_dim(FeatureKind::MultiRes, spec) == MULTIRES_DIM;
        dims_ok &= extract_state_features(&map, spec.center(), &FeatureDesign::multires()).len() == 24;
    }
    let mut partition_ok = true;
    let mut positions = 0;
    for (w, h) in [(15, 15), (30, 30), (17, 40), (100, 100)] {
        let spec = GridSpec::sized(w, h).unwrap();
        let step = if w * h > 2000 { 7 } else { 1 };
        for pos in spec.cells().step_by(step) {
            let mut count = vec![0u8; spec.num_cells()];
            for s in segments(spec, pos) {
                for x in s.x0..=s.x1 {
                    let c = Cell::new(x, s.y);
                    count[spec.index(c)] += 1;
                    let expected = multires_index(x as i64 - pos.x as i64, s.y as i64 - pos.y as i64);
                    partition_ok &= expected == Some(s.feature);
                }
            }
            for (i, n) in count.iter().enumerate() {
                partition_ok &= *n == u8::from(spec.cell_at(i) != pos);
            }
            positions += 1;
        }
    }
    let sizes: Vec<GridSpec> = [15, 30, 60].iter().map(|&n| GridSpec::sized(n, n).unwrap()).collect();
    let table = timing_profile(&[FeatureKind::MultiRes, FeatureKind::AllGrid], &sizes, 5, TEST_HORIZON, 5).unwrap();
    let multires = table.growth_ratio(FeatureKind::MultiRes).unwrap();
    let allgrid = table.growth_ratio(FeatureKind::AllGrid).unwrap();
    outcome(
        dims_ok && partition_ok && allgrid > multires,
        format!(
            "dimension 24 on 15x15..100x100: {dims_ok}; partition exact at {positions} positions: {partition_ok}; \
             median-of-5 growth 15x15 -> 60x60: allgrid {allgrid:.1}x > multires {multires:.1}x"
        ),
    )
}

fn transfer(policy: &Policy) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.json");
    io::save_policy(policy, &path).unwrap();
    let loaded = io::load_policy(&path).unwrap();
    let big = GridSpec::sized(50, 50).unwrap();
    let cases = [
        ("50x50 mixture", generate_map(&random_mixture(4, big, 2718).unwrap(), big).unwrap()),
        ("30x30 ring", scenarios::ring_map(scenarios::standard_grid()).unwrap()),
    ];
    let uniform = Policy::zeros(FeatureDesign::multires());
    let mut ok = loaded == *policy;
    let mut rows = Vec::new();
    for (name, map) in &cases {
        let start = Cell::new(0, 0);
        let env = EnvConfig::new(GAMMA, TEST_HORIZON, StartCell::Fixed(start)).unwrap();
        let greedy = rollout(map, &loaded, &env, RolloutMode::Argmax, 0).unwrap();
        let ran = greedy.steps() == TEST_HORIZON;
        let value = greedy.discounted_return(GAMMA);
        let n = 400;
        let returns: Vec<f64> = (0..n)
            .map(|s| discounted_return(&rollout(map, &uniform, &env, RolloutMode::Sample, s).unwrap().rewards, GAMMA))
            .collect();
        let mean = returns.iter().sum::<f64>() / n as f64;
        let sd = (returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
        let se = sd / (n as f64).sqrt();
        let beats = value > mean + 2.0 * se;
        ok &= ran && beats;
        rows.push(format!("{name}: {value:.4} vs random {mean:.4} +- {se:.4} ({} steps)", greedy.steps()));
    }
    outcome(ok, format!("reloaded seed-0 policy, {}", rows.join("; ")))
}

fn main() -> ExitCode {
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    let mut report = |id, name, o: Outcome| {
        println!("criterion {id} [{}] {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };
    report(1, "proxy return equals expected discounted detection", proposition1());
    report(2, "proxy gradient has lower variance", proposition2());
    report(3, "score function and softmax", gradients());
    let t = Instant::now();
    let trained = train_seeds();
    let secs = t.elapsed().as_secs_f64();
    report(4, "learning progress", learning(&trained, secs));
    report(5, "method ordering", ordering(&trained));
    report(6, "mass conservation", conservation(&trained));
    report(7, "feature design", features());
    report(8, "transfer without retraining", transfer(&trained[0].0));
    let failed: Vec<u8> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
