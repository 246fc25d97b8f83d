use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use pgsearch::io;
use pgsearch::timing::{design_name, timing_profile};
use pgsearch_core::eval::{check_proposition1_with_hook, DEFAULT_SPIRAL_THRESHOLD};
use pgsearch_core::rng::{rng_from_seed, split_seed};
use pgsearch_core::trainer::BaselineKind;
use pgsearch_core::{
    check_proposition2, compare_methods, generate_map, random_mixture, rollout, scenarios, train, CheckMode, Cell,
    EnvConfig, FeatureDesign, FeatureKind, GridSpec, MapSource, Method, Policy, ProbabilityMap, PropositionReport,
    RolloutMode, StartCell, TrainConfig,
};
use rand::Rng;
use serde::{Serialize, Serializer};

/// Policy-gradient search planning on target probability maps.
#[derive(Parser, Debug)]
#[command(name = "pgsearch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a probability map (and the mixture behind it) as CSV.
    GenerateMap(GenerateArgs),
    /// Train a policy with the likelihood-ratio gradient.
    Train(TrainArgs),
    /// Roll out a trained policy greedily and write its trajectory.
    Run(RunArgs),
    /// Compare the policy with lawnmower and spiral search on one map.
    Compare(CompareArgs),
    /// Check the proxy-reward propositions; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Time argmax path generation for both feature designs.
    Timing(TimingArgs),
}

/// `WxH`
#[derive(Debug, Clone, Copy)]
struct Size(GridSpec);

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
        let w: usize = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
        let h: usize = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
        GridSpec::sized(w, h).map(Size).map_err(|e| e.to_string())
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0.width, self.0.height)
    }
}

impl Serialize for Size {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `X,Y` or `random`
#[derive(Debug, Clone, Copy)]
struct Start(StartCell);

impl FromStr for Start {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(Start(StartCell::Random));
        }
        let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y or random, got {s:?}"))?;
        let x = x.trim().parse().map_err(|_| format!("bad x in {s:?}"))?;
        let y = y.trim().parse().map_err(|_| format!("bad y in {s:?}"))?;
        Ok(Start(StartCell::Fixed(Cell::new(x, y))))
    }
}

impl Serialize for Start {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            StartCell::Random => s.serialize_str("random"),
            StartCell::Fixed(c) => s.collect_str(&format_args!("{},{}", c.x, c.y)),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Design {
    Multires,
    Allgrid,
}

impl From<Design> for FeatureKind {
    fn from(d: Design) -> Self {
        match d {
            Design::Multires => FeatureKind::MultiRes,
            Design::Allgrid => FeatureKind::AllGrid,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Baseline {
    MeanReturn,
    PerStep,
    Zero,
}

impl From<Baseline> for BaselineKind {
    fn from(b: Baseline) -> Self {
        match b {
            Baseline::MeanReturn => BaselineKind::MeanReturn,
            Baseline::PerStep => BaselineKind::PerStep,
            Baseline::Zero => BaselineKind::Zero,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Scenario {
    Training,
    TwoGaussian,
    Ring,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Enumerate,
    Montecarlo,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
enum Prop {
    #[value(name = "1")]
    #[serde(rename = "1")]
    One,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
    #[value(name = "all")]
    #[serde(rename = "all")]
    All,
}

#[derive(Args, Debug, Serialize)]
struct MapInput {
    /// Map CSV to use.
    #[arg(long, conflicts_with_all = ["mixture", "random_components", "scenario"])]
    map: Option<PathBuf>,
    /// Mixture JSON to rasterize on --size.
    #[arg(long, conflicts_with_all = ["random_components", "scenario"])]
    mixture: Option<PathBuf>,
    /// Random mixture with this many components, drawn from --seed.
    #[arg(long, conflicts_with = "scenario")]
    random_components: Option<usize>,
    /// Bundled map (the default is the training scenario).
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
    /// Grid size for generated maps.
    #[arg(long, default_value = "30x30")]
    size: Size,
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    #[command(flatten)]
    input: MapInput,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    input: MapInput,
    /// Draw a fresh random mixture with this many components every iteration.
    #[arg(long, conflicts_with_all = ["map", "mixture", "random_components", "scenario"])]
    regenerate: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = EnvConfig::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = EnvConfig::DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long, default_value = "random")]
    start: Start,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_ROLLOUTS)]
    rollouts: usize,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_LEARNING_RATE)]
    lr: f64,
    #[arg(long, value_enum, default_value_t = Design::Multires)]
    design: Design,
    #[arg(long, value_enum, default_value_t = Baseline::MeanReturn)]
    baseline: Baseline,
    /// Keep theta every N iterations in snapshots.json (0 = off).
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct RunArgs {
    #[arg(long)]
    policy: PathBuf,
    #[command(flatten)]
    input: MapInput,
    #[arg(long, default_value_t = EnvConfig::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = EnvConfig::DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long, default_value = "0,0")]
    start: Start,
    /// Seeds the start cell when --start random.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CompareArgs {
    #[command(flatten)]
    input: MapInput,
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Comma-separated subset of policy, boustrophedon, spiral.
    #[arg(long, default_value = "policy,boustrophedon,spiral")]
    methods: String,
    #[arg(long, default_value = "0,0")]
    start: Start,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = EnvConfig::DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long, default_value_t = EnvConfig::DEFAULT_GAMMA)]
    gamma: f64,
    /// Spiral re-targeting threshold, as a fraction of the initial mass.
    #[arg(long, default_value_t = DEFAULT_SPIRAL_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Prop::All)]
    prop: Prop,
    /// Exact or sampled check of the first proposition.
    #[arg(long, value_enum, default_value_t = Mode::Enumerate)]
    mode: Mode,
    /// Grid of the generated instances (3x3 enumerated, 5x5 otherwise).
    #[arg(long, alias = "size")]
    grid: Option<Size>,
    /// Episode length (5 enumerated, 10 sampled, 8 for the variance check).
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = EnvConfig::DEFAULT_GAMMA)]
    gamma: f64,
    /// Random instances for the first proposition.
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Rollouts per instance in Monte Carlo mode.
    #[arg(long, default_value_t = 4000)]
    samples: usize,
    #[arg(long, default_value_t = 200)]
    batches: usize,
    #[arg(long, default_value_t = 20)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Scale proxy rewards after the start scan by this factor (negative
    /// control for the checker).
    #[arg(long, hide = true)]
    corrupt_reward: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct TimingArgs {
    /// Comma-separated grid sizes.
    #[arg(long, default_value = "15x15,30x30,60x60", value_delimiter = ',')]
    sizes: Vec<Size>,
    #[arg(long, value_enum, default_values_t = [Design::Multires, Design::Allgrid], value_delimiter = ',')]
    designs: Vec<Design>,
    #[arg(long, default_value_t = EnvConfig::DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Bad flag combinations found after parsing; exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::GenerateMap(a) => cmd_generate_map(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Timing(a) => cmd_timing(&a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<UsageError>().is_some() { 2 } else { 1 })
        }
    }
}

fn prepare_out(out: &Path, config: &impl Serialize) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    io::save_json(config, &out.join("config.json"))?;
    Ok(())
}

/// Resolves the map flags. Returns the map and, when one was used, the
/// mixture behind it.
fn load_input(input: &MapInput, seed: u64) -> anyhow::Result<(ProbabilityMap, Option<pgsearch_core::GaussianMixture>)> {
    let spec = input.size.0;
    if let Some(path) = &input.map {
        return Ok((io::load_map(path)?, None));
    }
    if let Some(path) = &input.mixture {
        let mix = io::load_mixture(path)?;
        return Ok((generate_map(&mix, spec)?, Some(mix)));
    }
    if let Some(n) = input.random_components {
        if n < 1 {
            return Err(usage("--random-components must be at least 1"));
        }
        let mix = random_mixture(n, spec, seed)?;
        return Ok((generate_map(&mix, spec)?, Some(mix)));
    }
    Ok(match input.scenario.unwrap_or(Scenario::Training) {
        Scenario::Training => {
            let mix = scenarios::training_mixture_for(spec);
            (generate_map(&mix, spec)?, Some(mix))
        }
        Scenario::TwoGaussian => {
            let mix = scenarios::two_gaussian_mixture(spec);
            (generate_map(&mix, spec)?, Some(mix))
        }
        Scenario::Ring => (scenarios::ring_map(spec)?, None),
    })
}

fn env_config(gamma: f64, horizon: usize, start: Start) -> anyhow::Result<EnvConfig> {
    EnvConfig::new(gamma, horizon, start.0).map_err(|e| usage(e.to_string()))
}

/// Start cell for greedy runs; `random` is drawn from `seed`.
fn resolve_start(start: Start, spec: GridSpec, seed: u64) -> anyhow::Result<Cell> {
    let cell = match start.0 {
        StartCell::Fixed(c) => c,
        StartCell::Random => spec.cell_at(rng_from_seed(seed).gen_range(0..spec.num_cells())),
    };
    if !spec.contains_cell(cell) {
        return Err(usage(format!("start ({},{}) is outside the {}x{} grid", cell.x, cell.y, spec.width, spec.height)));
    }
    Ok(cell)
}

fn cmd_generate_map(a: &GenerateArgs) -> anyhow::Result<bool> {
    prepare_out(&a.out, a)?;
    let (map, mix) = load_input(&a.input, a.seed)?;
    io::save_map(&map, &a.out.join("map.csv"))?;
    if let Some(mix) = mix {
        io::save_mixture(&mix, &a.out.join("mixture.json"))?;
    }
    println!("wrote {}x{} map to {}", map.spec().width, map.spec().height, a.out.display());
    Ok(true)
}

fn cmd_train(a: &TrainArgs) -> anyhow::Result<bool> {
    prepare_out(&a.out, a)?;
    let env = env_config(a.gamma, a.horizon, a.start)?;
    let (source, spec) = match a.regenerate {
        Some(components) => (MapSource::RandomMixture { spec: a.input.size.0, components }, a.input.size.0),
        None => {
            let (map, _) = load_input(&a.input, a.seed)?;
            let spec = map.spec();
            io::save_map(&map, &a.out.join("map.csv"))?;
            (MapSource::Fixed(map), spec)
        }
    };
    if let StartCell::Fixed(c) = env.start {
        if !spec.contains_cell(c) {
            return Err(usage("start cell is outside the grid"));
        }
    }
    let mut config = TrainConfig::new(source);
    config.iterations = a.iterations;
    config.rollouts = a.rollouts;
    config.learning_rate = a.lr;
    config.env = env;
    config.seed = a.seed;
    config.baseline = a.baseline.into();
    config.snapshot_every = a.snapshot_every;
    config.validate().map_err(|e| usage(e.to_string()))?;
    let design = FeatureDesign::for_grid(a.design.into(), spec);
    let (policy, log) = train(Policy::zeros(design), &config).context("training failed")?;
    io::save_policy(&policy, &a.out.join("policy.json"))?;
    io::write_text(&a.out.join("train_log.csv"), &io::train_log_to_csv(&log))?;
    if a.snapshot_every > 0 {
        io::save_json(&log.snapshots, &a.out.join("snapshots.json"))?;
    }
    let n = log.records.len();
    if n > 0 {
        let w = n.min(10);
        println!(
            "trained {} iterations ({} features per action): mean discounted return {:.6} -> {:.6}",
            n,
            design.k,
            log.mean_return(0..w),
            log.mean_return(n - w..n)
        );
    }
    Ok(true)
}

#[derive(Serialize)]
struct RunSummary {
    start: Cell,
    steps: usize,
    total_reward: f64,
    discounted_return: f64,
    remaining_mass: f64,
}

fn cmd_run(a: &RunArgs) -> anyhow::Result<bool> {
    prepare_out(&a.out, a)?;
    let policy = io::load_policy(&a.policy)?;
    let (map, _) = load_input(&a.input, a.seed)?;
    let start = resolve_start(a.start, map.spec(), a.seed)?;
    let env = env_config(a.gamma, a.horizon, Start(StartCell::Fixed(start)))?;
    let traj = rollout(&map, &policy, &env, RolloutMode::Argmax, a.seed)?;
    io::write_text(&a.out.join("trajectory.csv"), &io::trajectory_to_csv(&traj))?;
    let summary = RunSummary {
        start,
        steps: traj.steps(),
        total_reward: traj.total_reward(),
        discounted_return: traj.discounted_return(a.gamma),
        remaining_mass: map.remaining_mass() - traj.total_reward(),
    };
    io::save_json(&summary, &a.out.join("summary.json"))?;
    println!("{} steps, total {:.6}, discounted {:.6}", summary.steps, summary.total_reward, summary.discounted_return);
    Ok(true)
}

#[derive(Serialize)]
struct MethodSummary {
    method: String,
    final_total_reward: f64,
    final_discounted_reward: f64,
}

#[derive(Serialize)]
struct CompareSummary {
    start: Cell,
    horizon: usize,
    gamma: f64,
    initial_mass: f64,
    max_conservation_error: f64,
    conservation_ok: bool,
    methods: Vec<MethodSummary>,
}

fn cmd_compare(a: &CompareArgs) -> anyhow::Result<bool> {
    let names: Vec<&str> = a.methods.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(usage("--methods is empty"));
    }
    let policy = match &a.policy {
        Some(p) => Some(io::load_policy(p)?),
        None => None,
    };
    let mut methods = Vec::new();
    for name in &names {
        methods.push(match *name {
            "policy" => Method::Policy(policy.as_ref().ok_or_else(|| usage("method policy needs --policy"))?),
            "boustrophedon" => Method::Boustrophedon,
            "spiral" => Method::Spiral { threshold: a.threshold },
            other => return Err(usage(format!("unknown method {other:?}"))),
        });
    }
    prepare_out(&a.out, a)?;
    let (map, _) = load_input(&a.input, a.seed)?;
    let start = resolve_start(a.start, map.spec(), a.seed)?;
    let report = compare_methods(&map, &methods, start, a.horizon, a.gamma)?;
    io::write_text(&a.out.join("series.csv"), &io::comparison_to_csv(&report))?;
    for m in &report.methods {
        let rewards = &m.rewards[..m.cells.len()];
        io::write_text(&a.out.join(format!("trajectory_{}.csv", m.method)), &io::cells_to_csv(&m.cells, rewards))?;
    }
    let err = report.max_conservation_error();
    let summary = CompareSummary {
        start,
        horizon: a.horizon,
        gamma: a.gamma,
        initial_mass: report.initial_mass,
        max_conservation_error: err,
        conservation_ok: err <= 1e-9,
        methods: report
            .methods
            .iter()
            .map(|m| MethodSummary {
                method: m.method.clone(),
                final_total_reward: m.final_total(),
                final_discounted_reward: m.final_discounted(),
            })
            .collect(),
    };
    io::save_json(&summary, &a.out.join("summary.json"))?;
    for m in &summary.methods {
        println!("{:>14}: total {:.6}, discounted {:.6}", m.method, m.final_total_reward, m.final_discounted_reward);
    }
    Ok(summary.conservation_ok)
}

fn random_instance_map(spec: GridSpec, seed: u64) -> anyhow::Result<ProbabilityMap> {
    let mut rng = rng_from_seed(seed);
    let mut map = ProbabilityMap::from_fn(spec, |_| rng.gen::<f64>())?;
    map.normalize()?;
    Ok(map)
}

fn random_theta_policy(seed: u64, scale: f64) -> anyhow::Result<Policy> {
    let design = FeatureDesign::multires();
    let mut rng = rng_from_seed(seed);
    let theta = (0..4 * design.k).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    Ok(Policy::from_parts(design, theta)?)
}

fn cmd_verify(a: &VerifyArgs) -> anyhow::Result<bool> {
    prepare_out(&a.out, a)?;
    let mut reports: Vec<PropositionReport> = Vec::new();
    if a.prop != Prop::Two {
        let exact = a.mode == Mode::Enumerate;
        let spec = a.grid.map_or_else(|| GridSpec::sized(if exact { 3 } else { 5 }, if exact { 3 } else { 5 }), |s| Ok(s.0))?;
        let horizon = a.horizon.unwrap_or(if exact { 5 } else { 10 });
        let factor = a.corrupt_reward;
        let hook = move |t: usize, r: f64| match factor {
            Some(f) if t > 0 => f * r,
            _ => r,
        };
        for i in 0..a.instances.max(1) as u64 {
            let seed = split_seed(a.seed, i);
            let map = random_instance_map(spec, split_seed(seed, 0))?;
            let policy = if i % 2 == 0 {
                Policy::zeros(FeatureDesign::multires())
            } else {
                random_theta_policy(split_seed(seed, 1), 50.0)?
            };
            let start = if i % 3 == 0 {
                StartCell::Random
            } else {
                StartCell::Fixed(spec.cell_at(i as usize % spec.num_cells()))
            };
            let env = EnvConfig::new(a.gamma, horizon, start).map_err(|e| usage(e.to_string()))?;
            let mode = if exact {
                CheckMode::Enumerate
            } else {
                CheckMode::MonteCarlo { samples: a.samples, seed: split_seed(seed, 2) }
            };
            reports.push(check_proposition1_with_hook(&map, &policy, &env, mode, &hook)?);
        }
    }
    if a.prop != Prop::One {
        let spec = a.grid.map_or_else(|| GridSpec::sized(5, 5), |s| Ok(s.0))?;
        let horizon = a.horizon.unwrap_or(8);
        let map = random_instance_map(spec, split_seed(a.seed, 1 << 32))?;
        let env = EnvConfig::new(a.gamma, horizon, StartCell::Random).map_err(|e| usage(e.to_string()))?;
        let policy = Policy::zeros(FeatureDesign::multires());
        reports.push(check_proposition2(&map, &policy, &env, a.batches, a.batch_size, a.seed).map_err(|e| match e {
            pgsearch_core::Error::InsufficientBatches { .. } => usage(e.to_string()),
            other => other.into(),
        })?);
    }
    io::save_json(&reports, &a.out.join("reports.json"))?;
    let mut ok = true;
    for r in &reports {
        ok &= r.passed;
        println!(
            "proposition {} [{}] {}: lhs {:.15} rhs {:.15}",
            r.proposition,
            if r.passed { "pass" } else { "FAIL" },
            r.instance,
            r.lhs,
            r.rhs
        );
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} failed", reports.len(), failed);
    Ok(ok)
}

fn cmd_timing(a: &TimingArgs) -> anyhow::Result<bool> {
    if a.sizes.len() < 2 {
        return Err(usage("--sizes needs at least two grid sizes"));
    }
    if a.repeats < 5 {
        return Err(usage("--repeats must be at least 5"));
    }
    prepare_out(&a.out, a)?;
    let designs: Vec<FeatureKind> = a.designs.iter().map(|d| (*d).into()).collect();
    let sizes: Vec<GridSpec> = a.sizes.iter().map(|s| s.0).collect();
    let table = timing_profile(&designs, &sizes, a.seed, a.horizon, a.repeats)?;
    io::write_text(&a.out.join("timing.csv"), &table.to_csv())?;
    for row in &table.rows {
        println!("{:>8} {:>4}x{:<4} {:.6}s", design_name(row.design), row.width, row.height, row.median_seconds);
    }
    let verdict = table.multires_scales_better();
    #[derive(Serialize)]
    struct Summary {
        multires_growth: Option<f64>,
        allgrid_growth: Option<f64>,
        multires_scales_better: Option<bool>,
    }
    let summary = Summary {
        multires_growth: table.growth_ratio(FeatureKind::MultiRes),
        allgrid_growth: table.growth_ratio(FeatureKind::AllGrid),
        multires_scales_better: verdict,
    };
    io::save_json(&summary, &a.out.join("summary.json"))?;
    match verdict {
        Some(v) => {
            println!(
                "growth largest/smallest: multires {:.2}, allgrid {:.2}",
                summary.multires_growth.unwrap_or(f64::NAN),
                summary.allgrid_growth.unwrap_or(f64::NAN)
            );
            Ok(v)
        }
        None => Ok(true),
    }
}
