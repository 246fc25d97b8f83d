//! Wall-clock cost of producing an argmax path as the grid grows.

use std::time::Instant;

use pgsearch_core::env::argmax_path;
use pgsearch_core::rng::{rng_from_seed, split_seed};
use pgsearch_core::{generate_map, random_mixture, FeatureDesign, FeatureKind, GridSpec, Policy};
use rand::Rng;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct TimingRow {
    pub design: FeatureKind,
    pub width: usize,
    pub height: usize,
    pub features_per_action: usize,
    /// Seconds per path, one entry per run.
    pub runs: Vec<f64>,
    pub median_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingTable {
    pub horizon: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    /// Median time on the largest grid over the median on the smallest.
    pub fn growth_ratio(&self, design: FeatureKind) -> Option<f64> {
        let rows: Vec<&TimingRow> = self.rows.iter().filter(|r| r.design == design).collect();
        let area = |r: &&&TimingRow| r.width * r.height;
        let small = rows.iter().min_by_key(area)?;
        let large = rows.iter().max_by_key(area)?;
        Some(large.median_seconds / small.median_seconds)
    }

    /// Whether the multi-resolution cost grows strictly slower than the
    /// all-grid cost.
    pub fn multires_scales_better(&self) -> Option<bool> {
        Some(self.growth_ratio(FeatureKind::MultiRes)? < self.growth_ratio(FeatureKind::AllGrid)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("design,width,height,features_per_action,median_seconds,runs\n");
        for r in &self.rows {
            let runs: Vec<String> = r.runs.iter().map(|t| t.to_string()).collect();
            out += &format!(
                "{},{},{},{},{},{}\n",
                design_name(r.design),
                r.width,
                r.height,
                r.features_per_action,
                r.median_seconds,
                runs.join(";")
            );
        }
        out
    }
}

pub fn design_name(kind: FeatureKind) -> &'static str {
    match kind {
        FeatureKind::MultiRes => "multires",
        FeatureKind::AllGrid => "allgrid",
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Times `repeats` argmax paths of `horizon` steps from the grid center for
/// each design and size, on a random three-component map with a random
/// policy drawn from `policy_seed`.
pub fn timing_profile(
    designs: &[FeatureKind],
    sizes: &[GridSpec],
    policy_seed: u64,
    horizon: usize,
    repeats: usize,
) -> Result<TimingTable> {
    if sizes.len() < 2 {
        return Err(Error::Invalid("timing needs at least two grid sizes".into()));
    }
    if repeats < 5 {
        return Err(Error::Invalid("timing needs at least five runs per cell".into()));
    }
    let mut table = TimingTable { horizon, rows: Vec::new() };
    for &kind in designs {
        for (i, &spec) in sizes.iter().enumerate() {
            let map = generate_map(&random_mixture(3, spec, split_seed(policy_seed, i as u64))?, spec)?;
            let design = FeatureDesign::for_grid(kind, spec);
            let mut rng = rng_from_seed(policy_seed);
            let theta = (0..4 * design.k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let policy = Policy::from_parts(design, theta)?;
            // warm-up run
            argmax_path(&map, &policy, spec.center(), horizon)?;
            let mut runs = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let t = Instant::now();
                let path = argmax_path(&map, &policy, spec.center(), horizon)?;
                runs.push(t.elapsed().as_secs_f64());
                std::hint::black_box(path);
            }
            let median_seconds = median(&mut runs.clone());
            table.rows.push(TimingRow {
                design: kind,
                width: spec.width,
                height: spec.height,
                features_per_action: design.k,
                runs,
                median_seconds,
            });
        }
    }
    Ok(table)
}
