//! Readers and writers for maps, mixtures, policies, trajectories, training
//! logs and comparison reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pgsearch_core::env::Trajectory;
use pgsearch_core::eval::ComparisonReport;
use pgsearch_core::trainer::TrainLog;
use pgsearch_core::{GaussianMixture, GridSpec, Policy, ProbabilityMap};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}

/// Map as CSV: one line per grid row, no header. Values are written in
/// shortest round-trip form, so loading a saved map is bit-exact.
pub fn map_to_csv(map: &ProbabilityMap) -> String {
    let w = map.spec().width;
    let mut out = String::new();
    for row in map.values().chunks(w) {
        for (x, v) in row.iter().enumerate() {
            if x > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Parses the CSV map format. `path` only labels errors.
pub fn map_from_csv(text: &str, path: &Path) -> Result<ProbabilityMap> {
    let parse_err = |row, column, message: String| Error::Parse { path: path.into(), row, column, message };
    let mut values = Vec::new();
    let mut width = None;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    for (row, line) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let expected = *width.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(parse_err(
                row,
                fields.len().min(expected),
                format!("expected {expected} values, found {}", fields.len()),
            ));
        }
        for (column, field) in fields.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(row, column, format!("not a number: {:?}", field.trim())))?;
            if !v.is_finite() || v < 0.0 {
                return Err(parse_err(row, column, format!("mass must be finite and nonnegative, found {v}")));
            }
            values.push(v);
        }
    }
    let width = width.ok_or_else(|| parse_err(0, 0, "empty map".into()))?;
    let spec = GridSpec::sized(width, lines.len())?;
    Ok(ProbabilityMap::new(spec, values)?)
}

pub fn load_map(path: &Path) -> Result<ProbabilityMap> {
    map_from_csv(&read(path)?, path)
}

pub fn save_map(map: &ProbabilityMap, path: &Path) -> Result<()> {
    write_text(path, &map_to_csv(map))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|source| Error::Json { path: path.into(), source })
}

pub fn save_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.into(), source })?;
    write_text(path, &(text + "\n"))
}

/// `{"components": [{"mean": [x, y], "sigma": [sx, sy], "weight": w}]}`
pub fn load_mixture(path: &Path) -> Result<GaussianMixture> {
    load_json(path)
}

pub fn save_mixture(mixture: &GaussianMixture, path: &Path) -> Result<()> {
    save_json(mixture, path)
}

/// `{"design": {"kind", "k", "window_radius"}, "theta": [...]}`
pub fn load_policy(path: &Path) -> Result<Policy> {
    load_json(path)
}

pub fn save_policy(policy: &Policy, path: &Path) -> Result<()> {
    save_json(policy, path)
}

/// Columns `step,x,y,action,reward`. Step 0 is the start scan and has an
/// empty action.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    cells_to_csv(&traj.cells, &traj.rewards)
}

/// Trajectory CSV for a visited cell sequence and its rewards.
pub fn cells_to_csv(cells: &[pgsearch_core::Cell], rewards: &[f64]) -> String {
    let mut out = String::from("step,x,y,action,reward\n");
    for (step, (cell, reward)) in cells.iter().zip(rewards).enumerate() {
        let action = match step {
            0 => "",
            _ => pgsearch_core::Action::between(cells[step - 1], *cell).map_or("", |a| a.name()),
        };
        writeln!(out, "{step},{},{},{action},{reward}", cell.x, cell.y).expect("writing to a String");
    }
    out
}

/// Columns `iteration,mean_total_reward,mean_discounted_return,baseline,grad_norm`.
pub fn train_log_to_csv(log: &TrainLog) -> String {
    let mut out = String::from("iteration,mean_total_reward,mean_discounted_return,baseline,grad_norm\n");
    for r in &log.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration, r.mean_total_reward, r.mean_discounted_return, r.baseline, r.grad_norm
        )
        .expect("writing to a String");
    }
    out
}

/// Long-format series, one row per method and step. `mass_balance` is
/// collected plus remaining mass and should equal the initial mass.
pub fn comparison_to_csv(report: &ComparisonReport) -> String {
    let mut out =
        String::from("method,step,x,y,reward,cumulative_total,cumulative_discounted,remaining,mass_balance\n");
    for m in &report.methods {
        for step in 0..m.rewards.len() {
            let (x, y) = m.cells.get(step).map_or((String::new(), String::new()), |c| (c.x.to_string(), c.y.to_string()));
            writeln!(
                out,
                "{},{step},{x},{y},{},{},{},{},{}",
                m.method,
                m.rewards[step],
                m.cumulative_total[step],
                m.cumulative_discounted[step],
                m.remaining[step],
                m.cumulative_total[step] + m.remaining[step],
            )
            .expect("writing to a String");
        }
    }
    out
}
