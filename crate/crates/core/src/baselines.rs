//! Non-learned comparison planners.

use alloc::vec::Vec;

use crate::env::{Action, SearchState};
use crate::error::{Error, Result};
use crate::probmap::{Cell, GridSpec, ProbabilityMap};

/// A 4-connected in-bounds cell sequence starting at the robot's start cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedPath {
    cells: Vec<Cell>,
}

impl PlannedPath {
    pub fn new(spec: GridSpec, cells: Vec<Cell>) -> Result<Self> {
        check_connected(spec, &cells)?;
        Ok(PlannedPath { cells })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<Cell> {
        self.cells
    }

    /// Number of moves (cells after the start).
    pub fn moves(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }
}

fn check_connected(spec: GridSpec, cells: &[Cell]) -> Result<()> {
    if let Some(first) = cells.first() {
        spec.check_cell(*first)?;
    }
    for (i, w) in cells.windows(2).enumerate() {
        if !spec.contains_cell(w[1]) || !w[0].is_adjacent(w[1]) {
            return Err(Error::NonAdjacentPath { index: i + 1 });
        }
    }
    Ok(())
}

/// Appends moves to a path until a move budget runs out, optionally
/// clearing a map as it goes.
struct Walker<'a> {
    cells: Vec<Cell>,
    max_moves: usize,
    map: Option<&'a mut ProbabilityMap>,
}

impl<'a> Walker<'a> {
    fn new(start: Cell, max_moves: usize, mut map: Option<&'a mut ProbabilityMap>) -> Self {
        if let Some(m) = map.as_deref_mut() {
            m.clear(start);
        }
        let mut cells = Vec::with_capacity(max_moves.min(1 << 16) + 1);
        cells.push(start);
        Walker { cells, max_moves, map }
    }

    fn pos(&self) -> Cell {
        *self.cells.last().expect("walker always holds the start cell")
    }

    fn full(&self) -> bool {
        self.cells.len() > self.max_moves
    }

    fn push(&mut self, c: Cell) -> bool {
        if self.full() {
            return false;
        }
        if let Some(m) = self.map.as_deref_mut() {
            m.clear(c);
        }
        self.cells.push(c);
        true
    }

    /// Shortest 4-connected walk to `target`, moving along the row first.
    fn go_to(&mut self, target: Cell) -> bool {
        let mut c = self.pos();
        while c.x != target.x {
            c.x = if c.x < target.x { c.x + 1 } else { c.x - 1 };
            if !self.push(c) {
                return false;
            }
        }
        while c.y != target.y {
            c.y = if c.y < target.y { c.y + 1 } else { c.y - 1 };
            if !self.push(c) {
                return false;
            }
        }
        !self.full()
    }
}

/// Lawnmower sweep: run along the start row to its nearer end, along that
/// column to the nearer horizontal edge, then sweep full rows in alternating
/// directions away from that edge. Truncated after `horizon` moves. From a
/// corner the sweep visits every cell exactly once.
pub fn boustrophedon_path(spec: GridSpec, start: Cell, horizon: usize) -> Result<PlannedPath> {
    spec.check_cell(start)?;
    let (w, h) = (spec.width, spec.height);
    let mut walker = Walker::new(start, horizon, None);
    let x0 = if 2 * start.x < w { 0 } else { w - 1 };
    let y0 = if 2 * start.y < h { 0 } else { h - 1 };
    let mut ok = walker.go_to(Cell::new(x0, start.y)) && walker.go_to(Cell::new(x0, y0));
    let rows: Vec<usize> = if y0 == 0 { (0..h).collect() } else { (0..h).rev().collect() };
    let mut at_left = x0 == 0;
    for (i, y) in rows.into_iter().enumerate() {
        if !ok {
            break;
        }
        if i > 0 {
            ok = walker.go_to(Cell::new(walker.pos().x, y));
        }
        let far = if at_left { w - 1 } else { 0 };
        ok = ok && walker.go_to(Cell::new(far, y));
        at_left = !at_left;
    }
    Ok(PlannedPath { cells: walker.cells })
}

/// Cells of the square ring at Chebyshev radius `r` around `center`,
/// clockwise from the cell just north of ring `r - 1`'s last cell. Off-grid
/// cells are dropped.
fn ring_cells(spec: GridSpec, center: Cell, r: usize) -> Vec<Cell> {
    let r = r as i64;
    let mut offsets = Vec::with_capacity(8 * r as usize);
    for dx in (-r + 1)..=r {
        offsets.push((dx, -r));
    }
    for dy in (-r + 1)..=r {
        offsets.push((r, dy));
    }
    for dx in (-r..r).rev() {
        offsets.push((dx, r));
    }
    for dy in (-r..r).rev() {
        offsets.push((-r, dy));
    }
    offsets
        .into_iter()
        .filter_map(|(dx, dy)| {
            let (x, y) = (center.x as i64 + dx, center.y as i64 + dy);
            spec.contains(x, y).then(|| Cell::new(x as usize, y as usize))
        })
        .collect()
}

/// Informed spiral search. Repeatedly: go to the cell of highest remaining
/// mass (row-major ties), then spiral outward around it ring by ring,
/// clockwise from North, while the next ring still holds at least
/// `mass_threshold` times the initial total mass. Once no mass is left the
/// spiral continues around the current cell without a threshold. Transit
/// legs move along the row first.
pub fn spiral_path(
    map: &ProbabilityMap,
    start: Cell,
    horizon: usize,
    mass_threshold: f64,
) -> Result<PlannedPath> {
    let spec = map.spec();
    spec.check_cell(start)?;
    if !(mass_threshold >= 0.0) || !mass_threshold.is_finite() {
        return Err(Error::InvalidConfig("mass threshold must be finite and >= 0"));
    }
    let mut remaining = map.clone();
    let cutoff = mass_threshold * map.remaining_mass();
    let max_radius = spec.width.max(spec.height);
    let mut walker = Walker::new(start, horizon, Some(&mut remaining));
    if spec.num_cells() == 1 {
        return Ok(PlannedPath { cells: walker.cells });
    }
    // the first hotspot is chosen before the start scan, so a robot that
    // starts on the peak spirals around it
    let mut first_hot = (map.remaining_mass() > 0.0).then(|| map.argmax());
    while !walker.full() {
        let map_now = walker.map.as_deref().expect("spiral walker owns a map");
        let exhausted = !map_now.values().iter().any(|v| *v > 0.0);
        let hot = match first_hot.take() {
            Some(cell) => cell,
            None if exhausted => walker.pos(),
            None => map_now.argmax(),
        };
        if !walker.go_to(hot) {
            break;
        }
        for r in 1..=max_radius {
            let ring = ring_cells(spec, hot, r);
            if ring.is_empty() {
                break;
            }
            if !exhausted {
                let map_now = walker.map.as_deref().expect("spiral walker owns a map");
                let mass: f64 = ring.iter().map(|c| map_now.get(*c)).sum();
                if mass < cutoff {
                    break;
                }
            }
            for c in ring {
                if !walker.go_to(c) {
                    return Ok(PlannedPath { cells: walker.cells });
                }
            }
        }
        if exhausted {
            // every ring around the current cell has been walked; the grid is
            // covered and nothing is left to find
            break;
        }
    }
    Ok(PlannedPath { cells: walker.cells })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub total_reward: f64,
    pub discounted_return: f64,
    /// Reward per visited cell, `rewards[0]` from the start cell.
    pub rewards: Vec<f64>,
    /// Map mass left after each visit.
    pub remaining: Vec<f64>,
}

/// Walks `path` through the environment's scan-and-clear dynamics.
pub fn execute_path(map: &ProbabilityMap, path: &PlannedPath, gamma: f64) -> Result<PathOutcome> {
    execute_cells(map, path.cells(), gamma)
}

pub fn execute_cells(map: &ProbabilityMap, cells: &[Cell], gamma: f64) -> Result<PathOutcome> {
    let mut out = PathOutcome {
        total_reward: 0.0,
        discounted_return: 0.0,
        rewards: Vec::with_capacity(cells.len()),
        remaining: Vec::with_capacity(cells.len()),
    };
    let Some(first) = cells.first() else {
        return Ok(out);
    };
    let mut start_map = map.clone();
    let r0 = start_map.clear(*first);
    let mut state = SearchState::new(start_map, *first)?;
    let mut record = |state: &SearchState, r: f64| {
        out.rewards.push(r);
        out.remaining.push(state.map().remaining_mass());
    };
    record(&state, r0);
    for (i, next) in cells.iter().enumerate().skip(1) {
        let action = Action::between(state.pos(), *next).ok_or(Error::NonAdjacentPath { index: i })?;
        let outcome = state.step(action).map_err(|_| Error::NonAdjacentPath { index: i })?;
        record(&state, outcome.reward);
    }
    out.total_reward = out.rewards.iter().sum();
    out.discounted_return = crate::env::discounted_return(&out.rewards, gamma);
    Ok(out)
}
