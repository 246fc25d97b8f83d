//! Robot-centric state features.
//!
//! Two designs are provided:
//!
//! * **AllGrid**: a square window centered on the robot, large enough to
//!   hold every relative offset of the map (side `2 * max(width, height) - 1`).
//!   Each entry is the mass at that offset, zero off-grid. Length grows with
//!   the map.
//! * **MultiRes**: 24 averages over three concentric square annuli around the
//!   robot, each split into eight compass sectors. Annulus 0 is the eight
//!   neighbours (one cell per sector), annulus 1 covers Chebyshev distances
//!   2 to 4, and annulus 2 everything from distance 5 out to the map edge.
//!   Resolution therefore drops with distance while the length stays fixed.
//!
//! MultiRes sectors are 45 degree wedges centered on N, NE, E, ..., NW.
//! Entries are ordered annulus-major, then clockwise from North. An entry is
//! the mean mass over the in-bounds cells of its sector, or zero when the
//! sector lies entirely off the grid. The robot's own cell belongs to no
//! sector.
//!
//! MultiRes extraction walks each map row once and sums contiguous row
//! segments through the map's prefix sums, so it costs `O(height)` per state
//! rather than `O(width * height)`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::env::Action;
use crate::error::{Error, Result};
use crate::probmap::{Cell, GridSpec, ProbabilityMap};

pub const MULTIRES_DIM: usize = 24;
pub const SECTORS: usize = 8;
pub const ANNULI: usize = 3;
/// Largest Chebyshev distance of the inner and middle annuli.
pub const ANNULUS_LIMITS: [usize; 2] = [1, 4];
pub const SECTOR_NAMES: [&str; SECTORS] = ["N", "NE", "E", "SE", "S", "SW", "W", "NW"];

// tan(67.5 degrees). Integer offsets never sit exactly on a wedge boundary
// because the slope is irrational.
const STEEP: f64 = 2.414_213_562_373_095;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FeatureKind {
    AllGrid,
    MultiRes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureDesign {
    pub kind: FeatureKind,
    /// Length of the state feature vector.
    pub k: usize,
    /// Half-width of the AllGrid window; `None` for MultiRes.
    pub window_radius: Option<usize>,
}

impl FeatureDesign {
    pub const fn multires() -> Self {
        FeatureDesign { kind: FeatureKind::MultiRes, k: MULTIRES_DIM, window_radius: None }
    }

    /// The AllGrid window sized for `spec`.
    pub fn all_grid(spec: GridSpec) -> Self {
        let radius = spec.width.max(spec.height) - 1;
        FeatureDesign {
            kind: FeatureKind::AllGrid,
            k: (2 * radius + 1) * (2 * radius + 1),
            window_radius: Some(radius),
        }
    }

    pub fn for_grid(kind: FeatureKind, spec: GridSpec) -> Self {
        match kind {
            FeatureKind::AllGrid => Self::all_grid(spec),
            FeatureKind::MultiRes => Self::multires(),
        }
    }

    /// Checks the descriptor is internally consistent.
    pub fn validate(&self) -> Result<()> {
        let consistent = match (self.kind, self.window_radius) {
            (FeatureKind::MultiRes, None) => self.k == MULTIRES_DIM,
            (FeatureKind::AllGrid, Some(r)) => self.k == (2 * r + 1) * (2 * r + 1),
            _ => false,
        };
        if consistent {
            Ok(())
        } else {
            Err(Error::InvalidConfig("feature design descriptor is inconsistent"))
        }
    }

    /// Checks the design can featurize maps of this size. MultiRes works on
    /// any grid; AllGrid only on the size it was built for.
    pub fn check_compatible(&self, spec: GridSpec) -> Result<()> {
        self.validate()?;
        let expected = feature_dim(self.kind, spec);
        if self.k != expected {
            return Err(Error::DesignMismatch { expected, found: self.k });
        }
        Ok(())
    }
}

/// Feature dimension `k` of a design on a grid.
pub fn feature_dim(kind: FeatureKind, spec: GridSpec) -> usize {
    match kind {
        FeatureKind::MultiRes => MULTIRES_DIM,
        FeatureKind::AllGrid => {
            let side = 2 * spec.width.max(spec.height) - 1;
            side * side
        }
    }
}

/// State feature vector of length `k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateFeatures(pub Vec<f64>);

impl Deref for StateFeatures {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StateFeatures {
    fn from(v: Vec<f64>) -> Self {
        StateFeatures(v)
    }
}

pub fn extract_state_features(map: &ProbabilityMap, pos: Cell, design: &FeatureDesign) -> StateFeatures {
    let mut phi = StateFeatures::default();
    extract_state_features_into(map, pos, design, &mut phi);
    phi
}

/// As [`extract_state_features`], reusing `out`'s allocation.
pub fn extract_state_features_into(
    map: &ProbabilityMap,
    pos: Cell,
    design: &FeatureDesign,
    out: &mut StateFeatures,
) {
    out.0.clear();
    out.0.resize(design.k, 0.0);
    match design.kind {
        FeatureKind::MultiRes => multires_into(map, pos, &mut out.0),
        FeatureKind::AllGrid => all_grid_into(map, pos, design.window_radius.unwrap_or(0), &mut out.0),
    }
}

/// `phi` copied into the block of `action`, zeros in the other three.
pub fn extract_sa_features(phi: &StateFeatures, action: Action) -> Vec<f64> {
    let k = phi.len();
    let mut out = vec![0.0; Action::COUNT * k];
    out[action.index() * k..(action.index() + 1) * k].copy_from_slice(phi);
    out
}

fn all_grid_into(map: &ProbabilityMap, pos: Cell, radius: usize, out: &mut [f64]) {
    let spec = map.spec();
    let side = 2 * radius + 1;
    let values = map.values();
    for y in 0..spec.height {
        // offset row dy = y - pos.y lands at window row dy + radius
        let wy = y + radius - pos.y;
        let wx0 = radius - pos.x;
        let dst = &mut out[wy * side + wx0..wy * side + wx0 + spec.width];
        dst.copy_from_slice(&values[y * spec.width..(y + 1) * spec.width]);
    }
}

/// Sector (0 = N, clockwise) of a nonzero offset. North is `dy < 0`.
pub fn sector_of(dx: i64, dy: i64) -> usize {
    let (ax, ay) = (dx.unsigned_abs() as f64, dy.unsigned_abs() as f64);
    if ax * STEEP < ay {
        if dy < 0 { 0 } else { 4 }
    } else if ay * STEEP < ax {
        if dx > 0 { 2 } else { 6 }
    } else {
        match (dx > 0, dy < 0) {
            (true, true) => 1,
            (true, false) => 3,
            (false, false) => 5,
            (false, true) => 7,
        }
    }
}

pub fn annulus_of(chebyshev: usize) -> usize {
    if chebyshev <= ANNULUS_LIMITS[0] {
        0
    } else if chebyshev <= ANNULUS_LIMITS[1] {
        1
    } else {
        2
    }
}

/// MultiRes feature index of the cell at offset `(dx, dy)` from the robot,
/// `None` for the robot's own cell.
pub fn multires_index(dx: i64, dy: i64) -> Option<usize> {
    if dx == 0 && dy == 0 {
        return None;
    }
    let d = dx.unsigned_abs().max(dy.unsigned_abs()) as usize;
    Some(annulus_of(d) * SECTORS + sector_of(dx, dy))
}

/// A run of cells `x0..=x1` in row `y` that all belong to one MultiRes
/// feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub y: usize,
    pub x0: usize,
    pub x1: usize,
    pub feature: usize,
}

/// Calls `f` for every MultiRes segment around `pos`. Segments partition
/// the grid minus the robot cell.
pub fn for_each_segment(spec: GridSpec, pos: Cell, mut f: impl FnMut(Segment)) {
    let max_ax = pos.x.max(spec.width - 1 - pos.x);
    for y in 0..spec.height {
        let dy = y as i64 - pos.y as i64;
        let k = dy.unsigned_abs() as usize;
        // Feature membership is constant on |dx| intervals that end at the
        // wedge boundaries and the annulus limits.
        let mut ends = [usize::MAX; 4];
        let mut n = 0;
        if k > 0 {
            let (vertical, diagonal) = wedge_limits(k);
            ends[0] = vertical;
            ends[1] = diagonal;
            n = 2;
        }
        ends[n] = ANNULUS_LIMITS[0];
        ends[n + 1] = ANNULUS_LIMITS[1];
        let ends = &mut ends[..n + 2];
        ends.sort_unstable();

        let mut a = if k == 0 { 1 } else { 0 };
        let mut next = 0;
        while a <= max_ax {
            while next < ends.len() && ends[next] < a {
                next += 1;
            }
            let e = if next < ends.len() { ends[next].min(max_ax) } else { max_ax };
            if a == 0 {
                let feature = multires_index(0, dy).expect("dy != 0");
                let x0 = pos.x.saturating_sub(e);
                let x1 = (pos.x + e).min(spec.width - 1);
                f(Segment { y, x0, x1, feature });
            } else {
                if pos.x + a < spec.width {
                    let feature = multires_index(a as i64, dy).expect("dx != 0");
                    f(Segment { y, x0: pos.x + a, x1: (pos.x + e).min(spec.width - 1), feature });
                }
                if pos.x >= a {
                    let feature = multires_index(-(a as i64), dy).expect("dx != 0");
                    f(Segment { y, x0: pos.x.saturating_sub(e), x1: pos.x - a, feature });
                }
            }
            a = e + 1;
        }
    }
}

/// All MultiRes segments around `pos`.
pub fn segments(spec: GridSpec, pos: Cell) -> Vec<Segment> {
    let mut out = Vec::new();
    for_each_segment(spec, pos, |s| out.push(s));
    out
}

/// For a row at vertical distance `k > 0`: the largest `|dx|` still in the
/// N/S wedge and the largest `|dx|` still in a diagonal wedge. Uses the same
/// comparisons as [`sector_of`] so both agree exactly.
fn wedge_limits(k: usize) -> (usize, usize) {
    let kf = k as f64;
    let mut vertical = libm::floor(kf / STEEP) as usize;
    while ((vertical + 1) as f64) * STEEP < kf {
        vertical += 1;
    }
    while vertical > 0 && !((vertical as f64) * STEEP < kf) {
        vertical -= 1;
    }
    let mut diagonal = libm::floor(kf * STEEP) as usize;
    while kf * STEEP < diagonal as f64 {
        diagonal -= 1;
    }
    while !(kf * STEEP < (diagonal + 1) as f64) {
        diagonal += 1;
    }
    (vertical, diagonal)
}

fn multires_into(map: &ProbabilityMap, pos: Cell, out: &mut [f64]) {
    let mut sums = [0.0; MULTIRES_DIM];
    let mut counts = [0usize; MULTIRES_DIM];
    for_each_segment(map.spec(), pos, |s| {
        sums[s.feature] += map.row_sum(s.y, s.x0, s.x1);
        counts[s.feature] += s.x1 - s.x0 + 1;
    });
    for i in 0..MULTIRES_DIM {
        out[i] = if counts[i] == 0 { 0.0 } else { (sums[i] / counts[i] as f64).max(0.0) };
    }
}
