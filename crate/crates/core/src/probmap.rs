//! Discretized target-probability maps.
//!
//! Map coordinates put the center of cell `(x, y)` at the point `(x, y)`;
//! `x` is the column and `y` the row, with row 0 first in row-major storage.
//! Mixture densities are evaluated at cell centers.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::rng_from_seed;

/// A grid cell, `x` = column, `y` = row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn chebyshev(self, other: Cell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    pub fn is_adjacent(self, other: Cell) -> bool {
        self.manhattan(other) == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// Side length of a cell in meters. Metadata only; all planning happens
    /// in cell units.
    pub cell_size: f64,
}

impl GridSpec {
    pub const DEFAULT_CELL_SIZE: f64 = 100.0;

    pub fn new(width: usize, height: usize, cell_size: f64) -> Result<Self> {
        let spec = GridSpec { width, height, cell_size };
        spec.validate()?;
        Ok(spec)
    }

    /// `width x height` grid with 100 m cells.
    pub fn sized(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, Self::DEFAULT_CELL_SIZE)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || !(self.cell_size > 0.0) || !self.cell_size.is_finite() {
            return Err(Error::InvalidGrid {
                width: self.width,
                height: self.height,
                cell_size: self.cell_size,
            });
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as u64) < self.width as u64 && (y as u64) < self.height as u64
    }

    pub fn contains_cell(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn check_cell(&self, cell: Cell) -> Result<()> {
        if self.contains_cell(cell) {
            Ok(())
        } else {
            Err(Error::OutOfBounds { x: cell.x as i64, y: cell.y as i64 })
        }
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.num_cells()).map(|i| self.cell_at(i))
    }

    pub fn center(&self) -> Cell {
        Cell::new((self.width - 1) / 2, (self.height - 1) / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianComponent {
    /// Mean in map coordinates (x, y).
    pub mean: [f64; 2],
    /// Per-axis standard deviation in cells.
    pub sigma: [f64; 2],
    pub weight: f64,
}

impl GaussianComponent {
    pub fn new(mean: [f64; 2], sigma: [f64; 2], weight: f64) -> Self {
        GaussianComponent { mean, sigma, weight }
    }

    fn check(&self, index: usize) -> Result<()> {
        let bad = |reason| Err(Error::InvalidComponent { index, reason });
        if !self.mean.iter().all(|m| m.is_finite()) {
            return bad("mean must be finite");
        }
        if !self.sigma.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return bad("sigma must be positive and finite");
        }
        if !(self.weight > 0.0) || !self.weight.is_finite() {
            return bad("weight must be positive and finite");
        }
        Ok(())
    }

    /// Density of the (unweighted) axis-aligned normal at `(x, y)`.
    pub fn pdf(&self, x: f64, y: f64) -> f64 {
        let zx = (x - self.mean[0]) / self.sigma[0];
        let zy = (y - self.mean[1]) / self.sigma[1];
        math::exp(-0.5 * (zx * zx + zy * zy)) / (2.0 * PI * self.sigma[0] * self.sigma[1])
    }
}

/// A Gaussian mixture prior with weights normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "MixtureRepr"))]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct MixtureRepr {
    components: Vec<GaussianComponent>,
}

#[cfg(feature = "serde")]
impl TryFrom<MixtureRepr> for GaussianMixture {
    type Error = Error;

    fn try_from(repr: MixtureRepr) -> Result<Self> {
        GaussianMixture::new(repr.components)
    }
}

impl GaussianMixture {
    pub fn new(mut components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyMixture);
        }
        for (i, c) in components.iter().enumerate() {
            c.check(i)?;
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        for c in &mut components {
            c.weight /= total;
        }
        Ok(GaussianMixture { components })
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.pdf(x, y)).sum()
    }
}

/// Evaluates `mixture` at every cell center and normalizes to unit mass.
pub fn generate_map(mixture: &GaussianMixture, spec: GridSpec) -> Result<ProbabilityMap> {
    spec.validate()?;
    if mixture.components.is_empty() {
        return Err(Error::EmptyMixture);
    }
    let q: Vec<f64> = spec
        .cells()
        .map(|c| mixture.density(c.x as f64, c.y as f64))
        .collect();
    let mut map = ProbabilityMap::new(spec, q)?;
    map.normalize()?;
    Ok(map)
}

/// Draws a random mixture: means uniform on `[0, width) x [0, height)`,
/// per-axis sigmas uniform on `[side/15, side/5]`, Dirichlet(1, ..., 1)
/// weights.
pub fn random_mixture(num_components: usize, spec: GridSpec, seed: u64) -> Result<GaussianMixture> {
    spec.validate()?;
    if num_components < 1 {
        return Err(Error::InvalidComponentCount(num_components));
    }
    let mut rng = rng_from_seed(seed);
    let (w, h) = (spec.width as f64, spec.height as f64);
    let components = (0..num_components)
        .map(|_| {
            let mean = [rng.gen::<f64>() * w, rng.gen::<f64>() * h];
            let sigma = [
                w / 15.0 + rng.gen::<f64>() * (w / 5.0 - w / 15.0),
                h / 15.0 + rng.gen::<f64>() * (h / 5.0 - h / 15.0),
            ];
            // Exp(1) draws normalized below give a flat Dirichlet.
            let weight = -math::ln(1.0 - rng.gen::<f64>());
            GaussianComponent::new(mean, sigma, weight.max(f64::MIN_POSITIVE))
        })
        .collect();
    GaussianMixture::new(components)
}

/// Per-cell target mass. Sums to one when freshly generated; clearing cells
/// leaves it unnormalized.
///
/// Row prefix sums are kept alongside the values so robot-centric features
/// can aggregate row segments in constant time.
#[derive(Debug, Clone)]
pub struct ProbabilityMap {
    spec: GridSpec,
    q: Vec<f64>,
    // height rows of width + 1 entries; prefix[y][0] = 0.
    prefix: Vec<f64>,
}

impl PartialEq for ProbabilityMap {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.q == other.q
    }
}

impl ProbabilityMap {
    /// Builds a map from row-major values, rejecting negative or non-finite
    /// entries.
    pub fn new(spec: GridSpec, q: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if q.len() != spec.num_cells() {
            return Err(Error::DimensionMismatch { expected: spec.num_cells(), found: q.len() });
        }
        if let Some(i) = q.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            let c = spec.cell_at(i);
            return Err(Error::InvalidMass { x: c.x, y: c.y, value: q[i] });
        }
        let mut map = ProbabilityMap { spec, q, prefix: vec![0.0; spec.height * (spec.width + 1)] };
        for y in 0..spec.height {
            map.rebuild_row(y);
        }
        Ok(map)
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Cell) -> f64) -> Result<Self> {
        spec.validate()?;
        let q = spec.cells().map(&mut f).collect();
        Self::new(spec, q)
    }

    pub fn zeros(spec: GridSpec) -> Result<Self> {
        Self::from_fn(spec, |_| 0.0)
    }

    pub fn uniform(spec: GridSpec) -> Result<Self> {
        let v = 1.0 / spec.num_cells() as f64;
        Self::from_fn(spec, |_| v)
    }

    /// Rescales to unit mass. Fails on an all-zero map.
    pub fn normalize(&mut self) -> Result<()> {
        let total = self.remaining_mass();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroDensity);
        }
        for v in &mut self.q {
            *v /= total;
        }
        for y in 0..self.spec.height {
            self.rebuild_row(y);
        }
        Ok(())
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn into_values(self) -> Vec<f64> {
        self.q
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.q[self.spec.index(cell)]
    }

    pub fn get_signed(&self, x: i64, y: i64) -> Option<f64> {
        self.spec
            .contains(x, y)
            .then(|| self.q[y as usize * self.spec.width + x as usize])
    }

    pub fn set(&mut self, cell: Cell, value: f64) -> Result<()> {
        self.spec.check_cell(cell)?;
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidMass { x: cell.x, y: cell.y, value });
        }
        let i = self.spec.index(cell);
        self.q[i] = value;
        self.rebuild_row(cell.y);
        Ok(())
    }

    /// Zeroes a cell and returns the mass it held.
    pub fn clear(&mut self, cell: Cell) -> f64 {
        let i = self.spec.index(cell);
        let mass = self.q[i];
        if mass != 0.0 {
            self.q[i] = 0.0;
            self.rebuild_row(cell.y);
        }
        mass
    }

    pub fn remaining_mass(&self) -> f64 {
        self.q.iter().sum()
    }

    /// Sum of row `y` over columns `x0..=x1`.
    pub fn row_sum(&self, y: usize, x0: usize, x1: usize) -> f64 {
        let row = &self.prefix[y * (self.spec.width + 1)..(y + 1) * (self.spec.width + 1)];
        row[x1 + 1] - row[x0]
    }

    /// Cell of maximum mass; ties go to the first cell in row-major order.
    pub fn argmax(&self) -> Cell {
        let mut best = 0;
        for (i, v) in self.q.iter().enumerate() {
            if *v > self.q[best] {
                best = i;
            }
        }
        self.spec.cell_at(best)
    }

    fn rebuild_row(&mut self, y: usize) {
        let w = self.spec.width;
        let values = &self.q[y * w..(y + 1) * w];
        let row = &mut self.prefix[y * (w + 1)..(y + 1) * (w + 1)];
        let mut acc = 0.0;
        row[0] = 0.0;
        for (x, v) in values.iter().enumerate() {
            acc += *v;
            row[x + 1] = acc;
        }
    }
}

/// Total mass of a map.
pub fn remaining_mass(map: &ProbabilityMap) -> f64 {
    map.remaining_mass()
}
