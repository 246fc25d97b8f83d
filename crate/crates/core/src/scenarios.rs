//! Bundled maps used by the CLI defaults and the acceptance runs.

use alloc::vec;

use crate::error::Result;
use crate::math;
use crate::probmap::{generate_map, random_mixture, GaussianComponent, GaussianMixture, GridSpec, ProbabilityMap};

/// Seed of the bundled 30x30 training mixture.
pub const TRAINING_SEED: u64 = 1;
pub const TRAINING_COMPONENTS: usize = 4;

pub fn standard_grid() -> GridSpec {
    GridSpec::sized(30, 30).expect("30x30 is a valid grid")
}

/// Seed-generated mixture used for training.
pub fn training_mixture() -> GaussianMixture {
    training_mixture_for(standard_grid())
}

/// The training mixture's recipe on another grid.
pub fn training_mixture_for(spec: GridSpec) -> GaussianMixture {
    random_mixture(TRAINING_COMPONENTS, spec, TRAINING_SEED).expect("component count is positive")
}

pub fn training_map() -> ProbabilityMap {
    generate_map(&training_mixture(), standard_grid()).expect("training mixture lies on the grid")
}

/// Two separated blobs scaled to `spec`: a 30x30 grid gets means (8,8) and
/// (22,20), sigma 3, equal weights.
pub fn two_gaussian_mixture(spec: GridSpec) -> GaussianMixture {
    let sx = spec.width as f64 / 30.0;
    let sy = spec.height as f64 / 30.0;
    GaussianMixture::new(vec![
        GaussianComponent::new([8.0 * sx, 8.0 * sy], [3.0 * sx, 3.0 * sy], 0.5),
        GaussianComponent::new([22.0 * sx, 20.0 * sy], [3.0 * sx, 3.0 * sy], 0.5),
    ])
    .expect("fixed components are valid")
}

pub fn two_gaussian_map(spec: GridSpec) -> Result<ProbabilityMap> {
    generate_map(&two_gaussian_mixture(spec), spec)
}

/// Non-Gaussian prior: mass concentrated on a circular band of radius
/// 0.3 * min(width, height) around the grid center, band width 1.5 cells.
pub fn ring_map(spec: GridSpec) -> Result<ProbabilityMap> {
    let cx = (spec.width as f64 - 1.0) / 2.0;
    let cy = (spec.height as f64 - 1.0) / 2.0;
    let radius = 0.3 * spec.width.min(spec.height) as f64;
    let band = 1.5;
    let mut map = ProbabilityMap::from_fn(spec, |c| {
        let (dx, dy) = (c.x as f64 - cx, c.y as f64 - cy);
        let d = math::sqrt(dx * dx + dy * dy) - radius;
        math::exp(-d * d / (2.0 * band * band))
    })?;
    map.normalize()?;
    Ok(map)
}
