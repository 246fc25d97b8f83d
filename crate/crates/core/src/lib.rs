//! Policy-gradient search planning over discretized target probability maps.
//!
//! A searcher moves on a grid whose cells carry the probability that a lost
//! target is there. Scanning a cell clears its mass and pays it out as
//! reward, so the discounted return of a search plan equals the expected
//! `gamma^T` of the time `T` at which the target is found. Plans come from a
//! linear softmax policy over robot-centric features, trained with a
//! likelihood-ratio gradient, and are compared against lawnmower and spiral
//! coverage.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, timing and
//! the command-line interface live in the `pgsearch` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod env;
mod error;
pub mod eval;
pub mod features;
mod math;
pub mod policy;
pub mod probmap;
pub mod rng;
pub mod scenarios;
pub mod trainer;

pub use baselines::{
    boustrophedon_path, execute_cells, execute_path, spiral_path, PathOutcome, PlannedPath,
};
pub use env::{
    argmax_path, discounted_return, reset, rollout, Action, ActionSet, Cell, EnvConfig, RolloutMode, SearchState,
    StartCell, StepOutcome, Trajectory,
};
pub use error::{Error, Result};
pub use eval::{
    check_proposition1, check_proposition1_with_hook, check_proposition2, compare_methods,
    enumerate_trajectories, exact_expected_return, CheckMode, ComparisonReport, Method,
    MethodSeries, PropositionReport, VarianceDetail,
};
pub use features::{
    extract_sa_features, extract_state_features, feature_dim, FeatureDesign, FeatureKind,
    StateFeatures,
};
pub use policy::{ActionDistribution, Policy};
pub use probmap::{generate_map, random_mixture, GaussianComponent, GaussianMixture, GridSpec, ProbabilityMap};
pub use trainer::{
    compute_baseline, compute_step_baselines, estimate_gradient, estimate_gradient_per_step, train,
    BaselineKind, IterationRecord, MapSource, TrainConfig, TrainLog,
};
