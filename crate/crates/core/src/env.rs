//! The search MDP.
//!
//! The state is the robot cell plus the current mass map. Actions move one
//! cell North, East, South or West and scan the cell entered: its mass is
//! paid out as reward and cleared (probability of detection 1). The start
//! cell is scanned at reset, so `rewards[0]` of a trajectory is the mass
//! under the start cell and the reward for action `t` is `rewards[t + 1]`.
//! Off-grid moves are not legal actions.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::features::{extract_state_features, StateFeatures};
use crate::policy::Policy;
pub use crate::probmap::Cell;
use crate::probmap::ProbabilityMap;
use crate::rng::{rng_from_seed, SearchRng};

/// Movement actions in canonical order. The order fixes the layout of
/// state-action feature blocks and breaks argmax ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::North, Action::East, Action::South, Action::West];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    /// (dx, dy); North decreases the row index.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Action::North => (0, -1),
            Action::East => (1, 0),
            Action::South => (0, 1),
            Action::West => (-1, 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::North => "N",
            Action::East => "E",
            Action::South => "S",
            Action::West => "W",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    /// The action moving between two adjacent cells.
    pub fn between(from: Cell, to: Cell) -> Option<Action> {
        let dx = to.x as i64 - from.x as i64;
        let dy = to.y as i64 - from.y as i64;
        Self::ALL.into_iter().find(|a| a.delta() == (dx, dy))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Subset of the four actions, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ActionSet(u8);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);
    pub const ALL: ActionSet = ActionSet(0b1111);

    pub fn contains(self, a: Action) -> bool {
        self.0 & (1 << a.index()) != 0
    }

    pub fn insert(&mut self, a: Action) {
        self.0 |= 1 << a.index();
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in canonical order.
    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |a| self.contains(*a))
    }
}

impl FromIterator<Action> for ActionSet {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        let mut set = ActionSet::EMPTY;
        for a in iter {
            set.insert(a);
        }
        set
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum StartCell {
    Fixed(Cell),
    /// Uniform over all cells, drawn from the rollout's RNG.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvConfig {
    pub gamma: f64,
    /// Maximum number of actions per episode.
    pub horizon: usize,
    pub start: StartCell,
}

impl EnvConfig {
    pub const DEFAULT_GAMMA: f64 = 0.9;
    pub const DEFAULT_HORIZON: usize = 300;

    pub fn new(gamma: f64, horizon: usize, start: StartCell) -> Result<Self> {
        let config = EnvConfig { gamma, horizon, start };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig("gamma must lie in (0, 1)"));
        }
        Ok(())
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            gamma: Self::DEFAULT_GAMMA,
            horizon: Self::DEFAULT_HORIZON,
            start: StartCell::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Cell entered and scanned.
    pub cell: Cell,
    pub reward: f64,
}

impl StepOutcome {
    /// Probability that the target is found by this scan. With a detection
    /// probability of one this is exactly the reward.
    pub fn found_probability(&self) -> f64 {
        self.reward
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pos: Cell,
    map: ProbabilityMap,
}

impl SearchState {
    /// Places the robot without scanning.
    pub fn new(map: ProbabilityMap, pos: Cell) -> Result<Self> {
        map.spec().check_cell(pos)?;
        Ok(SearchState { pos, map })
    }

    /// Places the robot per `config.start` on a private copy of `map` and
    /// scans the start cell. Returns the state and the scan reward.
    pub fn reset_with<R: Rng + ?Sized>(
        map: &ProbabilityMap,
        config: &EnvConfig,
        rng: &mut R,
    ) -> Result<(Self, f64)> {
        config.validate()?;
        let spec = map.spec();
        let pos = match config.start {
            StartCell::Fixed(cell) => {
                spec.check_cell(cell)?;
                cell
            }
            StartCell::Random => spec.cell_at(rng.gen_range(0..spec.num_cells())),
        };
        let mut state = SearchState { pos, map: map.clone() };
        let reward = state.map.clear(pos);
        Ok((state, reward))
    }

    pub fn pos(&self) -> Cell {
        self.pos
    }

    pub fn map(&self) -> &ProbabilityMap {
        &self.map
    }

    pub fn into_map(self) -> ProbabilityMap {
        self.map
    }

    pub fn target(&self, action: Action) -> Option<Cell> {
        let (dx, dy) = action.delta();
        let x = self.pos.x as i64 + dx;
        let y = self.pos.y as i64 + dy;
        self.map.spec().contains(x, y).then(|| Cell::new(x as usize, y as usize))
    }

    pub fn legal_actions(&self) -> ActionSet {
        legal_actions_at(self.map.spec(), self.pos)
    }

    /// Moves and scans. The reward is the entered cell's mass before it is
    /// cleared.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        let cell = self.target(action).ok_or(Error::IllegalAction {
            x: self.pos.x,
            y: self.pos.y,
            action: action.name(),
        })?;
        self.pos = cell;
        let reward = self.map.clear(cell);
        Ok(StepOutcome { cell, reward })
    }
}

pub fn legal_actions_at(spec: crate::probmap::GridSpec, pos: Cell) -> ActionSet {
    Action::ALL
        .into_iter()
        .filter(|a| {
            let (dx, dy) = a.delta();
            spec.contains(pos.x as i64 + dx, pos.y as i64 + dy)
        })
        .collect()
}

/// Seeded reset; see [`SearchState::reset_with`].
pub fn reset(map: &ProbabilityMap, config: &EnvConfig, seed: u64) -> Result<(SearchState, f64)> {
    SearchState::reset_with(map, config, &mut rng_from_seed(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RolloutMode {
    /// Draw actions from the policy (training).
    Sample,
    /// Take the most probable legal action (deployment).
    Argmax,
}

/// One episode. `cells` and `rewards` include the reset scan at index 0;
/// `actions`, `legal` and `features` have one entry per executed action and
/// describe the state the action was chosen in.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: Cell,
    pub horizon: usize,
    pub cells: Vec<Cell>,
    pub actions: Vec<Action>,
    pub legal: Vec<ActionSet>,
    pub features: Vec<StateFeatures>,
    pub rewards: Vec<f64>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.actions.len()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        discounted_return(&self.rewards, gamma)
    }
}

/// `sum_t gamma^t rewards[t]`, with `t = 0` the reset scan.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

/// Runs one episode of at most `config.horizon` actions on a private copy of
/// `map`. The episode ends early only if the robot has no legal move (1x1
/// grid).
pub fn rollout(
    map: &ProbabilityMap,
    policy: &Policy,
    config: &EnvConfig,
    mode: RolloutMode,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = rng_from_seed(seed);
    rollout_with(map, policy, config, mode, &mut rng)
}

pub(crate) fn rollout_with(
    map: &ProbabilityMap,
    policy: &Policy,
    config: &EnvConfig,
    mode: RolloutMode,
    rng: &mut SearchRng,
) -> Result<Trajectory> {
    policy.design().check_compatible(map.spec())?;
    let (mut state, first) = SearchState::reset_with(map, config, rng)?;
    let mut traj = Trajectory {
        start: state.pos(),
        horizon: config.horizon,
        cells: Vec::with_capacity(config.horizon + 1),
        actions: Vec::with_capacity(config.horizon),
        legal: Vec::with_capacity(config.horizon),
        features: Vec::with_capacity(config.horizon),
        rewards: Vec::with_capacity(config.horizon + 1),
    };
    traj.cells.push(state.pos());
    traj.rewards.push(first);
    for _ in 0..config.horizon {
        let legal = state.legal_actions();
        if legal.is_empty() {
            break;
        }
        let phi = extract_state_features(state.map(), state.pos(), policy.design());
        let action = match mode {
            RolloutMode::Sample => policy.sample_action_with(&phi, legal, rng)?,
            RolloutMode::Argmax => policy.argmax_action(&phi, legal)?,
        };
        let outcome = state.step(action)?;
        traj.cells.push(outcome.cell);
        traj.rewards.push(outcome.reward);
        traj.actions.push(action);
        traj.legal.push(legal);
        traj.features.push(phi);
    }
    Ok(traj)
}

/// Argmax path without recording features; used where only the visited
/// cells matter.
pub fn argmax_path(
    map: &ProbabilityMap,
    policy: &Policy,
    start: Cell,
    horizon: usize,
) -> Result<Vec<Cell>> {
    policy.design().check_compatible(map.spec())?;
    let mut state = SearchState::new(map.clone(), start)?;
    state.map.clear(start);
    let mut cells = Vec::with_capacity(horizon + 1);
    cells.push(start);
    let mut phi = StateFeatures::default();
    for _ in 0..horizon {
        let legal = state.legal_actions();
        if legal.is_empty() {
            break;
        }
        crate::features::extract_state_features_into(state.map(), state.pos(), policy.design(), &mut phi);
        let action = policy.argmax_action(&phi, legal)?;
        cells.push(state.step(action)?.cell);
    }
    Ok(cells)
}
