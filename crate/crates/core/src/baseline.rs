//! Tabular Sarsa over a coarse grid, with a fixed ε-greedy policy.
//!
//! Used as a comparison baseline. ε here is the probability of a uniformly
//! random exploratory action.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::space::{legal_actions, ActionId, ParameterState, SpaceConfig, SpaceError};

/// Three normalized levels per dimension: 0, 0.5 and 1.
pub fn three_level_space(n: usize) -> Result<SpaceConfig, SpaceError> {
    SpaceConfig::unit(n, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarsaParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for SarsaParams {
    fn default() -> Self {
        Self { alpha: 0.1, gamma: 0.9, epsilon: 0.1 }
    }
}

/// Fixed exploration settings of the three pilot agents.
///
/// The pilot's prose used ε for the probability of the best action, listing
/// ε = 0, 1 and 0.5. The presets are named by behaviour instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotPreset {
    AlwaysExploit,
    AlwaysExplore,
    Balanced,
}

impl PilotPreset {
    /// Probability of a random action.
    pub fn explore_probability(self) -> f64 {
        match self {
            PilotPreset::AlwaysExploit => 0.0,
            PilotPreset::AlwaysExplore => 1.0,
            PilotPreset::Balanced => 0.5,
        }
    }

    pub fn params(self) -> SarsaParams {
        SarsaParams { epsilon: self.explore_probability(), ..SarsaParams::default() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct QTable {
    values: HashMap<(Vec<u32>, usize), f64>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, space: &SpaceConfig, s: &ParameterState, a: ActionId) -> f64 {
        self.values.get(&(space.levels(s), a.index())).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, space: &SpaceConfig, s: &ParameterState, a: ActionId, v: f64) {
        self.values.insert((space.levels(s), a.index()), v);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `q(s,a) += alpha * (r + gamma * q(s',a') - q(s,a))`
#[allow(clippy::too_many_arguments)]
pub fn sarsa_update(
    q: &mut QTable,
    space: &SpaceConfig,
    s: &ParameterState,
    a: ActionId,
    r: f64,
    s_next: &ParameterState,
    a_next: ActionId,
    params: &SarsaParams,
) {
    let current = q.get(space, s, a);
    let next = q.get(space, s_next, a_next);
    q.set(space, s, a, current + params.alpha * (r + params.gamma * next - current));
}

/// Update for a transition that ends the episode: `q(s,a) += alpha * (r - q(s,a))`.
pub fn sarsa_terminal_update(q: &mut QTable, space: &SpaceConfig, s: &ParameterState, a: ActionId, r: f64, params: &SarsaParams) {
    let current = q.get(space, s, a);
    q.set(space, s, a, current + params.alpha * (r - current));
}

/// Greedy with probability `1 - epsilon` (lowest index wins ties),
/// otherwise a uniformly random legal action.
pub fn sarsa_policy<R: Rng + ?Sized>(q: &QTable, space: &SpaceConfig, s: &ParameterState, epsilon: f64, rng: &mut R) -> ActionId {
    let actions = legal_actions(s, space);
    if rng.gen::<f64>() < epsilon {
        return *actions.choose(rng).expect("grid states have legal actions");
    }
    let mut best = actions[0];
    let mut best_v = q.get(space, s, best);
    for &a in &actions[1..] {
        let v = q.get(space, s, a);
        if v > best_v {
            best = a;
            best_v = v;
        }
    }
    best
}
