//! The coarse-grid prototype task: tabular Sarsa on a 3-level grid with a
//! synthetic reward of +1 near a hidden target and -1 elsewhere.
//!
//! Every episode is an independent session: fresh table, hidden target and
//! start state drawn from the seed. It ends on entering the rewarded region.

use coexplorer_core::baseline::{sarsa_policy, sarsa_terminal_update, sarsa_update, three_level_space, QTable, SarsaParams};
use coexplorer_core::policy::random_state;
use coexplorer_core::space::{apply_action, legal_actions};
use coexplorer_core::{ActionId, ParameterState, SpaceConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// L∞ radius of the rewarded region around the target.
pub const REWARD_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PilotAgent {
    Sarsa(SarsaParams),
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotSpec {
    pub dims: usize,
    /// Step limit.
    pub budget: u64,
    pub seed: u64,
}

impl Default for PilotSpec {
    fn default() -> Self {
        Self { dims: 12, budget: 5000, seed: 0 }
    }
}

pub fn pilot_reward(state: &ParameterState, target: &ParameterState) -> f64 {
    if state.linf_distance(target) <= REWARD_RADIUS + 1e-9 {
        1.0
    } else {
        -1.0
    }
}

/// Hidden target and start state for a seed. The start always lies outside
/// the rewarded region. Both agent kinds see the same task.
pub fn pilot_setup(space: &SpaceConfig, seed: u64) -> (ParameterState, ParameterState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7069_6c6f_74);
    let target = random_state(space, &mut rng);
    loop {
        let start = random_state(space, &mut rng);
        if pilot_reward(&start, &target) < 0.0 {
            return (target, start);
        }
    }
}

fn choose(agent: PilotAgent, q: &QTable, space: &SpaceConfig, s: &ParameterState, rng: &mut ChaCha8Rng) -> ActionId {
    match agent {
        PilotAgent::Sarsa(p) => sarsa_policy(q, space, s, p.epsilon, rng),
        PilotAgent::Random => *legal_actions(s, space).choose(rng).expect("grid states have legal actions"),
    }
}

/// Steps to the rewarded region, or `None` if the budget ran out.
pub fn run_pilot(agent: PilotAgent, spec: &PilotSpec) -> Option<u64> {
    let space = three_level_space(spec.dims).expect("valid pilot space");
    let (target, mut state) = pilot_setup(&space, spec.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(2));
    let mut q = QTable::new();
    let mut action = choose(agent, &q, &space, &state, &mut rng);
    for step in 1..=spec.budget {
        let next = apply_action(&state, action, &space).expect("legal action");
        let r = pilot_reward(&next, &target);
        if r > 0.0 {
            if let PilotAgent::Sarsa(p) = agent {
                sarsa_terminal_update(&mut q, &space, &state, action, r, &p);
            }
            return Some(step);
        }
        let next_action = choose(agent, &q, &space, &next, &mut rng);
        if let PilotAgent::Sarsa(p) = agent {
            sarsa_update(&mut q, &space, &state, action, r, &next, next_action, &p);
        }
        state = next;
        action = next_action;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_region_is_one_level_in_every_dimension() {
        let space = three_level_space(2).unwrap();
        let at = |l: [u32; 2]| space.from_levels(&l).unwrap();
        let target = at([0, 1]);
        assert_eq!(pilot_reward(&at([1, 2]), &target), 1.0);
        assert_eq!(pilot_reward(&at([0, 0]), &target), 1.0);
        assert_eq!(pilot_reward(&at([2, 1]), &target), -1.0);
    }

    #[test]
    fn starts_lie_outside_the_region() {
        let space = three_level_space(12).unwrap();
        for seed in 0..50 {
            let (target, start) = pilot_setup(&space, seed);
            assert_eq!(pilot_reward(&start, &target), -1.0);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let spec = PilotSpec { seed: 9, budget: 500, ..PilotSpec::default() };
        let sarsa = PilotAgent::Sarsa(SarsaParams::default());
        assert_eq!(run_pilot(sarsa, &spec), run_pilot(sarsa, &spec));
        assert_eq!(run_pilot(PilotAgent::Random, &spec), run_pilot(PilotAgent::Random, &spec));
    }
}
