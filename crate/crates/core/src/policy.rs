//! Action selection: greedy on the reward model, or with probability ε a
//! step toward the least visited neighbour.

use rand::Rng;

use crate::density::DensityModel;
use crate::reward::RewardModel;
use crate::space::{apply_action, legal_actions, ActionId, ParameterState, SpaceConfig};

/// `ε(t) = end + (start - end) * exp(-t / decay)`; ε is the probability of
/// taking an exploratory action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 0.1, end: 0.0, decay: 2000.0 }
    }
}

impl EpsilonSchedule {
    pub fn constant(value: f64) -> Self {
        Self { start: value, end: value, decay: 1.0 }
    }

    pub fn epsilon(&self, t: u64) -> f64 {
        self.end + (self.start - self.end) * (-(t as f64) / self.decay).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Greedy,
    Explore,
}

/// Legal action with the largest predicted reward; lowest index wins ties.
pub fn greedy_action(state: &ParameterState, space: &SpaceConfig, model: &RewardModel) -> ActionId {
    let predictions = model.predict(state);
    let mut best: Option<(ActionId, f64)> = None;
    for a in legal_actions(state, space) {
        let v = predictions[a.index()];
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((a, v));
        }
    }
    best.expect("every grid state has a legal action").0
}

/// Legal action whose successor has the lowest density. Ties go to the
/// higher prediction gain, then the lower index.
pub fn exploratory_action(state: &ParameterState, space: &SpaceConfig, density: &DensityModel) -> ActionId {
    let mut best: Option<(ActionId, f64, f64)> = None;
    for a in legal_actions(state, space) {
        let next = apply_action(state, a, space).expect("legal action");
        let p = density.density(&next).unwrap_or(0.0);
        let gain = density.prediction_gain(&next);
        let better = match best {
            None => true,
            Some((_, bp, bg)) => p < bp || (p == bp && gain > bg),
        };
        if better {
            best = Some((a, p, gain));
        }
    }
    best.expect("every grid state has a legal action").0
}

/// ε-greedy selection with novelty-directed exploration.
pub fn select_action<R: Rng + ?Sized>(
    state: &ParameterState,
    space: &SpaceConfig,
    model: &RewardModel,
    density: &DensityModel,
    epsilon: f64,
    rng: &mut R,
) -> (ActionId, Choice) {
    if rng.gen::<f64>() < epsilon {
        (exploratory_action(state, space, density), Choice::Explore)
    } else {
        (greedy_action(state, space, model), Choice::Greedy)
    }
}

/// Uniformly random grid state.
pub fn random_state<R: Rng + ?Sized>(space: &SpaceConfig, rng: &mut R) -> ParameterState {
    let levels: Vec<u32> = (0..space.n()).map(|d| rng.gen_range(0..=space.max_level(d))).collect();
    space.from_levels(&levels).expect("levels within range")
}

/// Jump target: of `samples` uniform random grid states, the one with the
/// largest prediction gain (first drawn wins ties). On an empty model any
/// state qualifies, so a single random state is returned.
pub fn change_zone<R: Rng + ?Sized>(density: &DensityModel, space: &SpaceConfig, samples: usize, rng: &mut R) -> ParameterState {
    if density.total() == 0 {
        return random_state(space, rng);
    }
    let mut best = random_state(space, rng);
    let mut best_gain = density.prediction_gain(&best);
    for _ in 1..samples {
        let s = random_state(space, rng);
        let gain = density.prediction_gain(&s);
        if gain > best_gain {
            best = s;
            best_gain = gain;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::TileCoder;
    use crate::space::{snap_to_grid, Sign};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fresh(n: usize) -> (SpaceConfig, RewardModel, DensityModel) {
        let space = SpaceConfig::unit(n, 0.01).unwrap();
        let model = RewardModel::new(n, 2, 16, 0.002, 32, &mut ChaCha8Rng::seed_from_u64(0));
        let density = DensityModel::new(TileCoder::new(vec![0.0; n], 64, 0.4));
        (space, model, density)
    }

    #[test]
    fn schedule_values() {
        let e = EpsilonSchedule::default();
        assert_eq!(e.epsilon(0), 0.1);
        assert!((e.epsilon(2000) - 0.1 * (-1.0f64).exp()).abs() < 1e-9);
        assert!((e.epsilon(2000) - 0.0368).abs() < 1e-4);
        assert!(e.epsilon(1_000_000) < 1e-12);
        let mut prev = f64::INFINITY;
        for t in (0..20_000).step_by(100) {
            let v = e.epsilon(t);
            assert!(v < prev && (0.0..=0.1).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn untrained_greedy_picks_first_action() {
        let (space, model, density) = fresh(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, how) = select_action(&space.center(), &space, &model, &density, 0.0, &mut rng);
        assert_eq!((a, how), (ActionId::new(0, Sign::Plus), Choice::Greedy));
    }

    #[test]
    fn greedy_ignores_constant_shift() {
        let (space, mut model, _) = fresh(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        model.network_mut().reinitialize(crate::reward::OutputInit::Random, &mut rng);
        let s = snap_to_grid(&[0.3, 0.6], &space).unwrap();
        let before = greedy_action(&s, &space, &model);
        let range = model.network().output_layer_range();
        let bias_start = range.end - 4;
        for b in &mut model.network_mut().params_mut()[bias_start..range.end] {
            *b += 3.5;
        }
        assert_eq!(greedy_action(&s, &space, &model), before);
    }

    #[test]
    fn exploration_finds_the_unvisited_neighbour() {
        let space = SpaceConfig::unit(2, 0.1).unwrap();
        let model = RewardModel::new(2, 1, 4, 0.002, 32, &mut ChaCha8Rng::seed_from_u64(0));
        // One tiling with tiles narrower than a grid step: every grid point owns a tile.
        let mut density = DensityModel::new(TileCoder::new(vec![0.0; 2], 1, 0.1));
        let s = snap_to_grid(&[0.5, 0.5], &space).unwrap();
        let neighbours: Vec<_> = legal_actions(&s, &space).into_iter().map(|a| (a, apply_action(&s, a, &space).unwrap())).collect();
        let unvisited = ActionId::new(1, Sign::Minus);
        for (a, n) in &neighbours {
            if *a != unvisited {
                density.update(n);
            }
        }
        density.update(&s);
        // Brute-force tally: only the chosen neighbour has zero visits.
        for (a, n) in &neighbours {
            assert_eq!(density.density(n).unwrap() == 0.0, *a == unvisited);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, how) = select_action(&s, &space, &model, &density, 1.0, &mut rng);
        assert_eq!((a, how), (unvisited, Choice::Explore));
    }

    #[test]
    fn change_zone_on_empty_model_is_seeded() {
        let (space, _, density) = fresh(4);
        let a = change_zone(&density, &space, 1000, &mut ChaCha8Rng::seed_from_u64(5));
        let b = change_zone(&density, &space, 1000, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        assert!(space.validate(&a).is_ok());
    }

    #[test]
    fn change_zone_leaves_the_visited_corner() {
        let (space, _, mut density) = fresh(3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut visited = Vec::new();
        for _ in 0..300 {
            let levels: Vec<u32> = (0..3).map(|_| rng.gen_range(0..=10)).collect();
            let s = space.from_levels(&levels).unwrap();
            density.update(&s);
            visited.push(s);
        }
        let mut dens: Vec<f64> = visited.iter().map(|s| density.density(s).unwrap()).collect();
        dens.sort_by(f64::total_cmp);
        let median = dens[dens.len() / 2];
        let target = change_zone(&density, &space, 1000, &mut ChaCha8Rng::seed_from_u64(12));
        assert!(density.density(&target).unwrap() < median);
        assert_eq!(target, change_zone(&density, &space, 1000, &mut ChaCha8Rng::seed_from_u64(12)));
    }

    proptest! {
        #[test]
        fn selection_is_always_legal(levels in prop::collection::vec(prop_oneof![Just(0u32), Just(100u32), 0u32..=100], 3), eps in 0.0f64..=1.0, seed in any::<u64>()) {
            let (space, model, mut density) = fresh(3);
            let s = space.from_levels(&levels).unwrap();
            density.update(&s);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, _) = select_action(&s, &space, &model, &density, eps, &mut rng);
            prop_assert!(legal_actions(&s, &space).contains(&a));
            let next = apply_action(&s, a, &space).unwrap();
            prop_assert!(space.validate(&next).is_ok());
            let z = change_zone(&density, &space, 50, &mut rng);
            prop_assert!(space.validate(&z).is_ok());
        }
    }
}
