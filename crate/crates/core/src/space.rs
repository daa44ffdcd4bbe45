//! Bounded, grid-aligned parameter space and unit-step actions.
//!
//! Every coordinate of a [`ParameterState`] is kept on the grid
//! `lo + k * step`. States are always rebuilt from integer levels, so a move
//! followed by its opposite returns the bit-identical state.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking that a value lies on the grid.
pub const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("illegal action {action} at state {state:?}")]
    IllegalAction { action: ActionId, state: Vec<f64> },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid space configuration: {0}")]
    InvalidConfig(String),
    #[error("value {value} in dimension {dim} is off the grid or out of bounds")]
    OffGrid { dim: usize, value: f64 },
}

/// Shape of the explored space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    n: usize,
    step: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Number of steps between `lo` and `hi`, per dimension.
    #[serde(skip)]
    levels: Vec<u32>,
}

impl SpaceConfig {
    /// `n` dimensions normalized to `[0, 1]`.
    pub fn unit(n: usize, step: f64) -> Result<Self, SpaceError> {
        Self::with_bounds(vec![0.0; n], vec![1.0; n], step)
    }

    pub fn with_bounds(lo: Vec<f64>, hi: Vec<f64>, step: f64) -> Result<Self, SpaceError> {
        let n = lo.len();
        if n == 0 {
            return Err(SpaceError::InvalidConfig("dimension count must be at least 1".into()));
        }
        if hi.len() != n {
            return Err(SpaceError::DimensionMismatch { expected: n, got: hi.len() });
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(SpaceError::InvalidConfig(format!("step must be positive, got {step}")));
        }
        let mut levels = Vec::with_capacity(n);
        for (d, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            let span = h - l;
            if !(span.is_finite() && span >= step) {
                return Err(SpaceError::InvalidConfig(format!(
                    "dimension {d}: range [{l}, {h}] shorter than step {step}"
                )));
            }
            let count = span / step;
            let rounded = count.round();
            if (count - rounded).abs() > GRID_TOLERANCE * rounded.max(1.0) {
                return Err(SpaceError::InvalidConfig(format!(
                    "dimension {d}: range {span} is not a whole number of steps of {step}"
                )));
            }
            levels.push(rounded as u32);
        }
        Ok(Self { n, step, lo, hi, levels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn lo(&self, dim: usize) -> f64 {
        self.lo[dim]
    }

    pub fn hi(&self, dim: usize) -> f64 {
        self.hi[dim]
    }

    /// Highest grid level of `dim` (the level of `hi`).
    pub fn max_level(&self, dim: usize) -> u32 {
        self.levels[dim]
    }

    /// Number of actions, `2n`.
    pub fn num_actions(&self) -> usize {
        2 * self.n
    }

    pub fn value_at(&self, dim: usize, level: u32) -> f64 {
        if level == self.levels[dim] {
            self.hi[dim]
        } else {
            self.lo[dim] + f64::from(level) * self.step
        }
    }

    /// Grid level of a value assumed to already lie on the grid.
    fn level_of(&self, dim: usize, value: f64) -> i64 {
        ((value - self.lo[dim]) / self.step).round() as i64
    }

    /// State with every coordinate at the grid point nearest the middle of its range.
    pub fn center(&self) -> ParameterState {
        let raw: Vec<f64> = (0..self.n).map(|d| 0.5 * (self.lo[d] + self.hi[d])).collect();
        snap_to_grid(&raw, self).expect("center has n coordinates")
    }

    pub fn from_levels(&self, levels: &[u32]) -> Result<ParameterState, SpaceError> {
        if levels.len() != self.n {
            return Err(SpaceError::DimensionMismatch { expected: self.n, got: levels.len() });
        }
        let mut values = Vec::with_capacity(self.n);
        for (d, &k) in levels.iter().enumerate() {
            if k > self.levels[d] {
                return Err(SpaceError::OffGrid { dim: d, value: self.lo[d] + f64::from(k) * self.step });
            }
            values.push(self.value_at(d, k));
        }
        Ok(ParameterState { values })
    }

    /// Grid levels of a valid state.
    pub fn levels(&self, state: &ParameterState) -> Vec<u32> {
        state
            .values
            .iter()
            .enumerate()
            .map(|(d, &v)| self.level_of(d, v).clamp(0, i64::from(self.levels[d])) as u32)
            .collect()
    }

    /// Checks bounds and grid alignment of every coordinate.
    pub fn validate(&self, state: &ParameterState) -> Result<(), SpaceError> {
        if state.values.len() != self.n {
            return Err(SpaceError::DimensionMismatch { expected: self.n, got: state.values.len() });
        }
        for (d, &v) in state.values.iter().enumerate() {
            let in_bounds = v >= self.lo[d] - GRID_TOLERANCE && v <= self.hi[d] + GRID_TOLERANCE;
            let k = self.level_of(d, v);
            let on_grid = (self.lo[d] + k as f64 * self.step - v).abs() <= GRID_TOLERANCE;
            if !(v.is_finite() && in_bounds && on_grid) {
                return Err(SpaceError::OffGrid { dim: d, value: v });
            }
        }
        Ok(())
    }
}

/// A point of the grid, one normalized value per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterState {
    values: Vec<f64>,
}

impl ParameterState {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn linf_distance(&self, other: &ParameterState) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn l2_distance(&self, other: &ParameterState) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// One unit step on one dimension.
///
/// Actions are indexed `2 * dim` for the upward move and `2 * dim + 1` for
/// the downward move; reward model outputs use the same layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId {
    pub dim: usize,
    pub sign: Sign,
}

impl ActionId {
    pub fn new(dim: usize, sign: Sign) -> Self {
        Self { dim, sign }
    }

    pub fn index(self) -> usize {
        2 * self.dim + usize::from(self.sign == Sign::Minus)
    }

    pub fn from_index(index: usize) -> Self {
        let sign = if index % 2 == 0 { Sign::Plus } else { Sign::Minus };
        Self { dim: index / 2, sign }
    }

    pub fn opposite(self) -> Self {
        Self { dim: self.dim, sign: self.sign.flip() }
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "{s}dim{}", self.dim)
    }
}

fn is_legal(levels: &[u32], action: ActionId, cfg: &SpaceConfig) -> bool {
    match action.sign {
        Sign::Plus => levels[action.dim] < cfg.max_level(action.dim),
        Sign::Minus => levels[action.dim] > 0,
    }
}

/// All moves that keep the state inside the bounds, in action-index order.
pub fn legal_actions(state: &ParameterState, cfg: &SpaceConfig) -> Vec<ActionId> {
    let levels = cfg.levels(state);
    (0..cfg.num_actions())
        .map(ActionId::from_index)
        .filter(|&a| is_legal(&levels, a, cfg))
        .collect()
}

pub fn apply_action(
    state: &ParameterState,
    action: ActionId,
    cfg: &SpaceConfig,
) -> Result<ParameterState, SpaceError> {
    if action.dim >= cfg.n() {
        return Err(SpaceError::IllegalAction { action, state: state.values.clone() });
    }
    let mut levels = cfg.levels(state);
    if !is_legal(&levels, action, cfg) {
        return Err(SpaceError::IllegalAction { action, state: state.values.clone() });
    }
    match action.sign {
        Sign::Plus => levels[action.dim] += 1,
        Sign::Minus => levels[action.dim] -= 1,
    }
    let mut values = state.values.clone();
    values[action.dim] = cfg.value_at(action.dim, levels[action.dim]);
    Ok(ParameterState { values })
}

/// Clamps each coordinate to its bounds and rounds it to the nearest grid
/// point. Exact midpoints round to the even level.
pub fn snap_to_grid(raw: &[f64], cfg: &SpaceConfig) -> Result<ParameterState, SpaceError> {
    if raw.len() != cfg.n() {
        return Err(SpaceError::DimensionMismatch { expected: cfg.n(), got: raw.len() });
    }
    let values = raw
        .iter()
        .enumerate()
        .map(|(d, &v)| {
            // NaN snaps to the lower bound.
            let v = if v.is_nan() { cfg.lo(d) } else { v.clamp(cfg.lo(d), cfg.hi(d)) };
            let k = ((v - cfg.lo(d)) / cfg.step()).round_ties_even();
            let k = (k.max(0.0) as u32).min(cfg.max_level(d));
            cfg.value_at(d, k)
        })
        .collect();
    Ok(ParameterState { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn act(dim: usize, sign: Sign) -> ActionId {
        ActionId::new(dim, sign)
    }

    #[test]
    fn interior_state_has_all_moves() {
        let cfg = SpaceConfig::unit(10, 0.01).unwrap();
        let s = snap_to_grid(&[0.5; 10], &cfg).unwrap();
        assert_eq!(legal_actions(&s, &cfg).len(), 20);
    }

    #[test]
    fn bounds_remove_outward_moves() {
        let cfg = SpaceConfig::unit(2, 0.01).unwrap();
        let s = snap_to_grid(&[0.0, 1.0], &cfg).unwrap();
        assert_eq!(legal_actions(&s, &cfg), vec![act(0, Sign::Plus), act(1, Sign::Minus)]);

        let cfg = SpaceConfig::unit(1, 0.01).unwrap();
        let s = snap_to_grid(&[0.0], &cfg).unwrap();
        assert_eq!(legal_actions(&s, &cfg), vec![act(0, Sign::Plus)]);
    }

    #[test]
    fn apply_moves_one_coordinate() {
        let cfg = SpaceConfig::unit(10, 0.01).unwrap();
        let s = snap_to_grid(&[0.5; 10], &cfg).unwrap();
        let next = apply_action(&s, act(3, Sign::Plus), &cfg).unwrap();
        assert!((next.values()[3] - 0.51).abs() < 1e-12);
        for d in (0..10).filter(|&d| d != 3) {
            assert_eq!(next.values()[d], 0.5);
        }
        let back = apply_action(&next, act(3, Sign::Minus), &cfg).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn apply_past_upper_bound_is_illegal() {
        let cfg = SpaceConfig::unit(2, 0.01).unwrap();
        let s = snap_to_grid(&[1.0, 0.3], &cfg).unwrap();
        assert!(matches!(
            apply_action(&s, act(0, Sign::Plus), &cfg),
            Err(SpaceError::IllegalAction { .. })
        ));
    }

    #[test]
    fn snap_clamps_and_rounds() {
        let cfg = SpaceConfig::unit(2, 0.01).unwrap();
        let s = snap_to_grid(&[0.503, -0.2], &cfg).unwrap();
        assert_eq!(s.values(), &[0.5, 0.0]);
        assert_eq!(snap_to_grid(s.values(), &cfg).unwrap(), s);
        assert!(matches!(
            snap_to_grid(&[0.1], &cfg),
            Err(SpaceError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn snap_midpoint_rounds_half_even() {
        // 0.005 / 0.01 evaluates to exactly 0.5 in binary floating point, so
        // the tie goes to the even level 0; 0.015 / 0.01 lands just below 1.5.
        assert_eq!(0.005_f64 / 0.01, 0.5);
        let cfg = SpaceConfig::unit(1, 0.01).unwrap();
        assert_eq!(snap_to_grid(&[0.005], &cfg).unwrap().values(), &[0.0]);
        let cfg = SpaceConfig::unit(1, 0.5).unwrap();
        assert_eq!(snap_to_grid(&[0.25], &cfg).unwrap().values(), &[0.0]);
        assert_eq!(snap_to_grid(&[0.75], &cfg).unwrap().values(), &[1.0]);
    }

    #[test]
    fn config_rejects_bad_grids() {
        assert!(SpaceConfig::unit(0, 0.01).is_err());
        assert!(SpaceConfig::unit(2, 0.0).is_err());
        assert!(SpaceConfig::unit(2, 0.3).is_err());
        assert!(SpaceConfig::unit(2, 1.5).is_err());
        assert!(SpaceConfig::unit(2, 0.5).is_ok());
        let cfg = SpaceConfig::with_bounds(vec![-1.0, 0.0], vec![1.0, 2.0], 0.25).unwrap();
        assert_eq!(cfg.max_level(0), 8);
        assert_eq!(cfg.center().values(), &[0.0, 1.0]);
    }

    #[test]
    fn action_index_layout() {
        assert_eq!(act(0, Sign::Plus).index(), 0);
        assert_eq!(act(0, Sign::Minus).index(), 1);
        assert_eq!(act(4, Sign::Minus).index(), 9);
        for i in 0..20 {
            assert_eq!(ActionId::from_index(i).index(), i);
        }
    }

    fn grid_state(n: usize) -> impl Strategy<Value = (SpaceConfig, ParameterState)> {
        let cfg = SpaceConfig::unit(n, 0.05).unwrap();
        prop::collection::vec(0u32..=20, n).prop_map(move |levels| {
            let s = cfg.from_levels(&levels).unwrap();
            (cfg.clone(), s)
        })
    }

    proptest! {
        #[test]
        fn legal_moves_stay_in_bounds_and_move_one_step((cfg, s) in (1usize..6).prop_flat_map(grid_state)) {
            let actions = legal_actions(&s, &cfg);
            prop_assert!(!actions.is_empty());
            for a in actions {
                let next = apply_action(&s, a, &cfg).unwrap();
                prop_assert!(cfg.validate(&next).is_ok());
                prop_assert!((s.linf_distance(&next) - cfg.step()).abs() < 1e-12);
            }
        }

        #[test]
        fn snap_is_idempotent(raw in prop::collection::vec(-0.5f64..1.5, 3)) {
            let cfg = SpaceConfig::unit(3, 0.01).unwrap();
            let once = snap_to_grid(&raw, &cfg).unwrap();
            prop_assert!(cfg.validate(&once).is_ok());
            prop_assert_eq!(snap_to_grid(once.values(), &cfg).unwrap(), once);
        }
    }
}
