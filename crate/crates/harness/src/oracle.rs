//! Scripted stand-in for a human giving feedback.

use coexplorer_core::{FeedbackKind, ParameterState, SpaceConfig, Valence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OraclePolicy {
    GuidingOnly,
    /// Guiding feedback, plus a positive zone label whenever the agent is
    /// within `zone_radius` steps of the target.
    Mixed,
}

#[derive(Debug, Clone)]
pub struct OracleUser {
    pub target: ParameterState,
    pub feedback_period: u64,
    pub policy: OraclePolicy,
    /// L∞ radius, in grid steps, inside which a zone label is given.
    pub zone_radius: u32,
}

impl OracleUser {
    pub fn new(target: ParameterState, feedback_period: u64) -> Self {
        assert!(feedback_period >= 1);
        Self { target, feedback_period, policy: OraclePolicy::GuidingOnly, zone_radius: 5 }
    }

    pub fn mixed(mut self) -> Self {
        self.policy = OraclePolicy::Mixed;
        self
    }

    /// Sign of the last move relative to the target: positive when it
    /// reduced the Euclidean distance.
    pub fn judge(&self, before: &ParameterState, after: &ParameterState) -> Valence {
        if after.l2_distance(&self.target) < before.l2_distance(&self.target) {
            Valence::Positive
        } else {
            Valence::Negative
        }
    }

    /// Feedback after the agent's `step`-th move (1-based), if any is due.
    pub fn respond(
        &self,
        step: u64,
        before: &ParameterState,
        after: &ParameterState,
        space: &SpaceConfig,
    ) -> Option<(FeedbackKind, Valence)> {
        if step % self.feedback_period != 0 {
            return None;
        }
        if self.policy == OraclePolicy::Mixed
            && after.linf_distance(&self.target) <= f64::from(self.zone_radius) * space.step() + 1e-9
        {
            return Some((FeedbackKind::Zone, Valence::Positive));
        }
        Some((FeedbackKind::Guiding, self.judge(before, after)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use coexplorer_core::space::snap_to_grid;

    #[test]
    fn sign_follows_distance_change() {
        let space = SpaceConfig::unit(2, 0.01).unwrap();
        let st = |v: [f64; 2]| snap_to_grid(&v, &space).unwrap();
        let oracle = OracleUser::new(st([0.6, 0.5]), 1);
        assert_eq!(oracle.judge(&st([0.5, 0.5]), &st([0.51, 0.5])), Valence::Positive);
        assert_eq!(oracle.judge(&st([0.5, 0.5]), &st([0.49, 0.5])), Valence::Negative);
        // Sideways move away from the target line increases the distance.
        assert_eq!(oracle.judge(&st([0.5, 0.5]), &st([0.5, 0.51])), Valence::Negative);
        assert_eq!(oracle.judge(&st([0.5, 0.52]), &st([0.5, 0.51])), Valence::Positive);
    }

    #[test]
    fn responds_every_period() {
        let space = SpaceConfig::unit(1, 0.01).unwrap();
        let st = |v: f64| snap_to_grid(&[v], &space).unwrap();
        let oracle = OracleUser::new(st(0.9), 5);
        let given: Vec<u64> = (1..=20).filter(|&k| oracle.respond(k, &st(0.5), &st(0.51), &space).is_some()).collect();
        assert_eq!(given, vec![5, 10, 15, 20]);
    }

    #[test]
    fn mixed_oracle_labels_the_target_zone() {
        let space = SpaceConfig::unit(1, 0.01).unwrap();
        let st = |v: f64| snap_to_grid(&[v], &space).unwrap();
        let oracle = OracleUser::new(st(0.5), 1).mixed();
        assert_eq!(oracle.respond(1, &st(0.44), &st(0.45), &space), Some((FeedbackKind::Zone, Valence::Positive)));
        assert_eq!(oracle.respond(1, &st(0.43), &st(0.44), &space), Some((FeedbackKind::Guiding, Valence::Positive)));
    }
}
