//! Turning one feedback event into weighted regression samples over the
//! recently visited state-action pairs.

use std::collections::VecDeque;
use std::time::Duration;

use thiserror::Error;

use crate::config::GuidingProfile;
use crate::feedback::FeedbackEvent;
use crate::space::{ActionId, ParameterState};

/// A regression sample for the reward network.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditedSample {
    pub state: ParameterState,
    pub action: ActionId,
    pub target: f64,
    pub weight: f64,
}

impl CreditedSample {
    pub fn new(state: ParameterState, action: ActionId, target: f64, weight: f64) -> Self {
        debug_assert!(weight > 0.0 && weight.is_finite(), "sample weight must be positive");
        debug_assert!(target.is_finite(), "sample target must be finite");
        Self { state, action, target, weight }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedStep {
    pub state: ParameterState,
    pub action: ActionId,
    pub time: Duration,
}

#[derive(Debug, Error, PartialEq)]
#[error("trajectory time {got:?} does not follow the previous step at {last:?}")]
pub struct NonMonotonicTime {
    pub last: Duration,
    pub got: Duration,
}

/// The most recent `(state, action, time)` steps, oldest first.
#[derive(Debug, Clone)]
pub struct TrajectoryWindow {
    capacity: usize,
    steps: VecDeque<TimedStep>,
}

impl TrajectoryWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self { capacity, steps: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn clear(&mut self) {
        self.steps.clear();
    }

    pub fn steps(&self) -> impl DoubleEndedIterator<Item = &TimedStep> + ExactSizeIterator {
        self.steps.iter()
    }

    pub fn push(&mut self, state: ParameterState, action: ActionId, time: Duration) -> Result<(), NonMonotonicTime> {
        if let Some(last) = self.steps.back() {
            if time <= last.time {
                return Err(NonMonotonicTime { last: last.time, got: time });
            }
        }
        if self.steps.len() == self.capacity {
            self.steps.pop_front();
        }
        self.steps.push_back(TimedStep { state, action, time });
        Ok(())
    }
}

/// Delay bounds of the uniform credit window, in seconds before the feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CreditWindow {
    pub min_delay: Duration,
    pub max_delay: Duration,
    pub reward_value: f64,
}

impl Default for CreditWindow {
    fn default() -> Self {
        Self {
            min_delay: Duration::from_millis(200),
            max_delay: Duration::from_secs(4),
            reward_value: 1.0,
        }
    }
}

/// Uniform credit over every pair stamped in
/// `[feedback.time - max_delay, feedback.time - min_delay]`.
pub fn credit_window(feedback: &FeedbackEvent, window: &TrajectoryWindow, params: &CreditWindow) -> Vec<CreditedSample> {
    let Some(latest) = feedback.time.checked_sub(params.min_delay) else {
        return Vec::new();
    };
    let earliest = feedback.time.saturating_sub(params.max_delay);
    let credited: Vec<&TimedStep> = window
        .steps()
        .filter(|s| s.time >= earliest && s.time <= latest)
        .collect();
    if credited.is_empty() {
        return Vec::new();
    }
    let weight = 1.0 / credited.len() as f64;
    let target = feedback.valence.as_f64() * params.reward_value;
    credited
        .into_iter()
        .map(|s| CreditedSample::new(s.state.clone(), s.action, target, weight))
        .collect()
}

/// Credit for the last `reward_length` pairs taken at or before the
/// feedback, with a decaying profile; the most recent such pair is `j = 0`.
pub fn guiding_credit(
    feedback: &FeedbackEvent,
    window: &TrajectoryWindow,
    reward_length: usize,
    reward_value: f64,
    profile: GuidingProfile,
) -> Vec<CreditedSample> {
    let sign = feedback.valence.as_f64() * reward_value;
    let recent: Vec<&TimedStep> = window
        .steps()
        .rev()
        .filter(|s| s.time <= feedback.time)
        .take(reward_length)
        .collect();
    let scales: Vec<f64> = match profile {
        GuidingProfile::Exponential => (0..recent.len()).map(|j| (-(j as f64)).exp()).collect(),
        GuidingProfile::Gamma { shape, scale } => {
            let raw: Vec<f64> = recent
                .iter()
                .map(|s| {
                    let delay = feedback.time.saturating_sub(s.time).as_secs_f64();
                    gamma_kernel(delay, shape, scale)
                })
                .collect();
            let peak = raw.iter().cloned().fold(0.0, f64::max);
            if peak > 0.0 {
                raw.iter().map(|r| r / peak).collect()
            } else {
                raw
            }
        }
    };
    recent
        .into_iter()
        .zip(scales)
        .filter(|(_, k)| *k > 0.0)
        .map(|(s, k)| CreditedSample::new(s.state.clone(), s.action, sign * k, 1.0))
        .collect()
}

/// Unnormalized gamma density.
fn gamma_kernel(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return if shape < 1.0 { f64::INFINITY } else if shape == 1.0 { 1.0 } else { 0.0 };
    }
    x.powf(shape - 1.0) * (-x / scale).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::Valence;
    use crate::space::{snap_to_grid, Sign, SpaceConfig};

    fn ten_hz_window(until_ms: u64, capacity: usize) -> TrajectoryWindow {
        let cfg = SpaceConfig::unit(2, 0.01).unwrap();
        let mut w = TrajectoryWindow::new(capacity);
        for (i, ms) in (0..=until_ms).step_by(100).enumerate() {
            let s = snap_to_grid(&[0.01 * (i % 100) as f64, 0.5], &cfg).unwrap();
            w.push(s, ActionId::new(0, Sign::Plus), Duration::from_millis(ms)).unwrap();
        }
        w
    }

    #[test]
    fn uniform_window_at_ten_hertz() {
        // Brute-force enumeration of stamps k * 100 ms within [1000, 4800].
        let expected = (0..=50u64).map(|k| k * 100).filter(|&ms| (1000..=4800).contains(&ms)).count();
        assert_eq!(expected, 39);

        let w = ten_hz_window(5000, 64);
        let fb = FeedbackEvent::guiding(Valence::Positive, Duration::from_secs(5));
        let samples = credit_window(&fb, &w, &CreditWindow::default());
        assert_eq!(samples.len(), expected);
        for s in &samples {
            assert_eq!(s.weight, 1.0 / 39.0);
            assert_eq!(s.target, 1.0);
        }
    }

    #[test]
    fn window_before_any_data_is_empty() {
        let w = ten_hz_window(0, 64);
        let fb = FeedbackEvent::guiding(Valence::Negative, Duration::from_millis(50));
        assert!(credit_window(&fb, &w, &CreditWindow::default()).is_empty());
    }

    #[test]
    fn consecutive_feedbacks_credit_independently() {
        let w = ten_hz_window(5000, 64);
        let a = credit_window(&FeedbackEvent::guiding(Valence::Positive, Duration::from_millis(4900)), &w, &CreditWindow::default());
        let b = credit_window(&FeedbackEvent::guiding(Valence::Negative, Duration::from_secs(5)), &w, &CreditWindow::default());
        assert_eq!(a.len(), 39);
        assert_eq!(b.len(), 39);
        assert!(a.iter().all(|s| s.target == 1.0));
        assert!(b.iter().all(|s| s.target == -1.0));
        let shared = a.iter().filter(|x| b.iter().any(|y| y.state == x.state)).count();
        assert!(shared > 30);
    }

    #[test]
    fn guiding_credit_decays_exponentially() {
        let w = ten_hz_window(5000, 64);
        let fb = FeedbackEvent::guiding(Valence::Positive, Duration::from_secs(5));
        let samples = guiding_credit(&fb, &w, 10, 1.0, GuidingProfile::Exponential);
        assert_eq!(samples.len(), 10);
        assert_eq!(samples[0].target, 1.0);
        assert!((samples[1].target - 0.3679).abs() < 1e-4);
        for (j, s) in samples.iter().enumerate() {
            assert!((s.target - (-(j as f64)).exp()).abs() < 1e-15);
            assert_eq!(s.weight, 1.0);
        }
        let last = w.steps().last().unwrap();
        assert_eq!(samples[0].state, last.state);

        let short = ten_hz_window(300, 64);
        assert_eq!(guiding_credit(&fb, &short, 10, 1.0, GuidingProfile::Exponential).len(), 4);
    }

    #[test]
    fn guiding_credit_skips_later_steps() {
        let w = ten_hz_window(5000, 64);
        let fb = FeedbackEvent::guiding(Valence::Positive, Duration::from_millis(4850));
        let samples = guiding_credit(&fb, &w, 10, 1.0, GuidingProfile::Exponential);
        let stamped_4800 = w.steps().find(|s| s.time == Duration::from_millis(4800)).unwrap();
        assert_eq!(samples[0].state, stamped_4800.state);
        assert_eq!(samples[0].target, 1.0);
    }

    #[test]
    fn gamma_profile_peaks_at_one() {
        let w = ten_hz_window(5000, 64);
        let fb = FeedbackEvent::guiding(Valence::Negative, Duration::from_millis(5100));
        let samples = guiding_credit(&fb, &w, 10, 1.0, GuidingProfile::Gamma { shape: 2.0, scale: 0.3 });
        let min = samples.iter().map(|s| s.target).fold(0.0, f64::min);
        assert_eq!(min, -1.0);
        assert!(samples.iter().all(|s| s.target < 0.0 && s.target >= -1.0));
    }

    #[test]
    fn window_rejects_time_going_backwards() {
        let mut w = ten_hz_window(200, 3);
        assert_eq!(w.len(), 3);
        let s = w.steps().next().unwrap().state.clone();
        assert!(w.push(s.clone(), ActionId::new(1, Sign::Minus), Duration::from_millis(200)).is_err());
        w.push(s, ActionId::new(1, Sign::Minus), Duration::from_millis(300)).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.steps().next().unwrap().time, Duration::from_millis(100));
    }
}
