//! Human reward model: a small network regressing credited feedback onto
//! one output per action, trained by weighted SGD with a replay memory.

pub mod credit;
pub mod network;
pub mod replay;

use std::io::{BufRead, Write};

use rand::Rng;
use thiserror::Error;

pub use credit::{credit_window, guiding_credit, CreditWindow, CreditedSample, TimedStep, TrajectoryWindow};
pub use network::{Mlp, OutputInit, Target, TrainScope};
pub use replay::ReplayBuffer;

use crate::config::Config;
use crate::space::ParameterState;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("training loss is not finite ({0})")]
    NonFiniteLoss(f64),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct RewardModel {
    net: Mlp,
    learning_rate: f64,
    batch_size: usize,
    scope: TrainScope,
    /// Per-dimension `(lo, hi)`; inputs are mapped to [-1, 1].
    bounds: Vec<(f64, f64)>,
}

impl RewardModel {
    /// Network `n -> hidden x layers -> 2n` with a zero output layer.
    pub fn new<R: Rng + ?Sized>(
        n: usize,
        hidden_layers: usize,
        hidden_units: usize,
        learning_rate: f64,
        batch_size: usize,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![n];
        sizes.extend(std::iter::repeat(hidden_units).take(hidden_layers));
        sizes.push(2 * n);
        Self {
            net: Mlp::new(&sizes, OutputInit::Zero, rng),
            learning_rate,
            batch_size,
            scope: TrainScope::All,
            bounds: vec![(0.0, 1.0); n],
        }
    }

    pub fn from_config<R: Rng + ?Sized>(cfg: &Config, rng: &mut R) -> Self {
        let model = Self::new(cfg.n, cfg.hidden_layers, cfg.hidden_units, cfg.learning_rate, cfg.batch_size, rng);
        match cfg.space() {
            Ok(space) => model.with_bounds((0..cfg.n).map(|d| (space.lo(d), space.hi(d))).collect()),
            Err(_) => model,
        }
    }

    pub fn from_network(net: Mlp, learning_rate: f64, batch_size: usize) -> Self {
        assert_eq!(net.output_len(), 2 * net.input_len(), "one output per action");
        let n = net.input_len();
        Self { net, learning_rate, batch_size, scope: TrainScope::All, bounds: vec![(0.0, 1.0); n] }
    }

    /// Sets the state bounds used to scale network inputs. Defaults to [0, 1].
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        assert_eq!(bounds.len(), self.net.input_len(), "one bound pair per dimension");
        assert!(bounds.iter().all(|(lo, hi)| hi > lo), "bounds must have positive width");
        self.bounds = bounds;
        self
    }

    /// Network input for `state`: each coordinate mapped from `[lo, hi]` to `[-1, 1]`.
    pub fn encode(&self, state: &ParameterState) -> Vec<f64> {
        state
            .values()
            .iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| 2.0 * (v - lo) / (hi - lo) - 1.0)
            .collect()
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Restricts training to the output layer. Diagnostic only.
    pub fn set_train_scope(&mut self, scope: TrainScope) {
        self.scope = scope;
    }

    /// Reward estimate for every action, laid out by [`crate::space::ActionId::index`].
    pub fn predict(&self, state: &ParameterState) -> Vec<f64> {
        self.net.forward(&self.encode(state))
    }

    fn encoded<'a, I>(&self, samples: I) -> Vec<(Vec<f64>, &'a CreditedSample)>
    where
        I: IntoIterator<Item = &'a CreditedSample>,
    {
        samples.into_iter().map(|s| (self.encode(&s.state), s)).collect()
    }

    fn targets<'a>(encoded: &'a [(Vec<f64>, &CreditedSample)]) -> Vec<Target<'a>> {
        encoded
            .iter()
            .map(|(x, s)| Target { input: x, output: s.action.index(), value: s.target, weight: s.weight })
            .collect()
    }

    pub fn loss<'a, I>(&self, samples: I) -> f64
    where
        I: IntoIterator<Item = &'a CreditedSample>,
    {
        let encoded = self.encoded(samples);
        self.net.loss(&Self::targets(&encoded))
    }

    /// One gradient step on the mean weighted squared error of `batch`.
    /// Returns the loss measured before the step.
    pub fn sgd_step<'a, I>(&mut self, batch: I) -> Result<f64, RewardError>
    where
        I: IntoIterator<Item = &'a CreditedSample>,
    {
        let encoded = self.encoded(batch);
        let targets = Self::targets(&encoded);
        if targets.is_empty() {
            return Err(RewardError::EmptyBatch);
        }
        let before = self.net.params().to_vec();
        let loss = self.net.sgd_step(&targets, self.learning_rate, self.scope);
        if !loss.is_finite() || !self.net.is_finite() {
            self.net.params_mut().copy_from_slice(&before);
            return Err(RewardError::NonFiniteLoss(loss));
        }
        Ok(loss)
    }

    /// A step on `batch_size` uniform draws from the replay memory.
    pub fn replay_step<R: Rng + ?Sized>(&mut self, buffer: &ReplayBuffer, rng: &mut R) -> Result<f64, RewardError> {
        let batch = buffer.sample(self.batch_size, rng);
        self.sgd_step(batch)
    }

    /// Whether the replay memory is large enough to train from.
    pub fn can_replay(&self, buffer: &ReplayBuffer) -> bool {
        buffer.len() > 2 * self.batch_size
    }

    pub fn reinitialize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.net.reinitialize(OutputInit::Zero, rng);
    }

    /// Writes the weights as versioned text: a header, the layer widths,
    /// then one parameter per line in the network's flat order.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<(), RewardError> {
        writeln!(out, "coexplorer-weights 1")?;
        let sizes: Vec<String> = self.net.sizes().iter().map(|s| s.to_string()).collect();
        writeln!(out, "{}", sizes.join(" "))?;
        for p in self.net.params() {
            writeln!(out, "{p:?}")?;
        }
        Ok(())
    }

    pub fn read_snapshot<B: BufRead>(input: B, learning_rate: f64, batch_size: usize) -> Result<Self, RewardError> {
        let mut lines = input.lines();
        let mut next = || -> Result<String, RewardError> {
            lines.next().ok_or_else(|| RewardError::Snapshot("truncated".into()))?.map_err(RewardError::from)
        };
        if next()?.trim() != "coexplorer-weights 1" {
            return Err(RewardError::Snapshot("unsupported header".into()));
        }
        let sizes = next()?
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|e| RewardError::Snapshot(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if sizes.len() < 2 || *sizes.last().unwrap() != 2 * sizes[0] {
            return Err(RewardError::Snapshot(format!("bad layer sizes {sizes:?}")));
        }
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let mut net = Mlp::new(&sizes, OutputInit::Zero, &mut rng);
        for p in net.params_mut() {
            *p = next()?.trim().parse().map_err(|e: std::num::ParseFloatError| RewardError::Snapshot(e.to_string()))?;
        }
        Ok(Self::from_network(net, learning_rate, batch_size))
    }
}

/// Forgets everything learned: empties the replay memory and the trajectory,
/// and draws fresh weights.
pub fn reset<R: Rng + ?Sized>(model: &mut RewardModel, buffer: &mut ReplayBuffer, window: &mut TrajectoryWindow, rng: &mut R) {
    buffer.clear();
    window.clear();
    model.reinitialize(rng);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{snap_to_grid, ActionId, Sign, SpaceConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::time::Duration;

    fn model(n: usize, seed: u64) -> RewardModel {
        RewardModel::new(n, 2, 100, 0.002, 32, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn fresh_model_predicts_zero_for_every_action() {
        let cfg = SpaceConfig::unit(10, 0.01).unwrap();
        let m = model(10, 1);
        let p = m.predict(&cfg.center());
        assert_eq!(p, vec![0.0; 20]);
        assert_eq!(m.predict(&cfg.center()), p);
    }

    #[test]
    fn single_sample_converges_to_its_target() {
        let cfg = SpaceConfig::unit(10, 0.01).unwrap();
        let mut m = model(10, 2);
        let s = snap_to_grid(&[0.3, 0.7, 0.5, 0.1, 0.9, 0.5, 0.5, 0.2, 0.4, 0.6], &cfg).unwrap();
        let a = ActionId::new(3, Sign::Minus);
        let sample = CreditedSample::new(s.clone(), a, 1.0, 1.0);
        for _ in 0..500 {
            m.sgd_step([&sample]).unwrap();
        }
        assert!((m.predict(&s)[a.index()] - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_error_batch_leaves_weights() {
        let cfg = SpaceConfig::unit(2, 0.01).unwrap();
        let mut m = model(2, 3);
        let s = snap_to_grid(&[0.4, 0.6], &cfg).unwrap();
        let batch: Vec<_> = (0..4).map(|i| CreditedSample::new(s.clone(), ActionId::from_index(i), 0.0, 0.5)).collect();
        let before = m.network().params().to_vec();
        let loss = m.sgd_step(&batch).unwrap();
        assert_eq!(loss, 0.0);
        let drift = m.network().params().iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-12);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let mut m = model(2, 4);
        assert!(matches!(m.sgd_step(Vec::<&CreditedSample>::new()), Err(RewardError::EmptyBatch)));
    }

    #[test]
    fn divergence_is_reported_and_weights_restored() {
        let cfg = SpaceConfig::unit(2, 0.01).unwrap();
        let mut m = model(2, 5);
        let s = cfg.center();
        let before = m.network().params().to_vec();
        let bad = CreditedSample { state: s, action: ActionId::from_index(0), target: f64::INFINITY, weight: 1.0 };
        assert!(matches!(m.sgd_step([&bad]), Err(RewardError::NonFiniteLoss(_))));
        assert_eq!(m.network().params(), &before[..]);
    }

    #[test]
    fn output_only_training_keeps_other_actions() {
        let cfg = SpaceConfig::unit(2, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut m = RewardModel::from_network(Mlp::new(&[2, 5, 5, 4], OutputInit::Random, &mut rng), 0.01, 32);
        m.set_train_scope(TrainScope::OutputOnly);
        let probe = snap_to_grid(&[0.1, 0.8], &cfg).unwrap();
        let before = m.predict(&probe);
        let a = ActionId::new(1, Sign::Plus);
        let batch: Vec<_> = (0..5)
            .map(|i| CreditedSample::new(snap_to_grid(&[0.2 * i as f64, 0.5], &cfg).unwrap(), a, 1.0, 1.0))
            .collect();
        m.sgd_step(&batch).unwrap();
        let after = m.predict(&probe);
        for i in (0..4).filter(|&i| i != a.index()) {
            assert_eq!(after[i], before[i]);
        }
        assert_ne!(after[a.index()], before[a.index()]);
    }

    #[test]
    fn replay_guard_and_reset() {
        let cfg = SpaceConfig::unit(2, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = model(2, 7);
        let mut buf = ReplayBuffer::new(700);
        let mut win = TrajectoryWindow::new(64);
        let s = cfg.center();
        buf.store((0..64).map(|_| CreditedSample::new(s.clone(), ActionId::from_index(0), 1.0, 1.0)));
        assert!(!m.can_replay(&buf));
        buf.store([CreditedSample::new(s.clone(), ActionId::from_index(1), -1.0, 1.0)]);
        assert!(m.can_replay(&buf));
        m.replay_step(&buf, &mut rng).unwrap();
        assert_ne!(m.predict(&s), vec![0.0; 4]);
        win.push(s.clone(), ActionId::from_index(0), Duration::from_millis(1)).unwrap();

        reset(&mut m, &mut buf, &mut win, &mut rng);
        assert_eq!(m.predict(&s), vec![0.0; 4]);
        assert!(buf.is_empty() && win.is_empty());
        assert!(!m.can_replay(&buf));
        reset(&mut m, &mut buf, &mut win, &mut rng);
        assert_eq!(m.predict(&s), vec![0.0; 4]);
        assert!(buf.is_empty() && win.is_empty());
    }

    #[test]
    fn snapshot_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = RewardModel::from_network(Mlp::new(&[3, 4, 6], OutputInit::Random, &mut rng), 0.002, 32);
        let mut text = Vec::new();
        m.write_snapshot(&mut text).unwrap();
        let back = RewardModel::read_snapshot(&text[..], 0.002, 32).unwrap();
        assert_eq!(back.network(), m.network());
        assert!(RewardModel::read_snapshot(&b"garbage\n"[..], 0.002, 32).is_err());
    }

    #[test]
    fn inputs_span_minus_one_to_one() {
        let space = SpaceConfig::with_bounds(vec![0.0, -2.0], vec![1.0, 2.0], 0.25).unwrap();
        let m = model(2, 0).with_bounds(vec![(0.0, 1.0), (-2.0, 2.0)]);
        let s = snap_to_grid(&[0.0, 2.0], &space).unwrap();
        assert_eq!(m.encode(&s), vec![-1.0, 1.0]);
        let c = snap_to_grid(&[0.5, 0.0], &space).unwrap();
        assert_eq!(m.encode(&c), vec![0.0, 0.0]);
    }
}
