//! The agent's control loop.
//!
//! A [`Session`] owns every piece of mutable agent state: position, reward
//! model, replay memory, trajectory, density model and history. In
//! autonomous mode the caller drives [`Session::tick`] at the action rate;
//! in stepwise mode each feedback triggers exactly one action.

pub mod history;
pub mod log;

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

pub use history::{HistoryEntry, HistoryTag, SessionHistory};
pub use log::{read_log, LogKind, LogRecord, SessionLog};

use crate::config::{Config, StartMode};
use crate::density::{BonusParams, DensityModel};
use crate::feedback::{FeedbackEvent, FeedbackKind, Valence};
use crate::policy::{change_zone, select_action, Choice, EpsilonSchedule};
use crate::reward::{
    self, credit_window, guiding_credit, CreditWindow, CreditedSample, ReplayBuffer, RewardError, RewardModel,
    TrajectoryWindow,
};
use crate::space::{apply_action, snap_to_grid, ActionId, ParameterState, Sign, SpaceConfig, SpaceError};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("operation needs {expected:?} mode, session is {actual:?}")]
    WrongMode { expected: Mode, actual: Mode },
    #[error("no history entry with id {0}")]
    UnknownHistoryId(u64),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Autonomous,
    Stepwise,
    Paused,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Autonomous => "autonomous",
            Mode::Stepwise => "stepwise",
            Mode::Paused => "paused",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    StartAuto,
    StopAuto,
    ChangeZone,
    Reset,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::StartAuto => "start_auto",
            Command::StopAuto => "stop_auto",
            Command::ChangeZone => "change_zone",
            Command::Reset => "reset",
        }
    }
}

/// Which training route a tick took. Exactly one per tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingBranch {
    Feedback,
    Replay,
    Bonus,
    None,
}

/// Notifications for connected peers, in emission order.
#[derive(Debug, Clone, PartialEq)]
pub enum SessionEvent {
    State { t: u64, values: Vec<f64> },
    HistoryAppend { id: u64, tag: HistoryTag },
    Mode(Mode),
    Epsilon(f64),
    Error { code: String, detail: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub t: u64,
    pub action: ActionId,
    pub choice: Choice,
    pub branch: TrainingBranch,
    pub loss: Option<f64>,
    pub elapsed: Duration,
    pub overrun: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionStats {
    pub ticks: u64,
    pub feedback_trains: u64,
    pub replay_trains: u64,
    pub bonus_trains: u64,
    pub idle_ticks: u64,
    pub overruns: u64,
    /// Feedback consumed before `t` exceeded the reward length.
    pub dropped_feedback: u64,
}

/// Session time source.
#[derive(Debug, Clone)]
pub enum Clock {
    /// Advanced by one action period per tick, or explicitly.
    Simulated { now: Duration },
    Wall { start: Instant },
}

impl Clock {
    pub fn now(&self) -> Duration {
        match self {
            Clock::Simulated { now } => *now,
            Clock::Wall { start } => start.elapsed(),
        }
    }
}

/// Inbound (feedback) pairs leading into `state`: for every dimension and
/// every distance `k = 1..=reward_length`, the state `k` steps away on either
/// side, paired with the action stepping back toward `state`. Predecessors
/// outside the bounds are skipped.
pub fn zone_expand(
    state: &ParameterState,
    valence: Valence,
    space: &SpaceConfig,
    reward_length: usize,
    reward_value: f64,
) -> Vec<CreditedSample> {
    let levels = space.levels(state);
    let target = valence.as_f64() * reward_value;
    let mut out = Vec::with_capacity(2 * space.n() * reward_length);
    for d in 0..space.n() {
        for k in 1..=reward_length as u32 {
            // below the state, stepping up toward it
            if levels[d] >= k {
                let mut pred = levels.clone();
                pred[d] -= k;
                out.push(CreditedSample::new(space.from_levels(&pred).unwrap(), ActionId::new(d, Sign::Plus), target, 1.0));
            }
            // above the state, stepping down toward it
            if levels[d] + k <= space.max_level(d) {
                let mut pred = levels.clone();
                pred[d] += k;
                out.push(CreditedSample::new(space.from_levels(&pred).unwrap(), ActionId::new(d, Sign::Minus), target, 1.0));
            }
        }
    }
    out
}

#[derive(Debug)]
pub struct Session {
    config: Config,
    space: SpaceConfig,
    model: RewardModel,
    buffer: ReplayBuffer,
    window: TrajectoryWindow,
    density: DensityModel,
    schedule: EpsilonSchedule,
    bonus: BonusParams,
    credit: CreditWindow,
    rng: ChaCha8Rng,
    mode: Mode,
    idle_mode: Mode,
    t: u64,
    current: ParameterState,
    pending: VecDeque<FeedbackEvent>,
    history: SessionHistory,
    clock: Clock,
    period: Duration,
    events: Vec<SessionEvent>,
    log: Option<SessionLog>,
    stats: SessionStats,
    training_halted: bool,
}

impl Session {
    /// A session with a simulated clock, starting at the center of the space.
    pub fn new(config: Config) -> Result<Self, SessionError> {
        config.validate()?;
        let space = config.space()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let model = RewardModel::from_config(&config, &mut rng);
        let mode = match config.mode {
            StartMode::Auto => Mode::Autonomous,
            StartMode::Stepwise => Mode::Stepwise,
        };
        let idle_mode = match config.mode {
            StartMode::Auto => Mode::Paused,
            StartMode::Stepwise => Mode::Stepwise,
        };
        let current = space.center();
        let mut session = Self {
            buffer: ReplayBuffer::new(config.replay_capacity),
            window: TrajectoryWindow::new(config.trajectory_capacity),
            density: DensityModel::from_config(&config),
            schedule: EpsilonSchedule {
                start: config.epsilon_start,
                end: config.epsilon_end,
                decay: config.epsilon_decay,
            },
            bonus: BonusParams { beta: config.bonus_beta, c: config.bonus_c },
            credit: CreditWindow {
                min_delay: Duration::from_secs_f64(config.credit_min_delay),
                max_delay: Duration::from_secs_f64(config.credit_max_delay),
                reward_value: config.reward_value,
            },
            period: config.tick_period(),
            space,
            model,
            rng,
            mode,
            idle_mode,
            t: 0,
            current: current.clone(),
            pending: VecDeque::new(),
            history: SessionHistory::new(),
            clock: Clock::Simulated { now: Duration::ZERO },
            events: Vec::new(),
            log: None,
            stats: SessionStats::default(),
            training_halted: false,
            config,
        };
        session.history.append(current, Duration::ZERO);
        Ok(session)
    }

    pub fn with_wall_clock(mut self) -> Self {
        self.clock = Clock::Wall { start: Instant::now() };
        self
    }

    pub fn with_log(mut self, log: SessionLog) -> Self {
        self.log = Some(log);
        self
    }

    /// Moves the simulated clock forward. No effect on a wall clock.
    pub fn advance_clock(&mut self, by: Duration) {
        if let Clock::Simulated { now } = &mut self.clock {
            *now += by;
        }
    }

    pub fn now(&self) -> Duration {
        self.clock.now()
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn space(&self) -> &SpaceConfig {
        &self.space
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn current(&self) -> &ParameterState {
        &self.current
    }

    pub fn history(&self) -> &SessionHistory {
        &self.history
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut RewardModel {
        &mut self.model
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn density(&self) -> &DensityModel {
        &self.density
    }

    pub fn window(&self) -> &TrajectoryWindow {
        &self.window
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    pub fn pending_feedback(&self) -> usize {
        self.pending.len()
    }

    pub fn training_halted(&self) -> bool {
        self.training_halted
    }

    pub fn epsilon(&self) -> f64 {
        self.schedule.epsilon(self.t)
    }

    pub fn tick_period(&self) -> Duration {
        self.period
    }

    /// Takes the events emitted since the last call.
    pub fn drain_events(&mut self) -> Vec<SessionEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn flush_log(&mut self) {
        if let Some(log) = &mut self.log {
            if let Err(e) = log.flush() {
                ::log::warn!("session log flush failed: {e}");
            }
        }
    }

    fn log(&mut self, kind: LogKind, payload: serde_json::Value) {
        let now = self.clock.now();
        if let Some(log) = &mut self.log {
            if let Err(e) = log.record(now, kind, payload) {
                ::log::warn!("session log write failed: {e}");
            }
        }
    }

    fn emit_state(&mut self) {
        let id = self.history.latest().map(|e| e.id).unwrap_or(0);
        let tag = self.history.latest().map(|e| e.tag).unwrap_or(HistoryTag::Neutral);
        self.events.push(SessionEvent::State { t: self.t, values: self.current.values().to_vec() });
        self.events.push(SessionEvent::HistoryAppend { id, tag });
    }

    fn move_to(&mut self, state: ParameterState) {
        self.current = state.clone();
        let now = self.clock.now();
        self.history.append(state, now);
        self.emit_state();
    }

    /// Tags the state the user was looking at when giving `feedback`.
    fn tag_feedback(&mut self, feedback: &FeedbackEvent) {
        let id = match self.history.at_time(feedback.time) {
            Some(e) => e.id,
            None => return,
        };
        self.history.set_tag(id, feedback.valence.into());
        self.events.push(SessionEvent::HistoryAppend { id, tag: feedback.valence.into() });
    }

    fn train_on(&mut self, samples: &[CreditedSample]) -> Option<f64> {
        if self.training_halted || samples.is_empty() {
            return None;
        }
        let result = self.model.sgd_step(samples);
        self.check_training(result)
    }

    fn check_training(&mut self, result: Result<f64, RewardError>) -> Option<f64> {
        match result {
            Ok(loss) => Some(loss),
            Err(e) => {
                ::log::error!("reward model training halted: {e}");
                self.training_halted = true;
                self.events.push(SessionEvent::Error { code: "non_finite_loss".into(), detail: e.to_string() });
                None
            }
        }
    }

    fn credit(&self, feedback: &FeedbackEvent, stepwise: bool) -> Vec<CreditedSample> {
        match feedback.kind {
            FeedbackKind::Zone => zone_expand(
                self.history.at_time(feedback.time).map_or(&self.current, |e| &e.state),
                feedback.valence,
                &self.space,
                self.config.reward_length,
                self.config.reward_value,
            ),
            FeedbackKind::Guiding if stepwise => credit_window(feedback, &self.window, &self.credit),
            FeedbackKind::Guiding => guiding_credit(
                feedback,
                &self.window,
                self.config.reward_length,
                self.config.reward_value,
                self.config.guiding_profile,
            ),
        }
    }

    /// Chooses, applies and records one action.
    fn act(&mut self) -> (ActionId, Choice) {
        let eps = self.schedule.epsilon(self.t);
        let (action, choice) = select_action(&self.current, &self.space, &self.model, &self.density, eps, &mut self.rng);
        let next = apply_action(&self.current, action, &self.space).expect("policy returns legal actions");
        let mut now = self.clock.now();
        if let Some(last) = self.window.steps().last() {
            if now <= last.time {
                now = last.time + Duration::from_nanos(1);
            }
        }
        let from = std::mem::replace(&mut self.current, next);
        self.window.push(from, action, now).expect("time is monotonic");
        self.t += 1;
        let current = self.current.clone();
        self.history.append(current, now);
        self.density.update(&self.current);
        self.log(
            LogKind::Action,
            json!({ "t": self.t, "action": { "dim": action.dim, "sign": action.sign.as_f64() as i32 }, "values": self.current.values() }),
        );
        (action, choice)
    }

    fn log_feedback(&mut self, feedback: &FeedbackEvent) {
        let kind = match feedback.kind {
            FeedbackKind::Guiding => "guiding",
            FeedbackKind::Zone => "zone",
        };
        self.log(LogKind::Feedback, json!({ "kind": kind, "valence": feedback.valence.sign() }));
    }

    /// Stamps a feedback with the session clock and routes it by mode:
    /// queued for the next tick when autonomous, acted on immediately when
    /// stepwise, learned from without moving when paused.
    pub fn submit_feedback(&mut self, kind: FeedbackKind, valence: Valence) -> Result<(), SessionError> {
        let event = FeedbackEvent { kind, valence, time: self.clock.now() };
        match self.mode {
            Mode::Autonomous => {
                self.pending.push_back(event);
                Ok(())
            }
            Mode::Stepwise => self.step_on_feedback(event).map(|_| ()),
            Mode::Paused => {
                self.log_feedback(&event);
                self.tag_feedback(&event);
                let samples = self.credit(&event, true);
                self.buffer.store(samples.iter().cloned());
                self.train_on(&samples);
                Ok(())
            }
        }
    }

    /// Queues a feedback for the next tick.
    pub fn enqueue_feedback(&mut self, feedback: FeedbackEvent) {
        self.pending.push_back(feedback);
    }

    /// One autonomous step: act, record, update density, then train on
    /// exactly one of pending feedback, replay memory or exploration bonus.
    pub fn tick(&mut self) -> Result<TickReport, SessionError> {
        if self.mode != Mode::Autonomous {
            return Err(SessionError::WrongMode { expected: Mode::Autonomous, actual: self.mode });
        }
        let started = Instant::now();
        self.advance_clock(self.period);
        let (action, choice) = self.act();
        let reward_length = self.config.reward_length as u64;

        let mut branch = TrainingBranch::None;
        let mut loss = None;
        let mut feedback_trained = false;
        if let Some(feedback) = self.pending.pop_front() {
            self.log_feedback(&feedback);
            self.tag_feedback(&feedback);
            if self.t > reward_length {
                let samples = self.credit(&feedback, false);
                self.buffer.store(samples.iter().cloned());
                if !self.training_halted {
                    loss = self.train_on(&samples);
                    branch = TrainingBranch::Feedback;
                    feedback_trained = true;
                }
            } else {
                self.stats.dropped_feedback += 1;
            }
        }
        if !feedback_trained && !self.training_halted {
            if self.model.can_replay(&self.buffer) {
                let result = self.model.replay_step(&self.buffer, &mut self.rng);
                loss = self.check_training(result);
                branch = TrainingBranch::Replay;
            } else if self.t > reward_length {
                let (from, _) = {
                    let last = self.window.steps().last().expect("just acted");
                    (last.state.clone(), last.action)
                };
                let target = self.density.exploration_bonus(&self.bonus, &self.current, 0.0);
                let sample = CreditedSample::new(from, action, target, 1.0);
                loss = self.train_on(std::slice::from_ref(&sample));
                branch = TrainingBranch::Bonus;
            }
        }
        match branch {
            TrainingBranch::Feedback => self.stats.feedback_trains += 1,
            TrainingBranch::Replay => self.stats.replay_trains += 1,
            TrainingBranch::Bonus => self.stats.bonus_trains += 1,
            TrainingBranch::None => self.stats.idle_ticks += 1,
        }
        self.stats.ticks += 1;

        self.emit_state();
        let elapsed = started.elapsed();
        let overrun = elapsed > self.period;
        if overrun {
            self.stats.overruns += 1;
            ::log::warn!("tick {} overran its budget: {:?} > {:?}", self.t, elapsed, self.period);
        }
        Ok(TickReport { t: self.t, action, choice, branch, loss, elapsed, overrun })
    }

    /// Stepwise mode: learn from `feedback` over the trajectory, then take
    /// exactly one action.
    pub fn step_on_feedback(&mut self, feedback: FeedbackEvent) -> Result<ParameterState, SessionError> {
        if self.mode != Mode::Stepwise {
            return Err(SessionError::WrongMode { expected: Mode::Stepwise, actual: self.mode });
        }
        self.log_feedback(&feedback);
        self.tag_feedback(&feedback);
        let samples = self.credit(&feedback, true);
        self.buffer.store(samples.iter().cloned());
        self.train_on(&samples);
        self.act();
        self.emit_state();
        Ok(self.current.clone())
    }

    /// Returns to a previously visited state. Nothing is learned.
    pub fn go_backward(&mut self, id: u64) -> Result<ParameterState, SessionError> {
        let state = self.history.get(id).ok_or(SessionError::UnknownHistoryId(id))?.state.clone();
        self.log(LogKind::Command, json!({ "command": "back", "id": id, "values": state.values() }));
        self.move_to(state);
        Ok(self.current.clone())
    }

    /// Direct manipulation: the snapped values become the current state and
    /// count as a visit. Nothing is learned.
    pub fn set_state(&mut self, raw: &[f64]) -> Result<ParameterState, SessionError> {
        let state = snap_to_grid(raw, &self.space)?;
        self.log(LogKind::StateSet, json!({ "values": state.values() }));
        self.density.update(&state);
        self.move_to(state);
        Ok(self.current.clone())
    }

    pub fn command(&mut self, cmd: Command) -> Result<(), SessionError> {
        match cmd {
            Command::StartAuto => self.set_mode(Mode::Autonomous),
            Command::StopAuto => self.set_mode(self.idle_mode),
            Command::ChangeZone => {
                let state = change_zone(&self.density, &self.space, self.config.change_zone_samples, &mut self.rng);
                self.log(LogKind::Command, json!({ "command": cmd.name(), "values": state.values() }));
                self.move_to(state);
                return Ok(());
            }
            Command::Reset => {
                reward::reset(&mut self.model, &mut self.buffer, &mut self.window, &mut self.rng);
                self.density.clear();
                self.history.clear();
                self.pending.clear();
                self.training_halted = false;
                self.t = 0;
                let center = self.space.center();
                self.current = center.clone();
                let now = self.clock.now();
                self.history.append(center, now);
                self.emit_state();
                self.events.push(SessionEvent::Epsilon(self.epsilon()));
            }
        }
        self.log(LogKind::Command, json!({ "command": cmd.name() }));
        Ok(())
    }

    fn set_mode(&mut self, mode: Mode) {
        if self.mode != mode {
            self.mode = mode;
            self.events.push(SessionEvent::Mode(mode));
        }
    }

    /// Places the agent at `state` without recording a move. For harness setup.
    pub fn place(&mut self, state: ParameterState) -> Result<(), SessionError> {
        self.space.validate(&state)?;
        self.current = state.clone();
        self.history.clear();
        let now = self.clock.now();
        self.history.append(state, now);
        Ok(())
    }
}
