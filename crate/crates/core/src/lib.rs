//! Interactive reinforcement-learning agent that explores a bounded
//! parameter space by unit steps and learns what its user likes from sparse,
//! delayed binary feedback.

pub mod baseline;
pub mod config;
pub mod density;
pub mod feedback;
pub mod policy;
pub mod reward;
pub mod session;
pub mod space;

pub use config::Config;
pub use feedback::{FeedbackEvent, FeedbackKind, Valence};
pub use session::{Command, Mode, Session, SessionError, SessionEvent};
pub use space::{ActionId, ParameterState, Sign, SpaceConfig};
