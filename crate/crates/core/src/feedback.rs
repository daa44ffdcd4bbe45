use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackKind {
    /// Judges the agent's recent trajectory.
    Guiding,
    /// Labels the current state as an attractive or repulsive region.
    Zone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Valence {
    Positive,
    Negative,
}

impl Valence {
    pub fn from_sign(sign: i32) -> Option<Self> {
        match sign {
            1 => Some(Valence::Positive),
            -1 => Some(Valence::Negative),
            _ => None,
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Valence::Positive => 1,
            Valence::Negative => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.sign())
    }
}

/// A user reinforcement, stamped with session time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub kind: FeedbackKind,
    pub valence: Valence,
    pub time: Duration,
}

impl FeedbackEvent {
    pub fn guiding(valence: Valence, time: Duration) -> Self {
        Self { kind: FeedbackKind::Guiding, valence, time }
    }

    pub fn zone(valence: Valence, time: Duration) -> Self {
        Self { kind: FeedbackKind::Zone, valence, time }
    }
}
