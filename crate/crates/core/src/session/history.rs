use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::feedback::Valence;
use crate::space::ParameterState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryTag {
    Neutral,
    Positive,
    Negative,
}

impl From<Valence> for HistoryTag {
    fn from(v: Valence) -> Self {
        match v {
            Valence::Positive => HistoryTag::Positive,
            Valence::Negative => HistoryTag::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub id: u64,
    pub state: ParameterState,
    pub time: Duration,
    pub tag: HistoryTag,
}

/// Append-only record of visited states. Ids are dense from 0.
#[derive(Debug, Clone, Default)]
pub struct SessionHistory {
    entries: Vec<HistoryEntry>,
}

impl SessionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn get(&self, id: u64) -> Option<&HistoryEntry> {
        usize::try_from(id).ok().and_then(|i| self.entries.get(i))
    }

    pub fn latest(&self) -> Option<&HistoryEntry> {
        self.entries.last()
    }

    /// Latest entry recorded at or before `time`.
    pub fn at_time(&self, time: Duration) -> Option<&HistoryEntry> {
        self.entries.iter().rev().find(|e| e.time <= time)
    }

    pub fn set_tag(&mut self, id: u64, tag: HistoryTag) -> bool {
        match usize::try_from(id).ok().and_then(|i| self.entries.get_mut(i)) {
            Some(e) => {
                e.tag = tag;
                true
            }
            None => false,
        }
    }

    pub fn append(&mut self, state: ParameterState, time: Duration) -> &HistoryEntry {
        let id = self.entries.len() as u64;
        self.entries.push(HistoryEntry { id, state, time, tag: HistoryTag::Neutral });
        self.entries.last().unwrap()
    }

    /// Retags the most recent entry; returns its id.
    pub fn tag_latest(&mut self, tag: HistoryTag) -> Option<u64> {
        self.entries.last_mut().map(|e| {
            e.tag = tag;
            e.id
        })
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}
