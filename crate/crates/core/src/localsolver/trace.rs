use serde::Serialize;

use super::{Counter, Stats};
use crate::eqsys::Sign;
use crate::game::Player;

/// Version of the trace JSON schema.
pub const TRACE_VERSION: u32 = 1;

/// The exploration of one local check, in event order.
#[derive(Clone, Debug, Serialize)]
pub struct Trace {
    pub version: u32,
    pub root: String,
    pub signs: Vec<Sign>,
    pub winner: Player,
    pub stats: Stats,
    pub events: Vec<TraceEvent>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    Explore {
        position: String,
        counter: Counter,
    },
    /// An existing decision with a usable counter settled the position.
    Reuse {
        player: Player,
        position: String,
        counter: Counter,
    },
    Assume {
        player: Player,
        position: String,
        counter: Counter,
    },
    Decide {
        player: Player,
        position: String,
        counter: Counter,
        justification: Vec<String>,
    },
    Forget {
        player: Player,
        assumption: String,
        counter: Counter,
        removed: Vec<String>,
    },
}

impl Trace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// Assumptions made during the run, as (position, counter) pairs.
    pub fn assumptions(&self) -> Vec<(Player, String, Counter)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Assume {
                    player,
                    position,
                    counter,
                } => Some((*player, position.clone(), counter.clone())),
                _ => None,
            })
            .collect()
    }
}
