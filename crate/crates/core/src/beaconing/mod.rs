//! Adaptive beaconing: jerk-driven intervals with a slotted chain, and the
//! follower-aware extension that lets followers steer their leader with
//! special beacons.

pub mod jb;
pub mod jbe;
pub mod reliability;

pub use jb::{
    jb_alpha, jb_interval, jb_on_beacon_received, jb_schedule_next, jerk, ChainAction, JbConfig,
};
pub use jbe::{
    jbe_follower_handle, jbe_follower_monitor, jbe_leader_handle, ActiveDynamics, Arbitration,
    FollowerInputs, FollowerMode, JbeConfig, JbeFollowerState, JbeLeaderState, LeaderControl,
    LeaderHandleOutcome, LeaderMode, SpecialRequest,
};
pub use reliability::{ReliabilityConfig, ReliabilityEvent, ReliabilityTracker};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Jb,
    Jbe,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Jb => "jb",
            Scheme::Jbe => "jbe",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jb" => Ok(Scheme::Jb),
            "jbe" => Ok(Scheme::Jbe),
            other => Err(format!("unknown scheme `{other}` (expected jb or jbe)")),
        }
    }
}
