//! Follower-aware extension: followers that initiate their own slowdown or
//! stop tell the leader with special beacons, and the leader adopts the
//! request until the follower reverts it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Beacon, BeaconType, PlatoonId};

/// How a leader combines overlapping requests from different followers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arbitration {
    /// The latest request replaces the current one.
    #[default]
    MostRecent,
    /// Keep whichever is stricter: lower speed, harder braking, stop over slowdown.
    MostRestrictive,
}

impl std::str::FromStr for Arbitration {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "most_recent" => Ok(Arbitration::MostRecent),
            "most_restrictive" => Ok(Arbitration::MostRestrictive),
            other => Err(format!(
                "unknown arbitration `{other}` (expected most_recent or most_restrictive)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JbeConfig {
    /// Decelerations weaker than `-c` are ignored.
    pub c: f64,
    /// Decelerations at or below `k` request an emergency stop.
    pub k: f64,
    /// Time at which the scenario followers end their manoeuvre.
    pub tau: f64,
    pub arbitration: Arbitration,
}

impl Default for JbeConfig {
    fn default() -> Self {
        JbeConfig {
            c: 0.5,
            k: -5.0,
            tau: 20.0,
            arbitration: Arbitration::MostRecent,
        }
    }
}

impl JbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::config("jbe.c", "must be > 0"));
        }
        if !(self.k.is_finite() && self.k < 0.0) {
            return Err(Error::config("jbe.k", "must be < 0"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::config("jbe.tau", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LeaderMode {
    #[default]
    Normal,
    FollowerDynamics {
        saved_desired_speed: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JbeLeaderState {
    pub mode: LeaderMode,
}

impl JbeLeaderState {
    pub fn saved_desired_speed(&self) -> Option<f64> {
        match self.mode {
            LeaderMode::Normal => None,
            LeaderMode::FollowerDynamics {
                saved_desired_speed,
            } => Some(saved_desired_speed),
        }
    }
}

/// Longitudinal target of a leader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderControl {
    pub desired_speed: f64,
    /// Brake at this (negative) rate until standstill, overriding the cruise law.
    pub brake: Option<f64>,
}

impl LeaderControl {
    pub fn cruise(desired_speed: f64) -> Self {
        LeaderControl {
            desired_speed,
            brake: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeaderHandleOutcome {
    Applied,
    Discarded,
    /// Type 0/1 beacon without a usable command value.
    Malformed,
}

pub fn jbe_leader_handle(
    own_platoon: PlatoonId,
    beacon: &Beacon,
    state: JbeLeaderState,
    control: LeaderControl,
    arbitration: Arbitration,
) -> (JbeLeaderState, LeaderControl, LeaderHandleOutcome) {
    use LeaderHandleOutcome::*;

    if beacon.platoon != own_platoon || beacon.platoon_index.is_leader() {
        return (state, control, Discarded);
    }
    if beacon.beacon_type.carries_command() && !beacon.is_well_formed() {
        return (state, control, Malformed);
    }

    let save = |state: JbeLeaderState| match state.mode {
        LeaderMode::Normal => JbeLeaderState {
            mode: LeaderMode::FollowerDynamics {
                saved_desired_speed: control.desired_speed,
            },
        },
        already => JbeLeaderState { mode: already },
    };
    let restrictive = arbitration == Arbitration::MostRestrictive
        && matches!(state.mode, LeaderMode::FollowerDynamics { .. });

    match beacon.beacon_type {
        BeaconType::Normal => (state, control, Discarded),
        BeaconType::EmergencyStop => {
            let decel = beacon.command_value.unwrap_or_default();
            let brake = match (restrictive, control.brake) {
                (true, Some(current)) => current.min(decel),
                _ => decel,
            };
            let next = LeaderControl {
                desired_speed: control.desired_speed,
                brake: Some(brake),
            };
            (save(state), next, Applied)
        }
        BeaconType::SlowDown => {
            let target = beacon.command_value.unwrap_or_default();
            let next = if restrictive {
                if control.brake.is_some() {
                    control
                } else {
                    LeaderControl::cruise(control.desired_speed.min(target))
                }
            } else {
                LeaderControl::cruise(target)
            };
            (save(state), next, Applied)
        }
        BeaconType::Revert => match state.mode {
            LeaderMode::FollowerDynamics {
                saved_desired_speed,
            } => (
                JbeLeaderState::default(),
                LeaderControl::cruise(saved_desired_speed),
                Applied,
            ),
            // Nothing to restore; a duplicate revert.
            LeaderMode::Normal => (state, control, Applied),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveDynamics {
    Stop,
    SlowDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FollowerMode {
    #[default]
    Normal,
    DynamicsActive(ActiveDynamics),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct JbeFollowerState {
    pub mode: FollowerMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerInputs {
    pub own_acceleration: f64,
    /// Acceleration in the latest beacon from the leader, if any arrived.
    pub leader_acceleration: Option<f64>,
    pub front_acceleration: Option<f64>,
    /// Speed the follower is heading for; sent with a slowdown request.
    pub target_speed: f64,
    /// The follower has finished its own manoeuvre.
    pub end_dynamics: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecialRequest {
    EmergencyStop { deceleration: f64 },
    SlowDown { target_speed: f64 },
    Revert,
}

impl SpecialRequest {
    pub fn beacon_type(self) -> BeaconType {
        match self {
            SpecialRequest::EmergencyStop { .. } => BeaconType::EmergencyStop,
            SpecialRequest::SlowDown { .. } => BeaconType::SlowDown,
            SpecialRequest::Revert => BeaconType::Revert,
        }
    }

    pub fn command_value(self) -> Option<f64> {
        match self {
            SpecialRequest::EmergencyStop { deceleration } => Some(deceleration),
            SpecialRequest::SlowDown { target_speed } => Some(target_speed),
            SpecialRequest::Revert => None,
        }
    }
}

pub fn jbe_follower_monitor(
    inputs: &FollowerInputs,
    state: JbeFollowerState,
    cfg: &JbeConfig,
) -> (JbeFollowerState, Option<SpecialRequest>) {
    match state.mode {
        FollowerMode::Normal => {
            let reacting = |a: Option<f64>| a.is_some_and(|a| a < -cfg.c);
            if reacting(inputs.leader_acceleration) || reacting(inputs.front_acceleration) {
                return (state, None);
            }
            let own = inputs.own_acceleration;
            if own >= -cfg.c {
                return (state, None);
            }
            if own <= cfg.k {
                (
                    JbeFollowerState {
                        mode: FollowerMode::DynamicsActive(ActiveDynamics::Stop),
                    },
                    Some(SpecialRequest::EmergencyStop { deceleration: own }),
                )
            } else {
                (
                    JbeFollowerState {
                        mode: FollowerMode::DynamicsActive(ActiveDynamics::SlowDown),
                    },
                    Some(SpecialRequest::SlowDown {
                        target_speed: inputs.target_speed.max(0.0),
                    }),
                )
            }
        }
        FollowerMode::DynamicsActive(_) if inputs.end_dynamics => {
            (JbeFollowerState::default(), Some(SpecialRequest::Revert))
        }
        FollowerMode::DynamicsActive(_) => (state, None),
    }
}

/// Followers only act on normal beacons.
pub fn jbe_follower_handle(beacon: &Beacon) -> bool {
    beacon.beacon_type == BeaconType::Normal
}
