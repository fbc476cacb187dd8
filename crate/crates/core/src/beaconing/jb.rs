use crate::error::{Error, Result};
use crate::types::{Beacon, BeaconType, PlatoonId, PlatoonIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JbConfig {
    pub min_bi: f64,
    pub max_bi: f64,
    pub p: f64,
    pub delta_u_max: f64,
}

impl Default for JbConfig {
    fn default() -> Self {
        JbConfig {
            min_bi: 0.1,
            max_bi: 0.4,
            p: 1.0,
            delta_u_max: 2.0,
        }
    }
}

impl JbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_bi.is_finite() && self.min_bi > 0.0) {
            return Err(Error::config("jb.min_bi", "must be > 0"));
        }
        if !(self.max_bi.is_finite() && self.max_bi > self.min_bi) {
            return Err(Error::config("jb.max_bi", "must exceed jb.min_bi"));
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::config("jb.p", "must be > 0"));
        }
        if !(self.delta_u_max.is_finite() && self.delta_u_max > 0.0) {
            return Err(Error::config("jb.delta_u_max", "must be > 0"));
        }
        Ok(())
    }
}

pub fn jerk(u_now: f64, u_prev: f64) -> f64 {
    u_now - u_prev
}

/// Decay constant that makes the interval reach `min_bi` exactly at `delta_u_max`.
pub fn jb_alpha(cfg: &JbConfig) -> f64 {
    -(cfg.min_bi / cfg.max_bi).ln() * cfg.delta_u_max.powf(-cfg.p)
}

/// Beacon interval in seconds for a change in acceleration `delta_u`.
pub fn jb_interval(delta_u: f64, cfg: &JbConfig) -> f64 {
    let a = jb_alpha(cfg);
    let scaled = (-a * delta_u.abs().powf(cfg.p)).exp() * cfg.max_bi;
    scaled.max(cfg.min_bi).min(cfg.max_bi)
}

/// Offset from now to the leader's next scheduled beacon.
pub fn jb_schedule_next(delta_u: f64, cfg: &JbConfig) -> f64 {
    jb_interval(delta_u, cfg)
}

/// What a vehicle does with a normal beacon heard on the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChainAction {
    pub update_leader_view: bool,
    pub update_front_view: bool,
    /// The beacon came from the immediate predecessor: send our own next.
    pub trigger_transmission: bool,
    /// Leader only: the tail's ACK map confirms the leader's last beacon.
    pub leader_beacon_acked: bool,
}

/// Chain and view bookkeeping for a normal beacon received by the vehicle at
/// `own_index` in `own_platoon` (of `platoon_size` vehicles).
pub fn jb_on_beacon_received(
    own_platoon: PlatoonId,
    own_index: PlatoonIndex,
    platoon_size: usize,
    beacon: &Beacon,
) -> ChainAction {
    let mut action = ChainAction::default();
    if beacon.platoon != own_platoon || beacon.beacon_type != BeaconType::Normal {
        return action;
    }
    let from = beacon.platoon_index;
    if own_index.is_leader() {
        let tail = PlatoonIndex((platoon_size - 1) as u8);
        action.leader_beacon_acked = from == tail && beacon.ack_map.contains(PlatoonIndex::LEADER);
        return action;
    }
    action.update_leader_view = from.is_leader();
    if own_index.predecessor() == Some(from) {
        action.update_front_view = true;
        action.trigger_transmission = true;
    }
    action
}
