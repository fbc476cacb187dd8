//! Domain types shared across the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlatoonId(pub u32);

/// Position inside a platoon; 0 is the leader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlatoonIndex(pub u8);

impl PlatoonIndex {
    pub const LEADER: PlatoonIndex = PlatoonIndex(0);

    pub fn is_leader(self) -> bool {
        self.0 == 0
    }

    pub fn predecessor(self) -> Option<PlatoonIndex> {
        self.0.checked_sub(1).map(PlatoonIndex)
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Kinematic and actuation state of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Front bumper, metres along the lane.
    pub position: f64,
    pub speed: f64,
    /// Actual acceleration after the actuation lag.
    pub acceleration: f64,
    /// Last command handed to the actuator, after limits and the standstill clamp.
    pub commanded_acceleration: f64,
    pub lane: u32,
    pub length: f64,
}

impl VehicleState {
    pub fn cruising(position: f64, speed: f64, lane: u32, length: f64) -> Self {
        VehicleState {
            position,
            speed,
            acceleration: 0.0,
            commanded_acceleration: 0.0,
            lane,
            length,
        }
    }

    pub fn rear(&self) -> f64 {
        self.position - self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeaconType {
    Normal,
    EmergencyStop,
    SlowDown,
    Revert,
}

impl BeaconType {
    pub const ALL: [BeaconType; 4] = [
        BeaconType::Normal,
        BeaconType::EmergencyStop,
        BeaconType::SlowDown,
        BeaconType::Revert,
    ];

    pub fn code(self) -> i8 {
        match self {
            BeaconType::Normal => -1,
            BeaconType::EmergencyStop => 0,
            BeaconType::SlowDown => 1,
            BeaconType::Revert => 2,
        }
    }

    pub fn from_code(code: i8) -> Option<Self> {
        match code {
            -1 => Some(BeaconType::Normal),
            0 => Some(BeaconType::EmergencyStop),
            1 => Some(BeaconType::SlowDown),
            2 => Some(BeaconType::Revert),
            _ => None,
        }
    }

    pub fn is_special(self) -> bool {
        self != BeaconType::Normal
    }

    pub fn carries_command(self) -> bool {
        matches!(self, BeaconType::EmergencyStop | BeaconType::SlowDown)
    }
}

/// Bitset of platoon indices, piggybacked on every beacon.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct AckMap(pub u64);

impl AckMap {
    pub const CAPACITY: usize = 64;

    pub fn set(&mut self, index: PlatoonIndex) {
        self.0 |= 1u64 << index.0;
    }

    pub fn contains(self, index: PlatoonIndex) -> bool {
        self.0 & (1u64 << index.0) != 0
    }

    pub fn clear(&mut self) {
        self.0 = 0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beacon {
    pub sender: VehicleId,
    pub platoon: PlatoonId,
    pub platoon_index: PlatoonIndex,
    pub beacon_type: BeaconType,
    pub position: f64,
    pub speed: f64,
    /// Sender's current control action.
    pub acceleration: f64,
    /// Deceleration (m/s^2) for `EmergencyStop`, target speed (m/s) for `SlowDown`.
    pub command_value: Option<f64>,
    pub ack_map: AckMap,
    pub timestamp: SimTime,
    pub size: u32,
}

impl Beacon {
    pub const DEFAULT_SIZE: u32 = 200;

    /// Checks the payload rules for the beacon type.
    pub fn is_well_formed(&self) -> bool {
        if self.size == 0 {
            return false;
        }
        match (self.beacon_type, self.command_value) {
            (BeaconType::EmergencyStop, Some(v)) => v.is_finite() && v < 0.0,
            (BeaconType::SlowDown, Some(v)) => v.is_finite() && v >= 0.0,
            (BeaconType::EmergencyStop | BeaconType::SlowDown, None) => false,
            (BeaconType::Normal | BeaconType::Revert, v) => v.is_none(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beacon(beacon_type: BeaconType, command_value: Option<f64>) -> Beacon {
        Beacon {
            sender: VehicleId(1),
            platoon: PlatoonId(0),
            platoon_index: PlatoonIndex(1),
            beacon_type,
            position: 0.0,
            speed: 0.0,
            acceleration: 0.0,
            command_value,
            ack_map: AckMap::default(),
            timestamp: SimTime::ZERO,
            size: Beacon::DEFAULT_SIZE,
        }
    }

    #[test]
    fn codes_round_trip() {
        for t in BeaconType::ALL {
            assert_eq!(BeaconType::from_code(t.code()), Some(t));
        }
        assert_eq!(BeaconType::from_code(3), None);
        let codes: Vec<i8> = BeaconType::ALL.iter().map(|t| t.code()).collect();
        assert_eq!(codes, vec![-1, 0, 1, 2]);
    }

    #[test]
    fn payload_rules() {
        assert!(beacon(BeaconType::Normal, None).is_well_formed());
        assert!(beacon(BeaconType::EmergencyStop, Some(-6.0)).is_well_formed());
        assert!(!beacon(BeaconType::EmergencyStop, Some(1.0)).is_well_formed());
        assert!(!beacon(BeaconType::EmergencyStop, None).is_well_formed());
        assert!(beacon(BeaconType::SlowDown, Some(22.22)).is_well_formed());
        assert!(!beacon(BeaconType::SlowDown, Some(-1.0)).is_well_formed());
        assert!(!beacon(BeaconType::Revert, Some(1.0)).is_well_formed());
    }

    #[test]
    fn ack_map_bits() {
        let mut m = AckMap::default();
        m.set(PlatoonIndex(0));
        m.set(PlatoonIndex(14));
        assert!(m.contains(PlatoonIndex(14)));
        assert!(!m.contains(PlatoonIndex(13)));
        m.clear();
        assert!(m.is_empty());
    }
}
