use crate::beaconing::jbe::SpecialRequest;
use crate::time::{secs_to_micros, SimTime};
use crate::types::{Beacon, PlatoonIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityConfig {
    /// Seconds to wait for the leader's acknowledgement.
    pub timeout: f64,
    pub max_retries: u32,
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        ReliabilityConfig {
            timeout: 0.4,
            max_retries: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReliabilityEvent {
    Retransmit(SpecialRequest),
    /// Retry budget exhausted; the request is abandoned.
    Failure(SpecialRequest),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Outstanding {
    request: SpecialRequest,
    sent_at: SimTime,
    retries: u32,
}

/// Tracks the one special beacon a follower may have in flight.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityTracker {
    own_index: PlatoonIndex,
    cfg: ReliabilityConfig,
    outstanding: Option<Outstanding>,
    failures: u32,
    retransmissions: u32,
}

impl ReliabilityTracker {
    pub fn new(own_index: PlatoonIndex, cfg: ReliabilityConfig) -> Self {
        ReliabilityTracker {
            own_index,
            cfg,
            outstanding: None,
            failures: 0,
            retransmissions: 0,
        }
    }

    /// A fresh special beacon supersedes anything still outstanding.
    pub fn on_sent(&mut self, request: SpecialRequest, at: SimTime) {
        self.outstanding = Some(Outstanding {
            request,
            sent_at: at,
            retries: 0,
        });
    }

    /// Returns true if `beacon` acknowledges the outstanding special beacon.
    pub fn on_leader_beacon(&mut self, beacon: &Beacon) -> bool {
        let Some(out) = self.outstanding else {
            return false;
        };
        let acked = beacon.platoon_index.is_leader()
            && beacon.timestamp > out.sent_at
            && beacon.ack_map.contains(self.own_index);
        if acked {
            self.outstanding = None;
        }
        acked
    }

    pub fn deadline(&self) -> Option<SimTime> {
        self.outstanding
            .map(|o| o.sent_at + secs_to_micros(self.cfg.timeout))
    }

    pub fn poll(&mut self, now: SimTime) -> Option<ReliabilityEvent> {
        let deadline = self.deadline()?;
        if now < deadline {
            return None;
        }
        let out = self.outstanding.as_mut()?;
        if out.retries < self.cfg.max_retries {
            out.retries += 1;
            out.sent_at = now;
            self.retransmissions += 1;
            Some(ReliabilityEvent::Retransmit(out.request))
        } else {
            let request = out.request;
            self.outstanding = None;
            self.failures += 1;
            Some(ReliabilityEvent::Failure(request))
        }
    }

    pub fn pending(&self) -> Option<SpecialRequest> {
        self.outstanding.map(|o| o.request)
    }

    pub fn failures(&self) -> u32 {
        self.failures
    }

    pub fn retransmissions(&self) -> u32 {
        self.retransmissions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AckMap, BeaconType, PlatoonId, VehicleId};

    const STOP: SpecialRequest = SpecialRequest::EmergencyStop { deceleration: -6.0 };

    fn leader_beacon(at: SimTime, acks: &[u8]) -> Beacon {
        let mut ack_map = AckMap::default();
        for i in acks {
            ack_map.set(PlatoonIndex(*i));
        }
        Beacon {
            sender: VehicleId(0),
            platoon: PlatoonId(0),
            platoon_index: PlatoonIndex::LEADER,
            beacon_type: BeaconType::Normal,
            position: 0.0,
            speed: 0.0,
            acceleration: 0.0,
            command_value: None,
            ack_map,
            timestamp: at,
            size: Beacon::DEFAULT_SIZE,
        }
    }

    #[test]
    fn ack_clears_outstanding() {
        let mut t = ReliabilityTracker::new(PlatoonIndex(1), ReliabilityConfig::default());
        t.on_sent(STOP, SimTime::from_secs(5.0));
        assert!(!t.on_leader_beacon(&leader_beacon(SimTime::from_secs(5.001), &[2])));
        assert!(t.on_leader_beacon(&leader_beacon(SimTime::from_secs(5.001), &[1])));
        assert_eq!(t.poll(SimTime::from_secs(10.0)), None);
        assert_eq!(t.retransmissions(), 0);
    }

    #[test]
    fn stale_ack_is_not_counted() {
        let mut t = ReliabilityTracker::new(PlatoonIndex(1), ReliabilityConfig::default());
        t.on_sent(STOP, SimTime::from_secs(5.0));
        assert!(!t.on_leader_beacon(&leader_beacon(SimTime::from_secs(4.9), &[1])));
        assert_eq!(t.pending(), Some(STOP));
    }

    #[test]
    fn lost_ack_retransmits_after_timeout() {
        let mut t = ReliabilityTracker::new(PlatoonIndex(1), ReliabilityConfig::default());
        t.on_sent(STOP, SimTime::from_secs(5.0));
        assert_eq!(t.poll(SimTime::from_secs(5.399)), None);
        assert_eq!(t.deadline(), Some(SimTime::from_secs(5.4)));
        assert_eq!(
            t.poll(SimTime::from_secs(5.4)),
            Some(ReliabilityEvent::Retransmit(STOP))
        );
        assert_eq!(t.deadline(), Some(SimTime::from_secs(5.8)));
    }

    #[test]
    fn retry_cap_raises_one_failure() {
        let mut t = ReliabilityTracker::new(PlatoonIndex(1), ReliabilityConfig::default());
        t.on_sent(STOP, SimTime::ZERO);
        let mut retransmits = 0;
        let now = loop {
            let now = t.deadline().unwrap();
            match t.poll(now).unwrap() {
                ReliabilityEvent::Retransmit(_) => retransmits += 1,
                ReliabilityEvent::Failure(r) => {
                    assert_eq!(r, STOP);
                    break now;
                }
            }
        };
        assert_eq!(retransmits, 5);
        assert_eq!(t.failures(), 1);
        assert_eq!(t.pending(), None);
        assert_eq!(t.poll(now + 10_000_000), None);
    }
}
