//! Evaluation quantities: minimum inter-vehicle distance, crash detection,
//! channel busy ratio and the string-stability attenuation check.

use crate::channel::BusyLedger;
use crate::error::{Error, Result};
use crate::time::SimTime;
use crate::types::{BeaconType, PlatoonId, PlatoonIndex, VehicleId};

/// Relative slack allowed between adjacent peak deviations.
pub const STRING_STABILITY_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleInfo {
    pub id: VehicleId,
    pub platoon: PlatoonId,
    pub index: PlatoonIndex,
    pub lane: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrashRecord {
    pub time: f64,
    /// The vehicle ahead.
    pub front: VehicleId,
    pub rear: VehicleId,
}

/// Samples taken every dynamics tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Traces {
    pub times: Vec<f64>,
    /// Row-major: one row of `vehicles` speeds per sample time.
    pub speeds: Vec<f64>,
    pub vehicles: usize,
    /// Adjacent intra-platoon pairs (front, rear).
    pub pairs: Vec<(VehicleId, VehicleId)>,
    /// Row-major: one row of `pairs.len()` gaps per sample time.
    pub gaps: Vec<f64>,
}

impl Traces {
    pub fn speed(&self, sample: usize, vehicle: VehicleId) -> f64 {
        self.speeds[sample * self.vehicles + vehicle.0 as usize]
    }

    pub fn gap_row(&self, sample: usize) -> &[f64] {
        let n = self.pairs.len();
        &self.gaps[sample * n..(sample + 1) * n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeaconOutcome {
    /// Every in-range receiver decoded the frame.
    Delivered,
    /// Some receivers lost it to a collision.
    Partial,
    /// Nobody decoded it.
    Lost,
}

impl BeaconOutcome {
    pub fn label(self) -> &'static str {
        match self {
            BeaconOutcome::Delivered => "delivered",
            BeaconOutcome::Partial => "partial",
            BeaconOutcome::Lost => "lost",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeaconRecord {
    pub time: f64,
    pub sender: VehicleId,
    pub beacon_type: BeaconType,
    pub payload: Option<f64>,
    pub outcome: BeaconOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecialBeaconRecord {
    pub time: f64,
    pub sender: VehicleId,
    pub platoon: PlatoonId,
    pub index: PlatoonIndex,
    pub beacon_type: BeaconType,
    pub payload: Option<f64>,
    pub retransmission: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRecord {
    pub time: f64,
    pub transmitter: VehicleId,
    pub receiver: VehicleId,
    pub outcome: crate::channel::ReceptionOutcome,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub scheme: String,
    pub scenario: String,
    pub seed: u64,
    pub vehicles: Vec<VehicleInfo>,
    /// Intra-platoon pairs only.
    pub global_min_distance: f64,
    /// Between the tail of one platoon and the next leader; infinite with a
    /// single platoon per lane.
    pub inter_platoon_min_distance: f64,
    pub crash: Option<CrashRecord>,
    pub cbr_series: Vec<f64>,
    pub avg_cbr: f64,
    pub traces: Traces,
    pub special_beacon_log: Vec<SpecialBeaconRecord>,
    pub beacon_log: Vec<BeaconRecord>,
    pub channel_trace: Vec<ChannelRecord>,
    pub protocol_failures: u32,
    pub retransmissions: u32,
    pub malformed_specials: u32,
    pub leader_tail_acks: u32,
    pub beacons_sent: u64,
}

impl RunMetrics {
    pub fn crashed(&self) -> bool {
        self.global_min_distance <= 0.0
    }

    /// Vehicle ids of one platoon, leader first.
    pub fn platoon_members(&self, platoon: PlatoonId) -> Vec<VehicleId> {
        let mut members: Vec<&VehicleInfo> = self
            .vehicles
            .iter()
            .filter(|v| v.platoon == platoon)
            .collect();
        members.sort_by_key(|v| v.index);
        members.iter().map(|v| v.id).collect()
    }
}

/// Minimum over every sampled gap; `+inf` when there are no samples.
pub fn global_min_distance<I: IntoIterator<Item = f64>>(gaps: I) -> f64 {
    gaps.into_iter().fold(f64::INFINITY, f64::min)
}

/// Mean CBR across observers per elapsed window, and the mean over windows.
pub fn aggregate_cbr(ledgers: &[BusyLedger], now: SimTime) -> Result<(Vec<f64>, f64)> {
    let Some(first) = ledgers.first() else {
        return Ok((Vec::new(), 0.0));
    };
    let windows = first.complete_windows(now);
    let mut series = Vec::with_capacity(windows);
    for w in 0..windows {
        let mut sum = 0.0;
        for l in ledgers {
            sum += l.cbr(w, now)?;
        }
        series.push(sum / ledgers.len() as f64);
    }
    let avg = if series.is_empty() {
        0.0
    } else {
        series.iter().sum::<f64>() / series.len() as f64
    };
    Ok((series, avg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Peak |speed - pre-disturbance speed| per vehicle, starting at the initiator.
    pub peak_deviations: Vec<f64>,
    pub non_amplifying: bool,
}

/// `members` are the platoon's vehicle ids in platoon order; deviations are
/// evaluated from `initiator` (a platoon index) to the tail over `[from, to]`
/// seconds.
pub fn string_stability_check(
    traces: &Traces,
    members: &[VehicleId],
    initiator: usize,
    from: f64,
    to: f64,
    tolerance: f64,
) -> Result<StabilityReport> {
    let outside = || Error::WindowOutsideTrace { from, to };
    let (Some(&first), Some(&last)) = (traces.times.first(), traces.times.last()) else {
        return Err(outside());
    };
    if from > to || from < first || to > last {
        return Err(outside());
    }
    // Reference sample: the last one at or before `from`.
    let reference = traces
        .times
        .partition_point(|&t| t <= from)
        .saturating_sub(1);
    let window: Vec<usize> = (0..traces.times.len())
        .filter(|&i| traces.times[i] >= from && traces.times[i] <= to)
        .collect();

    let peak_deviations: Vec<f64> = members
        .iter()
        .skip(initiator)
        .map(|&v| {
            let base = traces.speed(reference, v);
            window
                .iter()
                .map(|&i| (traces.speed(i, v) - base).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let non_amplifying = non_amplifying(&peak_deviations, tolerance);
    Ok(StabilityReport {
        peak_deviations,
        non_amplifying,
    })
}

pub fn non_amplifying(deviations: &[f64], tolerance: f64) -> bool {
    deviations
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + tolerance) + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traces(times: Vec<f64>, per_vehicle: Vec<Vec<f64>>) -> Traces {
        let vehicles = per_vehicle.len();
        let mut speeds = Vec::new();
        for i in 0..times.len() {
            for v in &per_vehicle {
                speeds.push(v[i]);
            }
        }
        Traces {
            times,
            speeds,
            vehicles,
            pairs: Vec::new(),
            gaps: Vec::new(),
        }
    }

    fn ids(n: u32) -> Vec<VehicleId> {
        (0..n).map(VehicleId).collect()
    }

    #[test]
    fn min_distance() {
        assert_eq!(global_min_distance([5.1, 4.9, 5.0]), 4.9);
        assert_eq!(global_min_distance([5.0, -0.2, 5.0]), -0.2);
        assert_eq!(global_min_distance(std::iter::empty()), f64::INFINITY);
    }

    #[test]
    fn cbr_aggregation() {
        let now = SimTime::from_secs(2.0);
        let silent = vec![BusyLedger::default(); 3];
        let (series, avg) = aggregate_cbr(&silent, now).unwrap();
        assert_eq!(series, vec![0.0, 0.0]);
        assert_eq!(avg, 0.0);

        // One observer: 250 ms busy in window 0, 100 ms in window 1 split
        // across an interval straddling the boundary.
        let mut l = BusyLedger::default();
        l.record(0, 200_000).unwrap();
        l.record(950_000, 1_100_000).unwrap();
        let (series, avg) = aggregate_cbr(&[l], now).unwrap();
        assert_eq!(series, vec![0.25, 0.1]);
        assert!((avg - 0.175).abs() < 1e-15);
    }

    #[test]
    fn flat_traces_are_stable() {
        let t = traces(vec![0.0, 1.0, 2.0], vec![vec![10.0; 3]; 4]);
        let r = string_stability_check(&t, &ids(4), 0, 0.0, 2.0, 0.02).unwrap();
        assert_eq!(r.peak_deviations, vec![0.0; 4]);
        assert!(r.non_amplifying);
    }

    #[test]
    fn amplifying_traces_fail() {
        let t = traces(
            vec![0.0, 1.0],
            vec![vec![10.0, 11.0], vec![10.0, 11.2], vec![10.0, 11.4]],
        );
        let r = string_stability_check(&t, &ids(3), 0, 0.0, 1.0, 0.02).unwrap();
        assert!((r.peak_deviations[1] - 1.2).abs() < 1e-12);
        assert!(!r.non_amplifying);

        // Reversed order attenuates.
        let reversed: Vec<VehicleId> = ids(3).into_iter().rev().collect();
        let r = string_stability_check(&t, &reversed, 0, 0.0, 1.0, 0.02).unwrap();
        assert!(r.non_amplifying);
    }

    #[test]
    fn initiator_skips_upstream_vehicles() {
        // Vehicle 0 barely moves; from index 1 on the deviations shrink.
        let t = traces(
            vec![0.0, 1.0],
            vec![vec![10.0, 10.1], vec![10.0, 7.0], vec![10.0, 8.0]],
        );
        assert!(
            !string_stability_check(&t, &ids(3), 0, 0.0, 1.0, 0.02)
                .unwrap()
                .non_amplifying
        );
        let r = string_stability_check(&t, &ids(3), 1, 0.0, 1.0, 0.02).unwrap();
        assert_eq!(r.peak_deviations.len(), 2);
        assert!(r.non_amplifying);
    }

    #[test]
    fn tolerance_band() {
        assert!(non_amplifying(&[1.0, 1.019], 0.02));
        assert!(!non_amplifying(&[1.0, 1.021], 0.02));
    }

    #[test]
    fn window_must_lie_inside_trace() {
        let t = traces(vec![0.0, 1.0], vec![vec![1.0, 1.0]]);
        assert!(string_stability_check(&t, &ids(1), 0, 0.5, 2.0, 0.02).is_err());
        assert!(string_stability_check(&t, &ids(1), 0, 0.8, 0.2, 0.02).is_err());
        let empty = Traces::default();
        assert!(string_stability_check(&empty, &ids(1), 0, 0.0, 0.0, 0.02).is_err());
    }
}
