use proptest::prelude::*;

use jbesim::channel::{in_range, Channel, ChannelConfig, Delivery, Point, ReceptionOutcome};
use jbesim::types::{AckMap, Beacon, BeaconType, PlatoonId, PlatoonIndex, VehicleId};
use jbesim::SimTime;

const AIRTIME: u64 = 367;

fn frame(sender: u32) -> Beacon {
    Beacon {
        sender: VehicleId(sender),
        platoon: PlatoonId(0),
        platoon_index: PlatoonIndex(0),
        beacon_type: BeaconType::Normal,
        position: 0.0,
        speed: 0.0,
        acceleration: 0.0,
        command_value: None,
        ack_map: AckMap::default(),
        timestamp: SimTime::from_micros(0),
        size: 200,
    }
}

/// Drops entries that would make a vehicle overlap its own transmission.
fn half_duplex_safe(mut schedule: Vec<(u64, u32)>) -> Vec<(u64, u32)> {
    schedule.sort_unstable();
    let mut busy_until = std::collections::HashMap::new();
    schedule.retain(|&(start, tx)| {
        let free = busy_until.get(&tx).is_none_or(|&end| start >= end);
        if free {
            busy_until.insert(tx, start + AIRTIME);
        }
        free
    });
    schedule
}

/// Replays a schedule the way the engine does: every frame is resolved once
/// its end time is reached and before anything later starts.
fn replay(positions: &[Point], schedule: &[(u64, u32)]) -> (Channel, Vec<Delivery>) {
    let mut ch = Channel::new(ChannelConfig::default(), positions.len());
    let mut pending: Vec<(SimTime, u64)> = Vec::new();
    let mut done = Vec::new();
    for &(start, tx) in schedule {
        pending.sort();
        while pending
            .first()
            .is_some_and(|(end, _)| end.as_micros() <= start)
        {
            let (_, id) = pending.remove(0);
            done.push(ch.finish_transmission(id).unwrap());
        }
        let (id, end) = ch
            .start_transmission(
                VehicleId(tx),
                positions,
                SimTime::from_micros(start),
                frame(tx),
            )
            .unwrap();
        pending.push((end, id));
    }
    pending.sort();
    for (_, id) in pending {
        done.push(ch.finish_transmission(id).unwrap());
    }
    (ch, done)
}

fn scenario() -> impl Strategy<Value = (Vec<Point>, Vec<(u64, u32)>)> {
    (2usize..7).prop_flat_map(|n| {
        (
            prop::collection::vec((0.0..900.0f64, 0u32..3), n).prop_map(|v| {
                v.into_iter()
                    .map(|(x, lane)| Point {
                        x,
                        y: lane as f64 * 3.5,
                    })
                    .collect()
            }),
            prop::collection::vec((0u64..5_000, 0..n as u32), 0..25).prop_map(half_duplex_safe),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ledgers_match_a_microsecond_bitmap((positions, schedule) in scenario()) {
        let (ch, _) = replay(&positions, &schedule);
        for (observer, p) in positions.iter().enumerate() {
            let mut bitmap = vec![false; 6_000];
            for &(start, tx) in &schedule {
                let hears = tx as usize == observer || in_range(positions[tx as usize], *p, 500.0);
                if hears {
                    bitmap[start as usize..(start + AIRTIME) as usize].iter_mut().for_each(|b| *b = true);
                }
            }
            let busy = bitmap.iter().filter(|b| **b).count() as u64;
            prop_assert_eq!(ch.ledger(VehicleId(observer as u32)).busy_in_window(0), busy);
        }
    }

    #[test]
    fn removing_a_frame_never_causes_a_loss(
        (positions, schedule) in scenario(),
        drop in any::<prop::sample::Index>(),
    ) {
        prop_assume!(!schedule.is_empty());
        let victim = drop.index(schedule.len());
        let (_, full) = replay(&positions, &schedule);
        let mut reduced_schedule = schedule.clone();
        reduced_schedule.remove(victim);
        let (_, reduced) = replay(&positions, &reduced_schedule);

        let key = |d: &Delivery| (d.start, d.transmitter);
        for d in &full {
            if key(d) == (schedule[victim].0, VehicleId(schedule[victim].1)) {
                continue;
            }
            let other = reduced.iter().find(|r| key(r) == key(d)).unwrap();
            for (rx, outcome) in &d.receptions {
                if *outcome == ReceptionOutcome::Delivered {
                    let after = other.receptions.iter().find(|(r, _)| r == rx).unwrap().1;
                    prop_assert_eq!(after, ReceptionOutcome::Delivered);
                }
            }
        }
    }

    #[test]
    fn lone_frames_reach_exactly_the_disc((positions, schedule) in scenario()) {
        let (_, done) = replay(&positions, &schedule);
        for d in &done {
            let overlapped = schedule.iter().any(|&(s, tx)| {
                (s, VehicleId(tx)) != (d.start, d.transmitter) && s < d.end && d.start < s + AIRTIME
            });
            if overlapped {
                continue;
            }
            let origin = positions[d.transmitter.0 as usize];
            let expected: Vec<VehicleId> = (0..positions.len() as u32)
                .filter(|&v| v != d.transmitter.0 && in_range(origin, positions[v as usize], 500.0))
                .map(VehicleId)
                .collect();
            let got: Vec<VehicleId> = d.delivered().collect();
            prop_assert_eq!(got, expected);
        }
    }
}
