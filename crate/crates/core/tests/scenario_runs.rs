use std::collections::HashMap;

use jbesim::metrics::global_min_distance;
use jbesim::output::{write_outputs, GAPS};
use jbesim::types::{BeaconType, VehicleId};
use jbesim::{run, run_with, Density, Experiment, RunOptions, Scheme, SimConfig};

fn desk(seed: u64) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.scenario.apply_density(Density::Desk);
    cfg.scenario.seed = seed;
    cfg
}

#[test]
fn undisturbed_platoons_hold_the_desired_gap() {
    let m = run(&desk(4), Experiment::Baseline, Scheme::Jb).unwrap();
    assert!(!m.crashed());
    let (lo, hi) = m
        .traces
        .gaps
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| {
            (lo.min(g), hi.max(g))
        });
    assert!(lo > 4.5 && hi < 5.5, "gap range [{lo}, {hi}]");
    let max_dev = m
        .traces
        .speeds
        .iter()
        .map(|v| (v - 27.78).abs())
        .fold(0.0, f64::max);
    assert!(max_dev < 0.05, "speed deviation {max_dev}");
    assert!(m.special_beacon_log.is_empty());
}

#[test]
fn min_distance_matches_gap_file() {
    let m = run(&desk(2), Experiment::FollowerStopping, Scheme::Jbe).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&m, dir.path()).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join(GAPS)).unwrap();
    let brute = global_min_distance(rdr.records().map(|r| r.unwrap()[2].parse::<f64>().unwrap()));
    // The file rounds to 1e-6.
    assert!((brute - m.global_min_distance).abs() <= 1e-6);
    assert_eq!(
        m.global_min_distance,
        global_min_distance(m.traces.gaps.iter().copied())
    );
}

#[test]
fn only_designated_followers_send_specials_and_all_are_acked() {
    for experiment in [Experiment::FollowerSlowdown, Experiment::FollowerStopping] {
        let m = run(&desk(5), experiment, Scheme::Jbe).unwrap();
        let senders: Vec<VehicleId> = m.special_beacon_log.iter().map(|s| s.sender).collect();
        assert!(!senders.is_empty());
        assert!(
            senders
                .iter()
                .all(|s| *s == VehicleId(1) || *s == VehicleId(16)),
            "{senders:?}"
        );
        let types: Vec<BeaconType> = m
            .special_beacon_log
            .iter()
            .filter(|s| s.sender == VehicleId(1))
            .map(|s| s.beacon_type)
            .collect();
        let expected = match experiment {
            Experiment::FollowerSlowdown => BeaconType::SlowDown,
            _ => BeaconType::EmergencyStop,
        };
        assert_eq!(types, vec![expected, BeaconType::Revert]);
        assert_eq!(m.protocol_failures, 0);
        assert_eq!(m.malformed_specials, 0);
        assert!(m.leader_tail_acks > 0);
    }
}

#[test]
fn jb_never_emits_special_beacons() {
    let m = run(&desk(1), Experiment::FollowerStopping, Scheme::Jb).unwrap();
    assert!(m.special_beacon_log.is_empty());
    assert!(m
        .beacon_log
        .iter()
        .all(|b| b.beacon_type == BeaconType::Normal));
    assert!(m.crashed());
}

#[test]
fn every_vehicle_beacons_at_least_every_max_interval() {
    let m = run(&desk(6), Experiment::Baseline, Scheme::Jbe).unwrap();
    let mut last: HashMap<VehicleId, f64> = HashMap::new();
    let mut worst = 0.0f64;
    for b in &m.beacon_log {
        if let Some(prev) = last.insert(b.sender, b.time) {
            worst = worst.max(b.time - prev);
        }
    }
    assert_eq!(last.len(), 30);
    // max interval plus the fallback grace and a little channel deferral.
    assert!(worst <= 0.4 + 0.02 + 0.005, "worst gap {worst}");
}

#[test]
fn cruising_leader_uses_the_maximum_interval() {
    let m = run(&desk(7), Experiment::Baseline, Scheme::Jb).unwrap();
    let times: Vec<f64> = m
        .beacon_log
        .iter()
        .filter(|b| b.sender == VehicleId(0))
        .map(|b| b.time)
        .collect();
    for w in times.windows(2).skip(2) {
        assert!((w[1] - w[0] - 0.4).abs() < 0.011, "{w:?}");
    }
}

#[test]
fn chain_follows_the_leader_in_order() {
    let m = run(&desk(8), Experiment::Baseline, Scheme::Jb).unwrap();
    let first_of = |v: u32| {
        m.beacon_log
            .iter()
            .find(|b| b.sender == VehicleId(v))
            .map(|b| b.time)
            .unwrap()
    };
    for i in 1..15 {
        let gap = first_of(i) - first_of(i - 1);
        assert!(gap > 0.0 && gap < 0.004, "vehicle {i}: {gap}");
    }
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let a = run(&desk(11), Experiment::FollowerSlowdown, Scheme::Jbe).unwrap();
    let b = run(&desk(11), Experiment::FollowerSlowdown, Scheme::Jbe).unwrap();
    assert_eq!(a, b);
    let c = run(&desk(12), Experiment::FollowerSlowdown, Scheme::Jbe).unwrap();
    assert_ne!(a.beacon_log, c.beacon_log);
}

#[test]
fn crashed_vehicles_stay_frozen() {
    let m = run(&desk(3), Experiment::FollowerStopping, Scheme::Jb).unwrap();
    let crash = m.crash.expect("crash");
    let t = &m.traces;
    let from = t.times.iter().position(|&x| x > crash.time).unwrap();
    for s in from..t.times.len() {
        assert_eq!(t.speed(s, crash.front), 0.0);
        assert_eq!(t.speed(s, crash.rear), 0.0);
    }
}

#[test]
fn stability_run_is_a_single_platoon_of_eight() {
    let m = run(
        &SimConfig::default(),
        Experiment::StringStability,
        Scheme::Jbe,
    )
    .unwrap();
    assert_eq!(m.vehicles.len(), 8);
    assert_eq!(m.traces.pairs.len(), 7);
    assert!(!m.crashed());
}

#[test]
fn channel_trace_covers_every_receiver() {
    let cfg = {
        let mut c = desk(1);
        c.scenario.duration = 2.0;
        c
    };
    let m = run_with(
        &cfg,
        Experiment::Baseline,
        Scheme::Jb,
        RunOptions {
            channel_trace: true,
        },
    )
    .unwrap();
    let finished = m.channel_trace.len() / 29;
    assert_eq!(m.channel_trace.len() % 29, 0);
    assert!(finished as u64 <= m.beacons_sent && finished as u64 + 30 >= m.beacons_sent);
}

#[test]
fn high_density_jbe_stays_collision_free() {
    let mut cfg = SimConfig::default();
    cfg.scenario.apply_density(Density::High);
    cfg.scenario.duration = 12.0;
    cfg.jbe.tau = 10.0;
    let m = run(&cfg, Experiment::FollowerStopping, Scheme::Jbe).unwrap();
    assert_eq!(m.vehicles.len(), 480);
    assert!(!m.crashed(), "min distance {}", m.global_min_distance);
    assert!(m.avg_cbr > 0.0 && m.avg_cbr < 1.0);
}
