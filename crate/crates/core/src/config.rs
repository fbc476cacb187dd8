//! Run configuration. Every parameter has a default; a TOML file may
//! override any of them using dotted keys (`cacc.alpha1 = 0.5`) or tables
//! (`[cacc]`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beaconing::{Arbitration, JbConfig, JbeConfig};
use crate::channel::ChannelConfig;
use crate::controllers::CaccGains;
use crate::dynamics::ActuationModel;
use crate::error::{Error, Result};
use crate::types::{AckMap, Beacon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    /// 1 lane, 2 platoons of 15.
    Desk,
    /// 4 lanes, 2 platoons of 15 each: 120 vehicles.
    Low,
    /// 4 lanes, 8 platoons of 15 each: 480 vehicles.
    High,
}

impl Density {
    pub fn layout(self) -> (u32, u32, u32) {
        match self {
            Density::Desk => (1, 2, 15),
            Density::Low => (4, 2, 15),
            Density::High => (4, 8, 15),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Density::Desk => "desk",
            Density::Low => "low",
            Density::High => "high",
        }
    }
}

impl std::str::FromStr for Density {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Density::Desk),
            "low" => Ok(Density::Low),
            "high" => Ok(Density::High),
            other => Err(format!(
                "unknown density `{other}` (expected desk, low or high)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub lanes: u32,
    pub platoons_per_lane: u32,
    pub platoon_size: u32,
    pub initial_speed: f64,
    /// Bumper-to-bumper gap inside a platoon.
    pub intra_gap: f64,
    /// ACC time headway between platoons.
    pub time_headway: f64,
    pub density: Density,
    pub duration: f64,
    pub seed: u64,
    pub dt: f64,
    pub vehicle_length: f64,
    pub lane_width: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let density = Density::Low;
        let (lanes, platoons_per_lane, platoon_size) = density.layout();
        ScenarioConfig {
            lanes,
            platoons_per_lane,
            platoon_size,
            initial_speed: 27.78,
            intra_gap: 5.0,
            time_headway: 1.2,
            density,
            duration: 40.0,
            seed: 1,
            dt: 0.01,
            vehicle_length: 4.0,
            lane_width: 3.5,
        }
    }
}

impl ScenarioConfig {
    pub fn total_vehicles(&self) -> usize {
        self.lanes as usize * self.platoons_per_lane as usize * self.platoon_size as usize
    }

    pub fn apply_density(&mut self, density: Density) {
        let (lanes, platoons, size) = density.layout();
        self.density = density;
        self.lanes = lanes;
        self.platoons_per_lane = platoons;
        self.platoon_size = size;
    }

    /// Gap between consecutive platoons in a lane.
    pub fn inter_platoon_gap(&self) -> f64 {
        self.time_headway * self.initial_speed
    }

    pub fn validate(&self) -> Result<()> {
        if self.platoon_size < 2 {
            return Err(Error::config("scenario.platoon_size", "must be >= 2"));
        }
        if self.platoon_size as usize > AckMap::CAPACITY {
            return Err(Error::config(
                "scenario.platoon_size",
                format!("at most {} vehicles fit in an ACK map", AckMap::CAPACITY),
            ));
        }
        if self.lanes == 0 {
            return Err(Error::config("scenario.lanes", "must be >= 1"));
        }
        if self.platoons_per_lane == 0 {
            return Err(Error::config("scenario.platoons_per_lane", "must be >= 1"));
        }
        if self.total_vehicles() > u32::MAX as usize / 2 {
            return Err(Error::config("scenario.lanes", "too many vehicles"));
        }
        let positive = [
            ("scenario.initial_speed", self.initial_speed),
            ("scenario.intra_gap", self.intra_gap),
            ("scenario.time_headway", self.time_headway),
            ("scenario.duration", self.duration),
            ("scenario.dt", self.dt),
            ("scenario.vehicle_length", self.vehicle_length),
            ("scenario.lane_width", self.lane_width),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, "must be > 0"));
            }
        }
        if self.dt < 1e-6 {
            return Err(Error::config(
                "scenario.dt",
                "must be at least one microsecond",
            ));
        }
        Ok(())
    }
}

/// Timing of the injected follower manoeuvres.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// When the manoeuvring followers start.
    pub start_time: f64,
    pub slowdown_target_speed: f64,
    pub slowdown_deceleration: f64,
    pub stop_deceleration: f64,
    pub stability_platoon_size: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            start_time: 5.0,
            slowdown_target_speed: 22.22,
            slowdown_deceleration: -2.0,
            stop_deceleration: -6.0,
            stability_platoon_size: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeaconingConfig {
    pub beacon_size: u32,
    /// Delay between hearing the predecessor and sending our chain beacon.
    pub slot_offset: f64,
    /// Extra wait past `max_bi` before a follower's fallback timer fires.
    pub fallback_grace: f64,
    pub max_retries: u32,
}

impl Default for BeaconingConfig {
    fn default() -> Self {
        BeaconingConfig {
            beacon_size: Beacon::DEFAULT_SIZE,
            slot_offset: 0.002,
            fallback_grace: 0.02,
            max_retries: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    pub experiment: ExperimentConfig,
    pub dynamics: ActuationModel,
    pub cacc: CaccGains,
    pub leader_cruise_gain: f64,
    pub jb: JbConfig,
    pub jbe: JbeConfig,
    pub channel: ChannelConfig,
    pub beaconing: BeaconingConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scenario: ScenarioConfig::default(),
            experiment: ExperimentConfig::default(),
            dynamics: ActuationModel::default(),
            cacc: CaccGains::default(),
            leader_cruise_gain: 0.5,
            jb: JbConfig::default(),
            jbe: JbeConfig::default(),
            channel: ChannelConfig::default(),
            beaconing: BeaconingConfig::default(),
        }
    }
}

/// Keys accepted in a config file, with a short description.
pub const KEYS: &[(&str, &str)] = &[
    ("scenario.density", "layout preset: desk | low | high"),
    ("scenario.lanes", "number of lanes"),
    ("scenario.platoons_per_lane", "platoons per lane"),
    (
        "scenario.platoon_size",
        "vehicles per platoon, leader included",
    ),
    ("scenario.initial_speed", "m/s"),
    (
        "scenario.intra_gap",
        "bumper-to-bumper gap inside a platoon, m",
    ),
    ("scenario.time_headway", "inter-platoon time headway, s"),
    ("scenario.duration", "simulated time, s"),
    ("scenario.seed", "RNG seed"),
    ("scenario.dt", "dynamics tick, s"),
    ("scenario.vehicle_length", "m"),
    ("scenario.lane_width", "m"),
    ("experiment.start_time", "manoeuvre start, s"),
    ("experiment.slowdown_target_speed", "m/s"),
    ("experiment.slowdown_deceleration", "m/s^2, negative"),
    ("experiment.stop_deceleration", "m/s^2, negative"),
    (
        "experiment.stability_platoon_size",
        "vehicles in the string-stability platoon",
    ),
    ("dynamics.lag", "actuation time constant, s"),
    ("dynamics.max_acceleration", "m/s^2"),
    ("dynamics.max_deceleration", "m/s^2, negative"),
    ("cacc.alpha1", "gain on front acceleration"),
    ("cacc.alpha2", "gain on leader acceleration"),
    ("cacc.alpha3", "gain on spacing error"),
    ("cacc.alpha4", "gain on speed difference to leader"),
    ("cacc.alpha5", "gain on speed difference to front"),
    ("cacc.desired_gap", "m; defaults to scenario.intra_gap"),
    ("leader.cruise_gain", "1/s"),
    ("jb.min_bi", "s"),
    ("jb.max_bi", "s"),
    ("jb.p", "responsiveness exponent"),
    ("jb.delta_u_max", "m/s^2"),
    ("jbe.c", "m/s^2, slight-deceleration offset"),
    ("jbe.k", "m/s^2, emergency threshold"),
    ("jbe.tau", "s, manoeuvre end time"),
    ("jbe.arbitration", "most_recent | most_restrictive"),
    ("channel.bitrate", "bit/s"),
    ("channel.overhead", "s per frame"),
    ("channel.range", "m"),
    ("channel.tx_power_mw", "mW (informational)"),
    ("channel.backoff_window_us", "us"),
    ("beaconing.beacon_size", "bytes"),
    ("beaconing.slot_offset", "s"),
    ("beaconing.fallback_grace", "s"),
    ("beaconing.max_retries", "special-beacon retransmissions"),
];

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);

        let mut cfg = SimConfig::default();
        let mut desired_gap = None;
        // Presets first so explicit layout keys win.
        if let Some(v) = flat.remove("scenario.density") {
            let name = as_str("scenario.density", &v)?;
            let density = name
                .parse()
                .map_err(|e: String| Error::config("scenario.density", e))?;
            cfg.scenario.apply_density(density);
        }
        for (key, value) in &flat {
            cfg.set(key, value, &mut desired_gap)?;
        }
        cfg.cacc.desired_gap = desired_gap.unwrap_or(cfg.scenario.intra_gap);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SimConfig::from_toml_str(&text)
    }

    fn set(&mut self, key: &str, v: &toml::Value, desired_gap: &mut Option<f64>) -> Result<()> {
        let s = &mut self.scenario;
        let e = &mut self.experiment;
        match key {
            "scenario.lanes" => s.lanes = as_u32(key, v)?,
            "scenario.platoons_per_lane" => s.platoons_per_lane = as_u32(key, v)?,
            "scenario.platoon_size" => s.platoon_size = as_u32(key, v)?,
            "scenario.initial_speed" => s.initial_speed = as_f64(key, v)?,
            "scenario.intra_gap" => s.intra_gap = as_f64(key, v)?,
            "scenario.time_headway" => s.time_headway = as_f64(key, v)?,
            "scenario.duration" => s.duration = as_f64(key, v)?,
            "scenario.seed" => s.seed = as_u64(key, v)?,
            "scenario.dt" => s.dt = as_f64(key, v)?,
            "scenario.vehicle_length" => s.vehicle_length = as_f64(key, v)?,
            "scenario.lane_width" => s.lane_width = as_f64(key, v)?,
            "experiment.start_time" => e.start_time = as_f64(key, v)?,
            "experiment.slowdown_target_speed" => e.slowdown_target_speed = as_f64(key, v)?,
            "experiment.slowdown_deceleration" => e.slowdown_deceleration = as_f64(key, v)?,
            "experiment.stop_deceleration" => e.stop_deceleration = as_f64(key, v)?,
            "experiment.stability_platoon_size" => e.stability_platoon_size = as_u32(key, v)?,
            "dynamics.lag" => self.dynamics.lag = as_f64(key, v)?,
            "dynamics.max_acceleration" => self.dynamics.max_acceleration = as_f64(key, v)?,
            "dynamics.max_deceleration" => self.dynamics.max_deceleration = as_f64(key, v)?,
            "cacc.alpha1" => self.cacc.alpha1 = as_f64(key, v)?,
            "cacc.alpha2" => self.cacc.alpha2 = as_f64(key, v)?,
            "cacc.alpha3" => self.cacc.alpha3 = as_f64(key, v)?,
            "cacc.alpha4" => self.cacc.alpha4 = as_f64(key, v)?,
            "cacc.alpha5" => self.cacc.alpha5 = as_f64(key, v)?,
            "cacc.desired_gap" => *desired_gap = Some(as_f64(key, v)?),
            "leader.cruise_gain" => self.leader_cruise_gain = as_f64(key, v)?,
            "jb.min_bi" => self.jb.min_bi = as_f64(key, v)?,
            "jb.max_bi" => self.jb.max_bi = as_f64(key, v)?,
            "jb.p" => self.jb.p = as_f64(key, v)?,
            "jb.delta_u_max" => self.jb.delta_u_max = as_f64(key, v)?,
            "jbe.c" => self.jbe.c = as_f64(key, v)?,
            "jbe.k" => self.jbe.k = as_f64(key, v)?,
            "jbe.tau" => self.jbe.tau = as_f64(key, v)?,
            "jbe.arbitration" => {
                self.jbe.arbitration = as_str(key, v)?
                    .parse::<Arbitration>()
                    .map_err(|m| Error::config(key, m))?
            }
            "channel.bitrate" => self.channel.bitrate = as_f64(key, v)?,
            "channel.overhead" => self.channel.overhead = as_f64(key, v)?,
            "channel.range" => self.channel.range = as_f64(key, v)?,
            "channel.tx_power_mw" => self.channel.tx_power_mw = as_f64(key, v)?,
            "channel.backoff_window_us" => self.channel.backoff_window_us = as_u64(key, v)?,
            "beaconing.beacon_size" => self.beaconing.beacon_size = as_u32(key, v)?,
            "beaconing.slot_offset" => self.beaconing.slot_offset = as_f64(key, v)?,
            "beaconing.fallback_grace" => self.beaconing.fallback_grace = as_f64(key, v)?,
            "beaconing.max_retries" => self.beaconing.max_retries = as_u32(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.dynamics.validate()?;
        self.cacc.validate()?;
        self.jb.validate()?;
        self.jbe.validate()?;
        self.channel.validate()?;
        if !(self.leader_cruise_gain.is_finite() && self.leader_cruise_gain > 0.0) {
            return Err(Error::config("leader.cruise_gain", "must be > 0"));
        }
        let b = &self.beaconing;
        if b.beacon_size == 0 {
            return Err(Error::config("beaconing.beacon_size", "must be > 0"));
        }
        if !(b.slot_offset.is_finite() && b.slot_offset >= 0.0) {
            return Err(Error::config("beaconing.slot_offset", "must be >= 0"));
        }
        if !(b.fallback_grace.is_finite() && b.fallback_grace >= 0.0) {
            return Err(Error::config("beaconing.fallback_grace", "must be >= 0"));
        }
        let e = &self.experiment;
        if !(e.start_time.is_finite() && e.start_time >= 0.0) {
            return Err(Error::config("experiment.start_time", "must be >= 0"));
        }
        if e.start_time >= self.jbe.tau {
            return Err(Error::config(
                "experiment.start_time",
                "must precede jbe.tau",
            ));
        }
        if !(e.slowdown_target_speed.is_finite() && e.slowdown_target_speed >= 0.0) {
            return Err(Error::config(
                "experiment.slowdown_target_speed",
                "must be >= 0",
            ));
        }
        if !(e.slowdown_deceleration.is_finite() && e.slowdown_deceleration < 0.0) {
            return Err(Error::config(
                "experiment.slowdown_deceleration",
                "must be < 0",
            ));
        }
        if !(e.stop_deceleration.is_finite() && e.stop_deceleration < 0.0) {
            return Err(Error::config("experiment.stop_deceleration", "must be < 0"));
        }
        if e.stability_platoon_size < 2 || e.stability_platoon_size as usize > AckMap::CAPACITY {
            return Err(Error::config(
                "experiment.stability_platoon_size",
                "must be in 2..=64",
            ));
        }
        Ok(())
    }

    /// Resolved configuration as `key = value` lines, in `KEYS` order.
    pub fn describe(&self) -> String {
        let s = &self.scenario;
        let e = &self.experiment;
        let values: Vec<String> = vec![
            format!("\"{}\"", s.density.name()),
            s.lanes.to_string(),
            s.platoons_per_lane.to_string(),
            s.platoon_size.to_string(),
            s.initial_speed.to_string(),
            s.intra_gap.to_string(),
            s.time_headway.to_string(),
            s.duration.to_string(),
            s.seed.to_string(),
            s.dt.to_string(),
            s.vehicle_length.to_string(),
            s.lane_width.to_string(),
            e.start_time.to_string(),
            e.slowdown_target_speed.to_string(),
            e.slowdown_deceleration.to_string(),
            e.stop_deceleration.to_string(),
            e.stability_platoon_size.to_string(),
            self.dynamics.lag.to_string(),
            self.dynamics.max_acceleration.to_string(),
            self.dynamics.max_deceleration.to_string(),
            self.cacc.alpha1.to_string(),
            self.cacc.alpha2.to_string(),
            self.cacc.alpha3.to_string(),
            self.cacc.alpha4.to_string(),
            self.cacc.alpha5.to_string(),
            self.cacc.desired_gap.to_string(),
            self.leader_cruise_gain.to_string(),
            self.jb.min_bi.to_string(),
            self.jb.max_bi.to_string(),
            self.jb.p.to_string(),
            self.jb.delta_u_max.to_string(),
            self.jbe.c.to_string(),
            self.jbe.k.to_string(),
            self.jbe.tau.to_string(),
            match self.jbe.arbitration {
                Arbitration::MostRecent => "\"most_recent\"".into(),
                Arbitration::MostRestrictive => "\"most_restrictive\"".into(),
            },
            self.channel.bitrate.to_string(),
            self.channel.overhead.to_string(),
            self.channel.range.to_string(),
            self.channel.tx_power_mw.to_string(),
            self.channel.backoff_window_us.to_string(),
            self.beaconing.beacon_size.to_string(),
            self.beaconing.slot_offset.to_string(),
            self.beaconing.fallback_grace.to_string(),
            self.beaconing.max_retries.to_string(),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        KEYS.iter()
            .zip(values)
            .map(|((k, _), v)| format!("\"{k}\" = {v}\n"))
            .collect()
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::config(
            key,
            format!("expected a number, got {}", other.type_str()),
        )),
    }
}

fn as_u64(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        other => Err(Error::config(
            key,
            format!("expected a non-negative integer, got {other}"),
        )),
    }
}

fn as_u32(key: &str, v: &toml::Value) -> Result<u32> {
    let n = as_u64(key, v)?;
    u32::try_from(n).map_err(|_| Error::config(key, "out of range"))
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::config(key, format!("expected a string, got {}", v.type_str())))
}
