//! Highway construction and the follower-manoeuvre experiments.

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::metrics::VehicleInfo;
use crate::types::{PlatoonId, PlatoonIndex, VehicleId, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// No injected manoeuvre.
    Baseline,
    FollowerSlowdown,
    FollowerStopping,
    /// Follower stopping on a single short platoon.
    StringStability,
}

impl Experiment {
    pub const MANOEUVRES: [Experiment; 3] = [
        Experiment::FollowerSlowdown,
        Experiment::FollowerStopping,
        Experiment::StringStability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Baseline => "baseline",
            Experiment::FollowerSlowdown => "slowdown",
            Experiment::FollowerStopping => "stopping",
            Experiment::StringStability => "stability",
        }
    }

    /// Adjusts the layout the experiment needs.
    pub fn prepare(self, cfg: &SimConfig) -> SimConfig {
        let mut cfg = cfg.clone();
        if self == Experiment::StringStability {
            cfg.scenario.lanes = 1;
            cfg.scenario.platoons_per_lane = 1;
            cfg.scenario.platoon_size = cfg.experiment.stability_platoon_size;
        }
        cfg
    }
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Experiment::Baseline),
            "slowdown" => Ok(Experiment::FollowerSlowdown),
            "stopping" => Ok(Experiment::FollowerStopping),
            "stability" => Ok(Experiment::StringStability),
            other => Err(format!(
                "unknown scenario `{other}` (expected slowdown, stopping or stability)"
            )),
        }
    }
}

/// A self-initiated follower manoeuvre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intent {
    SlowDown {
        target_speed: f64,
        deceleration: f64,
    },
    Stop {
        deceleration: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManoeuvreAction {
    Begin(Intent),
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledManoeuvre {
    pub at: f64,
    pub vehicle: VehicleId,
    pub action: ManoeuvreAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonLayout {
    pub id: PlatoonId,
    pub lane: u32,
    /// Leader first.
    pub members: Vec<VehicleId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub vehicles: Vec<VehicleInfo>,
    pub states: Vec<VehicleState>,
    pub platoons: Vec<PlatoonLayout>,
    /// Per lane, vehicle ids front to back.
    pub lanes: Vec<Vec<VehicleId>>,
}

impl World {
    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    /// Index-1 followers of every platoon on lane 0.
    pub fn first_followers_on_lane0(&self) -> Vec<VehicleId> {
        self.platoons
            .iter()
            .filter(|p| p.lane == 0)
            .filter_map(|p| p.members.get(1).copied())
            .collect()
    }
}

/// Front-bumper position of `index` in the `platoon_in_lane`-th platoon from
/// the front. The rear bumper of the last vehicle in the lane sits at 0.
fn slot_position(cfg: &SimConfig, platoon_in_lane: u32, index: u32) -> f64 {
    let s = &cfg.scenario;
    let n = s.platoon_size as f64;
    let platoon_len = n * s.vehicle_length + (n - 1.0) * s.intra_gap;
    let lane_len = s.platoons_per_lane as f64 * platoon_len
        + (s.platoons_per_lane as f64 - 1.0) * s.inter_platoon_gap();
    let platoon_front = lane_len - platoon_in_lane as f64 * (platoon_len + s.inter_platoon_gap());
    platoon_front - index as f64 * (s.vehicle_length + s.intra_gap)
}

pub fn build_highway(cfg: &SimConfig) -> Result<World> {
    cfg.validate()?;
    let s = &cfg.scenario;
    let mut world = World {
        vehicles: Vec::with_capacity(s.total_vehicles()),
        states: Vec::with_capacity(s.total_vehicles()),
        platoons: Vec::new(),
        lanes: vec![Vec::new(); s.lanes as usize],
    };
    for lane in 0..s.lanes {
        for p in 0..s.platoons_per_lane {
            let platoon = PlatoonId(world.platoons.len() as u32);
            let mut members = Vec::with_capacity(s.platoon_size as usize);
            for index in 0..s.platoon_size {
                let id = VehicleId(world.vehicles.len() as u32);
                let index8 = u8::try_from(index)
                    .map_err(|_| Error::config("scenario.platoon_size", "too large"))?;
                world.vehicles.push(VehicleInfo {
                    id,
                    platoon,
                    index: PlatoonIndex(index8),
                    lane,
                });
                world.states.push(VehicleState::cruising(
                    slot_position(cfg, p, index),
                    s.initial_speed,
                    lane,
                    s.vehicle_length,
                ));
                members.push(id);
                world.lanes[lane as usize].push(id);
            }
            world.platoons.push(PlatoonLayout {
                id: platoon,
                lane,
                members,
            });
        }
    }
    Ok(world)
}

pub fn inject_follower_slowdown(world: &World, cfg: &SimConfig) -> Vec<ScheduledManoeuvre> {
    let e = &cfg.experiment;
    manoeuvre(
        world.first_followers_on_lane0(),
        e.start_time,
        cfg.jbe.tau,
        Intent::SlowDown {
            target_speed: e.slowdown_target_speed,
            deceleration: e.slowdown_deceleration,
        },
    )
}

pub fn inject_follower_stopping(world: &World, cfg: &SimConfig) -> Vec<ScheduledManoeuvre> {
    manoeuvre(
        world.first_followers_on_lane0(),
        cfg.experiment.start_time,
        cfg.jbe.tau,
        Intent::Stop {
            deceleration: cfg.experiment.stop_deceleration,
        },
    )
}

/// Follower 1 stops at the start time; when it reverts, the leader's return
/// to cruise speed is the second (leader-initiated) disturbance.
pub fn inject_string_stability(world: &World, cfg: &SimConfig) -> Vec<ScheduledManoeuvre> {
    let first = world
        .platoons
        .first()
        .and_then(|p| p.members.get(1).copied());
    manoeuvre(
        first.into_iter().collect(),
        cfg.experiment.start_time,
        cfg.jbe.tau,
        Intent::Stop {
            deceleration: cfg.experiment.stop_deceleration,
        },
    )
}

pub fn injections(
    experiment: Experiment,
    world: &World,
    cfg: &SimConfig,
) -> Vec<ScheduledManoeuvre> {
    match experiment {
        Experiment::Baseline => Vec::new(),
        Experiment::FollowerSlowdown => inject_follower_slowdown(world, cfg),
        Experiment::FollowerStopping => inject_follower_stopping(world, cfg),
        Experiment::StringStability => inject_string_stability(world, cfg),
    }
}

fn manoeuvre(
    vehicles: Vec<VehicleId>,
    start: f64,
    end: f64,
    intent: Intent,
) -> Vec<ScheduledManoeuvre> {
    let mut out = Vec::with_capacity(vehicles.len() * 2);
    for &vehicle in &vehicles {
        out.push(ScheduledManoeuvre {
            at: start,
            vehicle,
            action: ManoeuvreAction::Begin(intent),
        });
    }
    for &vehicle in &vehicles {
        out.push(ScheduledManoeuvre {
            at: end,
            vehicle,
            action: ManoeuvreAction::End,
        });
    }
    out
}
