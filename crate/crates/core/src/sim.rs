//! Discrete-event engine tying vehicles, controllers, beaconing and the
//! channel together.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beaconing::{
    jb_interval, jb_on_beacon_received, jbe_follower_handle, jbe_follower_monitor,
    jbe_leader_handle, FollowerInputs, JbeFollowerState, JbeLeaderState, LeaderControl,
    LeaderHandleOutcome, ReliabilityConfig, ReliabilityEvent, ReliabilityTracker, Scheme,
    SpecialRequest,
};
use crate::channel::{carrier_sense_defer, Channel, Delivery, Point, ReceptionOutcome};
use crate::config::SimConfig;
use crate::controllers::{dead_reckon, leader_cruise, path_cacc, RemoteVehicleView};
use crate::dynamics::{radar_distance, step_vehicle, ActuationModel};
use crate::error::{Error, Result};
use crate::metrics::{
    aggregate_cbr, BeaconOutcome, BeaconRecord, ChannelRecord, CrashRecord, RunMetrics,
    SpecialBeaconRecord, Traces, VehicleInfo,
};
use crate::queue::EventQueue;
use crate::scenario::{
    build_highway, injections, Experiment, Intent, ManoeuvreAction, ScheduledManoeuvre,
};
use crate::time::{secs_to_micros, SimTime};
use crate::types::{AckMap, Beacon, BeaconType, VehicleId, VehicleState};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record per-receiver outcomes of every frame (large).
    pub channel_trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TxKind {
    Normal,
    Special {
        request: SpecialRequest,
        retransmission: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    Tick(u64),
    Manoeuvre(usize),
    TxAttempt { vehicle: u32, kind: TxKind },
    TxEnd { id: u64, log: usize },
    ReliabilityCheck { vehicle: u32 },
}

#[derive(Debug, Clone)]
struct Vehicle {
    info: VehicleInfo,
    state: VehicleState,
    frozen: bool,
    leader_view: Option<RemoteVehicleView>,
    front_view: Option<RemoteVehicleView>,
    /// Platoon indices accepted since the last normal transmission.
    heard: AckMap,
    last_normal_tx: Option<SimTime>,
    /// Acceleration carried in the previous normal beacon.
    last_tx_accel: f64,
    normal_pending: bool,
    /// When the platoon's very first beacon is due.
    phase: SimTime,
    control: LeaderControl,
    leader_state: JbeLeaderState,
    follower_state: JbeFollowerState,
    reliability: ReliabilityTracker,
    intent: Option<Intent>,
}

/// Command actually applied after saturation and the standstill rule.
fn applied(model: &ActuationModel, state: &VehicleState, u: f64) -> f64 {
    let c = model.clamp(u);
    if state.speed <= 0.0 && c <= 0.0 {
        0.0
    } else {
        c
    }
}

fn outcome_of(delivery: &Delivery) -> BeaconOutcome {
    let total = delivery.receptions.len();
    let ok = delivery.delivered().count();
    if total > 0 && ok == total {
        BeaconOutcome::Delivered
    } else if ok == 0 {
        BeaconOutcome::Lost
    } else {
        BeaconOutcome::Partial
    }
}

pub struct Simulation {
    cfg: SimConfig,
    scheme: Scheme,
    experiment: Experiment,
    options: RunOptions,
    vehicles: Vec<Vehicle>,
    platoon_size: usize,
    /// Per lane, front to back.
    lanes: Vec<Vec<VehicleId>>,
    manoeuvres: Vec<ScheduledManoeuvre>,
    positions: Vec<Point>,
    queue: EventQueue<Event>,
    channel: Channel,
    rng: ChaCha8Rng,
    dt_us: u64,
    duration_us: u64,
    // accumulators
    traces: Traces,
    min_intra: f64,
    min_inter: f64,
    crash: Option<CrashRecord>,
    beacon_log: Vec<BeaconRecord>,
    special_log: Vec<SpecialBeaconRecord>,
    channel_trace: Vec<ChannelRecord>,
    malformed: u32,
    tail_acks: u32,
    beacons_sent: u64,
}

impl Simulation {
    pub fn new(
        cfg: &SimConfig,
        experiment: Experiment,
        scheme: Scheme,
        options: RunOptions,
    ) -> Result<Self> {
        let cfg = experiment.prepare(cfg);
        cfg.validate()?;
        let world = build_highway(&cfg)?;
        let manoeuvres = injections(experiment, &world, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.scenario.seed);

        let max_bi_us = secs_to_micros(cfg.jb.max_bi).max(1);
        let phases: Vec<SimTime> = world
            .platoons
            .iter()
            .map(|_| SimTime::from_micros(rng.random_range(0..max_bi_us)))
            .collect();
        let reliability = ReliabilityConfig {
            timeout: cfg.jb.max_bi,
            max_retries: cfg.beaconing.max_retries,
        };
        let vehicles: Vec<Vehicle> = world
            .vehicles
            .iter()
            .zip(&world.states)
            .map(|(info, state)| Vehicle {
                info: *info,
                state: *state,
                frozen: false,
                leader_view: None,
                front_view: None,
                heard: AckMap::default(),
                last_normal_tx: None,
                last_tx_accel: 0.0,
                normal_pending: false,
                phase: phases[info.platoon.0 as usize],
                control: LeaderControl::cruise(cfg.scenario.initial_speed),
                leader_state: JbeLeaderState::default(),
                follower_state: JbeFollowerState::default(),
                reliability: ReliabilityTracker::new(info.index, reliability),
                intent: None,
            })
            .collect();

        let pairs = world
            .platoons
            .iter()
            .flat_map(|p| {
                p.members
                    .windows(2)
                    .map(|w| (w[0], w[1]))
                    .collect::<Vec<_>>()
            })
            .collect();
        let n = vehicles.len();
        let lane_width = cfg.scenario.lane_width;
        let positions = vehicles
            .iter()
            .map(|v| Point {
                x: v.state.position,
                y: v.state.lane as f64 * lane_width,
            })
            .collect();

        let mut sim = Simulation {
            scheme,
            experiment,
            options,
            platoon_size: cfg.scenario.platoon_size as usize,
            lanes: world.lanes,
            manoeuvres,
            positions,
            queue: EventQueue::new(),
            channel: Channel::new(cfg.channel, n),
            rng,
            dt_us: secs_to_micros(cfg.scenario.dt).max(1),
            duration_us: secs_to_micros(cfg.scenario.duration),
            traces: Traces {
                vehicles: n,
                pairs,
                ..Traces::default()
            },
            min_intra: f64::INFINITY,
            min_inter: f64::INFINITY,
            crash: None,
            beacon_log: Vec::new(),
            special_log: Vec::new(),
            channel_trace: Vec::new(),
            malformed: 0,
            tail_acks: 0,
            beacons_sent: 0,
            vehicles,
            cfg,
        };
        for (i, m) in sim.manoeuvres.iter().enumerate() {
            sim.queue
                .schedule(SimTime::from_secs(m.at), Event::Manoeuvre(i))?;
        }
        sim.queue.schedule(SimTime::ZERO, Event::Tick(0))?;
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    /// Processes events up to and including `until`. Returns false once the
    /// run has nothing left to do.
    pub fn advance(&mut self, until: SimTime) -> Result<bool> {
        let limit = until.as_micros().min(self.duration_us);
        while let Some(t) = self.queue.peek_time() {
            if t.as_micros() > limit {
                return Ok(t.as_micros() <= self.duration_us);
            }
            let (now, event) = self.queue.pop().expect("peeked");
            self.handle(now, event)?;
        }
        Ok(false)
    }

    pub fn run_to_end(mut self) -> Result<RunMetrics> {
        self.advance(SimTime::from_micros(self.duration_us))?;
        self.finish()
    }

    fn handle(&mut self, now: SimTime, event: Event) -> Result<()> {
        match event {
            Event::Tick(k) => self.tick(now, k),
            Event::Manoeuvre(i) => {
                let m = self.manoeuvres[i];
                let v = &mut self.vehicles[m.vehicle.0 as usize];
                v.intent = match m.action {
                    ManoeuvreAction::Begin(intent) => Some(intent),
                    ManoeuvreAction::End => None,
                };
                Ok(())
            }
            Event::TxAttempt { vehicle, kind } => self.tx_attempt(now, vehicle as usize, kind),
            Event::TxEnd { id, log } => self.tx_end(now, id, log),
            Event::ReliabilityCheck { vehicle } => self.reliability_check(now, vehicle as usize),
        }
    }

    fn tick(&mut self, now: SimTime, k: u64) -> Result<()> {
        let dt = self.cfg.scenario.dt;
        if k > 0 {
            for (v, p) in self.vehicles.iter_mut().zip(self.positions.iter_mut()) {
                if v.frozen {
                    continue;
                }
                v.state = step_vehicle(
                    &v.state,
                    v.state.commanded_acceleration,
                    dt,
                    &self.cfg.dynamics,
                )?;
                p.x = v.state.position;
            }
        }
        self.sample(now)?;

        for i in 0..self.vehicles.len() {
            self.refresh_command(i, now)?;
        }
        if self.scheme == Scheme::Jbe {
            for i in 0..self.vehicles.len() {
                self.run_monitor(i, now)?;
            }
        }
        for i in 0..self.vehicles.len() {
            if self.vehicles[i].info.index.is_leader() {
                self.leader_due_check(i, now)?;
            } else {
                self.fallback_check(i, now)?;
            }
        }

        let next = (k + 1) * self.dt_us;
        if next <= self.duration_us {
            self.queue
                .schedule(SimTime::from_micros(next), Event::Tick(k + 1))?;
        }
        Ok(())
    }

    fn freeze(&mut self, i: usize) {
        let v = &mut self.vehicles[i];
        v.frozen = true;
        v.state.speed = 0.0;
        v.state.acceleration = 0.0;
        v.state.commanded_acceleration = 0.0;
    }

    fn sample(&mut self, now: SimTime) -> Result<()> {
        self.traces.times.push(now.as_secs());
        self.traces
            .speeds
            .extend(self.vehicles.iter().map(|v| v.state.speed));

        for p in 0..self.traces.pairs.len() {
            let (front, rear) = self.traces.pairs[p];
            let gap = radar_distance(
                &self.vehicles[rear.0 as usize].state,
                &self.vehicles[front.0 as usize].state,
            )?;
            self.traces.gaps.push(gap);
            self.min_intra = self.min_intra.min(gap);
            if gap <= 0.0 {
                if self.crash.is_none() {
                    self.crash = Some(CrashRecord {
                        time: now.as_secs(),
                        front,
                        rear,
                    });
                }
                self.freeze(front.0 as usize);
                self.freeze(rear.0 as usize);
            }
        }

        for l in 0..self.lanes.len() {
            for j in 1..self.lanes[l].len() {
                let (front, rear) = (self.lanes[l][j - 1], self.lanes[l][j]);
                let (f, r) = (front.0 as usize, rear.0 as usize);
                if self.vehicles[f].info.platoon == self.vehicles[r].info.platoon {
                    continue;
                }
                let gap = radar_distance(&self.vehicles[r].state, &self.vehicles[f].state)?;
                self.min_inter = self.min_inter.min(gap);
                if gap <= 0.0 {
                    self.freeze(f);
                    self.freeze(r);
                }
            }
        }
        Ok(())
    }

    fn raw_command(&self, i: usize, now: SimTime) -> Result<f64> {
        let v = &self.vehicles[i];
        let speed = v.state.speed;
        if v.info.index.is_leader() {
            return Ok(match v.control.brake {
                Some(b) if speed > 0.0 => b,
                Some(_) => 0.0,
                None => leader_cruise(speed, v.control.desired_speed, self.cfg.leader_cruise_gain),
            });
        }
        let intent = v.intent.map(|it| match it {
            Intent::Stop { deceleration } => {
                if speed > 0.0 {
                    deceleration
                } else {
                    0.0
                }
            }
            Intent::SlowDown {
                target_speed,
                deceleration,
            } => deceleration.max(self.cfg.leader_cruise_gain * (target_speed - speed)),
        });
        let cacc = match (v.front_view, v.leader_view) {
            (Some(front), Some(leader)) => {
                // Physical predecessor for the radar.
                let ahead = &self.vehicles[i - 1].state;
                let d = radar_distance(&v.state, ahead)?;
                Some(path_cacc(
                    &v.state,
                    Some(&dead_reckon(&front, now)),
                    Some(&dead_reckon(&leader, now)),
                    d,
                    &self.cfg.cacc,
                )?)
            }
            _ => None,
        };
        Ok(match (intent, cacc) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => 0.0,
        })
    }

    fn refresh_command(&mut self, i: usize, now: SimTime) -> Result<()> {
        if self.vehicles[i].frozen {
            return Ok(());
        }
        let u = self.raw_command(i, now)?;
        if !u.is_finite() {
            return Err(Error::NonFinite("controller output"));
        }
        let v = &mut self.vehicles[i];
        v.state.commanded_acceleration = applied(&self.cfg.dynamics, &v.state, u);
        Ok(())
    }

    fn run_monitor(&mut self, i: usize, now: SimTime) -> Result<()> {
        let v = &self.vehicles[i];
        if v.info.index.is_leader() || v.frozen {
            return Ok(());
        }
        let own = v.state.commanded_acceleration;
        let inputs = FollowerInputs {
            own_acceleration: own,
            leader_acceleration: v.leader_view.map(|l| l.acceleration),
            front_acceleration: v.front_view.map(|f| f.acceleration),
            target_speed: match v.intent {
                Some(Intent::SlowDown { target_speed, .. }) => target_speed,
                _ => v.state.speed,
            },
            end_dynamics: v.intent.is_none() && own >= -self.cfg.jbe.c,
        };
        let (state, request) = jbe_follower_monitor(&inputs, v.follower_state, &self.cfg.jbe);
        self.vehicles[i].follower_state = state;
        if let Some(request) = request {
            self.send_special(i, request, now, false)?;
        }
        Ok(())
    }

    fn send_special(
        &mut self,
        i: usize,
        request: SpecialRequest,
        now: SimTime,
        retransmission: bool,
    ) -> Result<()> {
        if !retransmission {
            self.vehicles[i].reliability.on_sent(request, now);
        }
        self.queue.schedule(
            now,
            Event::TxAttempt {
                vehicle: i as u32,
                kind: TxKind::Special {
                    request,
                    retransmission,
                },
            },
        )?;
        if let Some(deadline) = self.vehicles[i].reliability.deadline() {
            self.queue
                .schedule(deadline, Event::ReliabilityCheck { vehicle: i as u32 })?;
        }
        Ok(())
    }

    fn reliability_check(&mut self, now: SimTime, i: usize) -> Result<()> {
        match self.vehicles[i].reliability.poll(now) {
            Some(ReliabilityEvent::Retransmit(request)) => self.send_special(i, request, now, true),
            Some(ReliabilityEvent::Failure(_)) | None => Ok(()),
        }
    }

    fn schedule_normal(&mut self, i: usize, at: SimTime) -> Result<()> {
        self.vehicles[i].normal_pending = true;
        self.queue.schedule(
            at,
            Event::TxAttempt {
                vehicle: i as u32,
                kind: TxKind::Normal,
            },
        )
    }

    fn leader_due_check(&mut self, i: usize, now: SimTime) -> Result<()> {
        let v = &self.vehicles[i];
        if v.normal_pending {
            return Ok(());
        }
        let due = match v.last_normal_tx {
            None => now >= v.phase,
            Some(last) => {
                let du = v.state.commanded_acceleration - v.last_tx_accel;
                now >= last + secs_to_micros(jb_interval(du, &self.cfg.jb))
            }
        };
        if due {
            self.schedule_normal(i, now)?;
        }
        Ok(())
    }

    fn fallback_check(&mut self, i: usize, now: SimTime) -> Result<()> {
        let v = &self.vehicles[i];
        if v.normal_pending {
            return Ok(());
        }
        let reference = v.last_normal_tx.unwrap_or(v.phase);
        let wait = secs_to_micros(self.cfg.jb.max_bi + self.cfg.beaconing.fallback_grace);
        if now >= reference + wait {
            self.schedule_normal(i, now)?;
        }
        Ok(())
    }

    fn tx_attempt(&mut self, now: SimTime, i: usize, kind: TxKind) -> Result<()> {
        let id = VehicleId(i as u32);
        if let Some(busy) = self.channel.busy_until(id, now) {
            let at = carrier_sense_defer(
                now.as_micros(),
                Some(busy),
                self.cfg.channel.backoff_window_us,
                &mut self.rng,
            );
            return self.queue.schedule(
                SimTime::from_micros(at),
                Event::TxAttempt {
                    vehicle: i as u32,
                    kind,
                },
            );
        }

        let v = &self.vehicles[i];
        let (beacon_type, command_value) = match kind {
            TxKind::Normal => (BeaconType::Normal, None),
            TxKind::Special { request, .. } => (request.beacon_type(), request.command_value()),
        };
        let frame = Beacon {
            sender: id,
            platoon: v.info.platoon,
            platoon_index: v.info.index,
            beacon_type,
            position: v.state.position,
            speed: v.state.speed,
            acceleration: v.state.commanded_acceleration,
            command_value,
            ack_map: v.heard,
            timestamp: now,
            size: self.cfg.beaconing.beacon_size,
        };

        let (tx, end) = self
            .channel
            .start_transmission(id, &self.positions, now, frame.clone())?;
        self.beacons_sent += 1;
        let log = self.beacon_log.len();
        self.beacon_log.push(BeaconRecord {
            time: now.as_secs(),
            sender: id,
            beacon_type,
            payload: command_value,
            outcome: BeaconOutcome::Lost,
        });
        match kind {
            TxKind::Normal => {
                let v = &mut self.vehicles[i];
                v.normal_pending = false;
                v.last_normal_tx = Some(now);
                v.last_tx_accel = frame.acceleration;
                v.heard.clear();
            }
            TxKind::Special { retransmission, .. } => self.special_log.push(SpecialBeaconRecord {
                time: now.as_secs(),
                sender: id,
                platoon: frame.platoon,
                index: frame.platoon_index,
                beacon_type,
                payload: command_value,
                retransmission,
            }),
        }
        self.queue.schedule(end, Event::TxEnd { id: tx, log })
    }

    fn tx_end(&mut self, now: SimTime, id: u64, log: usize) -> Result<()> {
        let Some(delivery) = self.channel.finish_transmission(id) else {
            return Ok(());
        };
        self.beacon_log[log].outcome = outcome_of(&delivery);
        if self.options.channel_trace {
            let time = SimTime::from_micros(delivery.start).as_secs();
            for (receiver, outcome) in Channel::full_outcomes(&delivery, self.vehicles.len()) {
                self.channel_trace.push(ChannelRecord {
                    time,
                    transmitter: delivery.transmitter,
                    receiver,
                    outcome,
                });
            }
        }
        let receivers: Vec<VehicleId> = delivery
            .receptions
            .iter()
            .filter(|(_, o)| *o == ReceptionOutcome::Delivered)
            .map(|(r, _)| *r)
            .collect();
        for r in receivers {
            self.receive(now, r.0 as usize, &delivery.frame)?;
        }
        Ok(())
    }

    fn receive(&mut self, now: SimTime, r: usize, frame: &Beacon) -> Result<()> {
        let info = self.vehicles[r].info;
        if frame.platoon != info.platoon || frame.sender.0 as usize == r {
            return Ok(());
        }
        let action = jb_on_beacon_received(info.platoon, info.index, self.platoon_size, frame);

        if info.index.is_leader() {
            if frame.beacon_type == BeaconType::Normal {
                if action.leader_beacon_acked {
                    self.tail_acks += 1;
                }
                if self.scheme == Scheme::Jb {
                    self.vehicles[r].heard.set(frame.platoon_index);
                }
                return Ok(());
            }
            if self.scheme != Scheme::Jbe {
                return Ok(());
            }
            let v = &self.vehicles[r];
            let (state, control, outcome) = jbe_leader_handle(
                info.platoon,
                frame,
                v.leader_state,
                v.control,
                self.cfg.jbe.arbitration,
            );
            match outcome {
                LeaderHandleOutcome::Applied => {
                    let v = &mut self.vehicles[r];
                    v.leader_state = state;
                    v.control = control;
                    v.heard.set(frame.platoon_index);
                    self.refresh_command(r, now)?;
                    self.leader_due_check(r, now)?;
                }
                LeaderHandleOutcome::Malformed => self.malformed += 1,
                LeaderHandleOutcome::Discarded => {}
            }
            return Ok(());
        }

        if !jbe_follower_handle(frame) {
            return Ok(());
        }
        let view = RemoteVehicleView {
            position: frame.position,
            speed: frame.speed,
            acceleration: frame.acceleration,
            received_at: frame.timestamp,
        };
        let scheme = self.scheme;
        let v = &mut self.vehicles[r];
        v.heard.set(frame.platoon_index);
        if action.update_leader_view {
            v.leader_view = Some(view);
            if scheme == Scheme::Jbe {
                v.reliability.on_leader_beacon(frame);
            }
        }
        if action.update_front_view {
            v.front_view = Some(view);
        }
        if action.update_leader_view || action.update_front_view {
            self.refresh_command(r, now)?;
        }
        if action.trigger_transmission && !self.vehicles[r].normal_pending {
            let at = now + secs_to_micros(self.cfg.beaconing.slot_offset);
            self.schedule_normal(r, at)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<RunMetrics> {
        let end = SimTime::from_micros(self.duration_us);
        let (cbr_series, avg_cbr) = aggregate_cbr(self.channel.ledgers(), end)?;
        let protocol_failures = self.vehicles.iter().map(|v| v.reliability.failures()).sum();
        let retransmissions = self
            .vehicles
            .iter()
            .map(|v| v.reliability.retransmissions())
            .sum();
        Ok(RunMetrics {
            scheme: self.scheme.name().to_string(),
            scenario: self.experiment.name().to_string(),
            seed: self.cfg.scenario.seed,
            vehicles: self.vehicles.iter().map(|v| v.info).collect(),
            global_min_distance: self.min_intra,
            inter_platoon_min_distance: self.min_inter,
            crash: self.crash,
            cbr_series,
            avg_cbr,
            traces: self.traces,
            special_beacon_log: self.special_log,
            beacon_log: self.beacon_log,
            channel_trace: self.channel_trace,
            protocol_failures,
            retransmissions,
            malformed_specials: self.malformed,
            leader_tail_acks: self.tail_acks,
            beacons_sent: self.beacons_sent,
        })
    }
}

/// Runs one experiment to completion with the seed and duration in `cfg`.
pub fn run(cfg: &SimConfig, experiment: Experiment, scheme: Scheme) -> Result<RunMetrics> {
    run_with(cfg, experiment, scheme, RunOptions::default())
}

pub fn run_with(
    cfg: &SimConfig,
    experiment: Experiment,
    scheme: Scheme,
    options: RunOptions,
) -> Result<RunMetrics> {
    Simulation::new(cfg, experiment, scheme, options)?.run_to_end()
}
