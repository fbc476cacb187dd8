//! Broadcast medium: a deterministic communication disc, airtime from the
//! bitrate, destructive collisions and per-observer busy-time accounting.

use rand::Rng;

use crate::error::{Error, Result};
use crate::time::{secs_to_micros, SimTime, MICROS_PER_SEC};
use crate::types::{Beacon, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// bit/s
    pub bitrate: f64,
    /// Per-frame preamble, header and inter-frame spacing, in seconds.
    pub overhead: f64,
    /// Metres.
    pub range: f64,
    /// Informational only; `range` decides reception.
    pub tx_power_mw: f64,
    /// Carrier-sense backoff is drawn uniformly from `[0, backoff_window_us)`.
    pub backoff_window_us: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            bitrate: 6.0e6,
            overhead: 100e-6,
            range: 500.0,
            tx_power_mw: 100.0,
            backoff_window_us: 256,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bitrate.is_finite() && self.bitrate > 0.0) {
            return Err(Error::config("channel.bitrate", "must be > 0"));
        }
        if !(self.overhead.is_finite() && self.overhead >= 0.0) {
            return Err(Error::config("channel.overhead", "must be >= 0"));
        }
        if !(self.range.is_finite() && self.range > 0.0) {
            return Err(Error::config("channel.range", "must be > 0"));
        }
        if self.backoff_window_us == 0 {
            return Err(Error::config("channel.backoff_window_us", "must be > 0"));
        }
        Ok(())
    }
}

/// Seconds on air for a frame of `size` bytes.
pub fn airtime(size: u32, cfg: &ChannelConfig) -> f64 {
    8.0 * size as f64 / cfg.bitrate + cfg.overhead
}

pub fn airtime_us(size: u32, cfg: &ChannelConfig) -> u64 {
    secs_to_micros(airtime(size, cfg)).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

pub fn in_range(a: Point, b: Point, range: f64) -> bool {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy <= range * range
}

/// Busy time seen by one observer, accumulated per window of `window_us`.
/// Intervals must be recorded in non-decreasing start order.
#[derive(Debug, Clone, PartialEq)]
pub struct BusyLedger {
    window_us: u64,
    flushed: Vec<u64>,
    current: Option<(u64, u64)>,
}

impl Default for BusyLedger {
    fn default() -> Self {
        BusyLedger::new(MICROS_PER_SEC)
    }
}

impl BusyLedger {
    pub fn new(window_us: u64) -> Self {
        BusyLedger {
            window_us,
            flushed: Vec::new(),
            current: None,
        }
    }

    pub fn window_us(&self) -> u64 {
        self.window_us
    }

    pub fn record(&mut self, start: u64, end: u64) -> Result<()> {
        if end <= start {
            return Ok(());
        }
        match self.current {
            Some((s, _)) if start < s => Err(Error::OutOfOrderInterval { start, last: s }),
            Some((s, e)) if start <= e => {
                self.current = Some((s, e.max(end)));
                Ok(())
            }
            Some(done) => {
                self.flush(done);
                self.current = Some((start, end));
                Ok(())
            }
            None => {
                self.current = Some((start, end));
                Ok(())
            }
        }
    }

    fn flush(&mut self, (start, end): (u64, u64)) {
        let mut t = start;
        while t < end {
            let w = (t / self.window_us) as usize;
            let w_end = (w as u64 + 1) * self.window_us;
            let chunk = end.min(w_end) - t;
            if self.flushed.len() <= w {
                self.flushed.resize(w + 1, 0);
            }
            self.flushed[w] += chunk;
            t += chunk;
        }
    }

    /// End of the busy period covering `at`, if the medium is busy then.
    pub fn busy_until(&self, at: u64) -> Option<u64> {
        match self.current {
            Some((s, e)) if s <= at && at < e => Some(e),
            _ => None,
        }
    }

    pub fn busy_in_window(&self, window: usize) -> u64 {
        let w_start = window as u64 * self.window_us;
        let w_end = w_start + self.window_us;
        let flushed = self.flushed.get(window).copied().unwrap_or(0);
        let open = match self.current {
            Some((s, e)) => e.min(w_end).saturating_sub(s.max(w_start)),
            None => 0,
        };
        flushed + open
    }

    /// Busy fraction of a window that has fully elapsed by `now`.
    pub fn cbr(&self, window: usize, now: SimTime) -> Result<f64> {
        let w_end = (window as u64 + 1) * self.window_us;
        if now.as_micros() < w_end {
            return Err(Error::WindowNotElapsed { window, now });
        }
        Ok(self.busy_in_window(window) as f64 / self.window_us as f64)
    }

    pub fn complete_windows(&self, now: SimTime) -> usize {
        (now.as_micros() / self.window_us) as usize
    }
}

/// Start time for a pending transmission: unchanged on an idle medium,
/// otherwise the end of the busy period plus a random backoff.
pub fn carrier_sense_defer<R: Rng>(
    scheduled: u64,
    busy_until: Option<u64>,
    backoff_window_us: u64,
    rng: &mut R,
) -> u64 {
    match busy_until {
        Some(end) if end > scheduled => end + rng.random_range(0..backoff_window_us),
        _ => scheduled,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceptionOutcome {
    Delivered,
    Collided,
    OutOfRange,
}

impl ReceptionOutcome {
    pub fn label(self) -> &'static str {
        match self {
            ReceptionOutcome::Delivered => "delivered",
            ReceptionOutcome::Collided => "collided",
            ReceptionOutcome::OutOfRange => "out-of-range",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transmission {
    pub id: u64,
    pub transmitter: VehicleId,
    pub origin: Point,
    pub start: u64,
    pub end: u64,
    pub frame: Beacon,
    /// Vehicles in range at the start, sorted, excluding the transmitter.
    audience: Vec<u32>,
    finished: bool,
}

impl Transmission {
    fn reaches(&self, v: u32) -> bool {
        self.audience.binary_search(&v).is_ok()
    }

    fn overlaps(&self, start: u64, end: u64) -> bool {
        self.start < end && start < self.end
    }
}

#[derive(Debug, Clone)]
pub struct Delivery {
    pub frame: Beacon,
    pub transmitter: VehicleId,
    pub start: u64,
    pub end: u64,
    /// In-range receivers and their outcome, in vehicle order.
    pub receptions: Vec<(VehicleId, ReceptionOutcome)>,
}

impl Delivery {
    pub fn delivered(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.receptions
            .iter()
            .filter(|(_, o)| *o == ReceptionOutcome::Delivered)
            .map(|(v, _)| *v)
    }

    pub fn lost_count(&self) -> usize {
        self.receptions
            .iter()
            .filter(|(_, o)| *o != ReceptionOutcome::Delivered)
            .count()
    }
}

/// The shared medium for one run.
pub struct Channel {
    cfg: ChannelConfig,
    ledgers: Vec<BusyLedger>,
    transmissions: Vec<Transmission>,
    next_id: u64,
    max_airtime: u64,
}

impl Channel {
    pub fn new(cfg: ChannelConfig, vehicles: usize) -> Self {
        Channel {
            cfg,
            ledgers: vec![BusyLedger::default(); vehicles],
            transmissions: Vec::new(),
            next_id: 0,
            max_airtime: 0,
        }
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn ledger(&self, observer: VehicleId) -> &BusyLedger {
        &self.ledgers[observer.0 as usize]
    }

    pub fn ledgers(&self) -> &[BusyLedger] {
        &self.ledgers
    }

    pub fn busy_until(&self, observer: VehicleId, at: SimTime) -> Option<u64> {
        self.ledgers[observer.0 as usize].busy_until(at.as_micros())
    }

    pub fn is_transmitting(&self, v: VehicleId, at: SimTime) -> bool {
        let t = at.as_micros();
        self.transmissions
            .iter()
            .any(|tx| tx.transmitter == v && tx.start <= t && t < tx.end)
    }

    /// Puts `frame` on air from `transmitter` at `at`. `positions` is indexed
    /// by vehicle id. Returns the transmission id and its end time.
    pub fn start_transmission(
        &mut self,
        transmitter: VehicleId,
        positions: &[Point],
        at: SimTime,
        frame: Beacon,
    ) -> Result<(u64, SimTime)> {
        if self.is_transmitting(transmitter, at) {
            return Err(Error::HalfDuplex(transmitter.0));
        }
        let start = at.as_micros();
        let duration = airtime_us(frame.size, &self.cfg);
        let end = start + duration;
        self.max_airtime = self.max_airtime.max(duration);
        self.prune(start);

        let origin = positions[transmitter.0 as usize];
        let audience: Vec<u32> = positions
            .iter()
            .enumerate()
            .filter(|(i, p)| *i as u32 != transmitter.0 && in_range(origin, **p, self.cfg.range))
            .map(|(i, _)| i as u32)
            .collect();

        self.ledgers[transmitter.0 as usize].record(start, end)?;
        for v in &audience {
            self.ledgers[*v as usize].record(start, end)?;
        }

        let id = self.next_id;
        self.next_id += 1;
        self.transmissions.push(Transmission {
            id,
            transmitter,
            origin,
            start,
            end,
            frame,
            audience,
            finished: false,
        });
        Ok((id, SimTime::from_micros(end)))
    }

    /// Resolves who received transmission `id`. Must be called at or after
    /// its end time, before any transmission starting later than that end.
    pub fn finish_transmission(&mut self, id: u64) -> Option<Delivery> {
        let idx = self.transmissions.iter().position(|t| t.id == id)?;
        let (start, end) = {
            let t = &self.transmissions[idx];
            (t.start, t.end)
        };
        let this = &self.transmissions[idx];
        let receptions = this
            .audience
            .iter()
            .map(|&r| {
                let collided = self.transmissions.iter().any(|o| {
                    o.id != id && o.overlaps(start, end) && (o.transmitter.0 == r || o.reaches(r))
                });
                let outcome = if collided {
                    ReceptionOutcome::Collided
                } else {
                    ReceptionOutcome::Delivered
                };
                (VehicleId(r), outcome)
            })
            .collect();
        let delivery = Delivery {
            frame: this.frame.clone(),
            transmitter: this.transmitter,
            start,
            end,
            receptions,
        };
        self.transmissions[idx].finished = true;
        Some(delivery)
    }

    fn prune(&mut self, now: u64) {
        let horizon = self.max_airtime;
        self.transmissions
            .retain(|t| !t.finished || t.end + horizon > now);
    }

    /// Outcome for every vehicle other than the sender, including those out of
    /// range. Used for the optional channel trace.
    pub fn full_outcomes(
        delivery: &Delivery,
        vehicles: usize,
    ) -> Vec<(VehicleId, ReceptionOutcome)> {
        let mut out = Vec::with_capacity(vehicles);
        let mut it = delivery.receptions.iter().peekable();
        for v in 0..vehicles as u32 {
            if v == delivery.transmitter.0 {
                continue;
            }
            match it.peek() {
                Some((r, o)) if r.0 == v => {
                    out.push((*r, *o));
                    it.next();
                }
                _ => out.push((VehicleId(v), ReceptionOutcome::OutOfRange)),
            }
        }
        out
    }
}
