use std::fmt;
use std::ops::{Add, Sub};

pub const MICROS_PER_SEC: u64 = 1_000_000;

/// Simulation time with microsecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    /// Rounds to the nearest microsecond; negative inputs saturate at zero.
    pub fn from_secs(secs: f64) -> Self {
        SimTime(secs_to_micros(secs))
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }

    /// Elapsed seconds from `earlier` to `self` (zero if `earlier` is later).
    pub fn secs_since(self, earlier: SimTime) -> f64 {
        self.saturating_sub(earlier).as_secs()
    }
}

pub fn secs_to_micros(secs: f64) -> u64 {
    if secs.is_finite() && secs > 0.0 {
        (secs * MICROS_PER_SEC as f64).round() as u64
    } else {
        0
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;

    fn add(self, micros: u64) -> SimTime {
        SimTime(self.0 + micros)
    }
}

impl Sub for SimTime {
    type Output = u64;

    fn sub(self, rhs: SimTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:06}s",
            self.0 / MICROS_PER_SEC,
            self.0 % MICROS_PER_SEC
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_micros() {
        assert_eq!(SimTime::from_secs(0.1).as_micros(), 100_000);
        assert_eq!(SimTime::from_secs(-1.0), SimTime::ZERO);
        assert_eq!(SimTime::from_secs(1.0000004).as_micros(), 1_000_000);
        assert_eq!(SimTime::from_micros(2_500_000).to_string(), "2.500000s");
    }
}
