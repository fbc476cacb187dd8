//! Longitudinal controllers: PATH CACC for followers, a proportional cruise
//! law for leaders, and dead reckoning of stale remote state.

use crate::error::{Error, Result};
use crate::time::SimTime;
use crate::types::VehicleState;

/// Gains of the PATH CACC law, in the order they appear in
/// `u = a1*u_front + a2*u_leader + a3*(d_d - d_radar) + a4*(v - v_leader) + a5*(v - v_front)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaccGains {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Multiplies the spacing error `d_d - d_radar`.
    pub alpha3: f64,
    /// Multiplies the speed difference to the leader.
    pub alpha4: f64,
    /// Multiplies the speed difference to the vehicle ahead.
    pub alpha5: f64,
    pub desired_gap: f64,
}

impl CaccGains {
    /// Gains from the usual (C1, xi, omega_n) parameterisation.
    pub fn from_design(c1: f64, xi: f64, omega_n: f64, desired_gap: f64) -> Self {
        let root = xi + (xi * xi - 1.0).max(0.0).sqrt();
        CaccGains {
            alpha1: 1.0 - c1,
            alpha2: c1,
            alpha3: -omega_n * omega_n,
            alpha4: -c1 * root * omega_n,
            alpha5: -(2.0 * xi - c1 * root) * omega_n,
            desired_gap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("cacc.alpha1", self.alpha1),
            ("cacc.alpha2", self.alpha2),
            ("cacc.alpha3", self.alpha3),
            ("cacc.alpha4", self.alpha4),
            ("cacc.alpha5", self.alpha5),
        ];
        for (key, v) in named {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        if !(self.desired_gap.is_finite() && self.desired_gap > 0.0) {
            return Err(Error::config("cacc.desired_gap", "must be > 0"));
        }
        Ok(())
    }
}

impl Default for CaccGains {
    fn default() -> Self {
        CaccGains::from_design(0.5, 1.0, 0.2, 5.0)
    }
}

/// Last known state of the leader or the vehicle ahead, as carried by beacons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemoteVehicleView {
    pub position: f64,
    pub speed: f64,
    pub acceleration: f64,
    /// Time the state refers to.
    pub received_at: SimTime,
}

pub fn path_cacc(
    ego: &VehicleState,
    front: Option<&RemoteVehicleView>,
    leader: Option<&RemoteVehicleView>,
    d_radar: f64,
    gains: &CaccGains,
) -> Result<f64> {
    let front = front.ok_or(Error::UnpopulatedView("front"))?;
    let leader = leader.ok_or(Error::UnpopulatedView("leader"))?;
    if !d_radar.is_finite() {
        return Err(Error::NonFinite("path_cacc d_radar"));
    }
    Ok(gains.alpha1 * front.acceleration
        + gains.alpha2 * leader.acceleration
        + gains.alpha3 * (-d_radar + gains.desired_gap)
        + gains.alpha4 * (ego.speed - leader.speed)
        + gains.alpha5 * (ego.speed - front.speed))
}

pub fn leader_cruise(current: f64, target: f64, gain: f64) -> f64 {
    let u = gain * (target - current);
    if u.is_finite() {
        u
    } else {
        0.0
    }
}

/// Projects `view` forward to `now` assuming constant acceleration. A
/// decelerating vehicle is held at its stopping point once its speed reaches
/// zero.
pub fn dead_reckon(view: &RemoteVehicleView, now: SimTime) -> RemoteVehicleView {
    let dt = now.secs_since(view.received_at);
    if dt == 0.0 {
        return *view;
    }
    let (speed, travelled) = {
        let v = view.speed + view.acceleration * dt;
        if v >= 0.0 || view.acceleration >= 0.0 {
            (
                v.max(0.0),
                view.speed * dt + 0.5 * view.acceleration * dt * dt,
            )
        } else {
            (0.0, view.speed * view.speed / (2.0 * -view.acceleration))
        }
    };
    RemoteVehicleView {
        position: view.position + travelled,
        speed,
        acceleration: view.acceleration,
        received_at: now.max(view.received_at),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn view(position: f64, speed: f64, acceleration: f64) -> RemoteVehicleView {
        RemoteVehicleView {
            position,
            speed,
            acceleration,
            received_at: SimTime::ZERO,
        }
    }

    #[test]
    fn default_gains_from_design() {
        let g = CaccGains::default();
        assert!((g.alpha1 - 0.5).abs() < 1e-15);
        assert!((g.alpha2 - 0.5).abs() < 1e-15);
        assert!((g.alpha3 + 0.04).abs() < 1e-15);
        assert!((g.alpha4 + 0.1).abs() < 1e-15);
        assert!((g.alpha5 + 0.3).abs() < 1e-15);
    }

    #[test]
    fn steady_state_is_zero() {
        let g = CaccGains::default();
        let ego = VehicleState::cruising(0.0, 27.78, 0, 4.0);
        let v = view(9.0, 27.78, 0.0);
        assert_eq!(path_cacc(&ego, Some(&v), Some(&v), 5.0, &g).unwrap(), 0.0);
    }

    #[test]
    fn gap_error_term_isolated() {
        let g = CaccGains::default();
        let ego = VehicleState::cruising(0.0, 27.78, 0, 4.0);
        let v = view(10.0, 27.78, 0.0);
        let u = path_cacc(&ego, Some(&v), Some(&v), 6.0, &g).unwrap();
        assert!((u - -g.alpha3).abs() < 1e-15);
    }

    #[test]
    fn unpopulated_view_is_an_error() {
        let g = CaccGains::default();
        let ego = VehicleState::cruising(0.0, 27.78, 0, 4.0);
        let v = view(10.0, 27.78, 0.0);
        assert!(path_cacc(&ego, None, Some(&v), 5.0, &g).is_err());
        assert!(path_cacc(&ego, Some(&v), None, 5.0, &g).is_err());
    }

    #[test]
    fn cruise_law() {
        assert_eq!(leader_cruise(27.78, 27.78, 0.5), 0.0);
        assert!((leader_cruise(27.78, 22.22, 0.5) + 2.78).abs() < 1e-12);
        assert!((leader_cruise(0.0, 27.78, 0.5) - 13.89).abs() < 1e-12);
    }

    #[test]
    fn dead_reckoning_examples() {
        let v = view(100.0, 20.0, 0.0);
        assert_eq!(dead_reckon(&v, SimTime::ZERO), v);

        let r = dead_reckon(&v, SimTime::from_secs(0.4));
        assert_eq!(r.speed, 20.0);
        assert!((r.position - 108.0).abs() < 1e-12);

        let r = dead_reckon(&view(100.0, 20.0, -2.0), SimTime::from_secs(0.4));
        assert!((r.speed - 19.2).abs() < 1e-12);
        assert!((r.position - 107.84).abs() < 1e-12);
        assert_eq!(r.acceleration, -2.0);
    }

    #[test]
    fn dead_reckoning_stops_at_standstill() {
        let r = dead_reckon(&view(0.0, 3.0, -6.0), SimTime::from_secs(2.0));
        assert_eq!(r.speed, 0.0);
        assert!((r.position - 0.75).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn dead_reckoning_composes(
            speed in 5.0f64..40.0,
            accel in -1.0f64..3.0,
            a_us in 0u64..1_000_000,
            b_us in 0u64..1_000_000,
        ) {
            let v = view(0.0, speed, accel);
            let ta = SimTime::from_micros(a_us);
            let tab = SimTime::from_micros(a_us + b_us);
            let two = dead_reckon(&dead_reckon(&v, ta), tab);
            let one = dead_reckon(&v, tab);
            prop_assert!((two.speed - one.speed).abs() < 1e-9);
            prop_assert!((two.position - one.position).abs() < 1e-9);
        }
    }
}
