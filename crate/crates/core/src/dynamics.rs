//! Longitudinal vehicle dynamics: first-order actuation lag, acceleration
//! limits and semi-implicit Euler integration.

use crate::error::{Error, Result};
use crate::types::VehicleState;

/// Lower-level actuator between the controller output and the wheels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuationModel {
    /// First-order lag time constant in seconds. Zero means the command is
    /// realised instantly.
    pub lag: f64,
    pub max_acceleration: f64,
    /// Negative.
    pub max_deceleration: f64,
}

impl Default for ActuationModel {
    fn default() -> Self {
        ActuationModel {
            lag: 0.5,
            max_acceleration: 3.0,
            max_deceleration: -8.0,
        }
    }
}

impl ActuationModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.lag.is_finite() && self.lag >= 0.0) {
            return Err(Error::config("dynamics.lag", "must be finite and >= 0"));
        }
        if !(self.max_acceleration.is_finite() && self.max_acceleration > 0.0) {
            return Err(Error::config("dynamics.max_acceleration", "must be > 0"));
        }
        // Follower Stopping brakes at -6 m/s^2.
        if !(self.max_deceleration.is_finite() && self.max_deceleration <= -6.0) {
            return Err(Error::config("dynamics.max_deceleration", "must be <= -6"));
        }
        Ok(())
    }

    pub fn clamp(&self, command: f64) -> f64 {
        command.clamp(self.max_deceleration, self.max_acceleration)
    }
}

/// Advances one vehicle by `dt` seconds under `commanded` acceleration.
pub fn step_vehicle(
    state: &VehicleState,
    commanded: f64,
    dt: f64,
    model: &ActuationModel,
) -> Result<VehicleState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::NonFinite("step_vehicle dt"));
    }
    if !(commanded.is_finite()
        && state.position.is_finite()
        && state.speed.is_finite()
        && state.acceleration.is_finite())
    {
        return Err(Error::NonFinite("step_vehicle"));
    }

    let command = model.clamp(commanded);
    let mut next = *state;

    if state.speed <= 0.0 && command <= 0.0 {
        next.speed = 0.0;
        next.acceleration = 0.0;
        next.commanded_acceleration = 0.0;
        return Ok(next);
    }

    next.acceleration = if model.lag == 0.0 {
        command
    } else {
        let blend = 1.0 - (-dt / model.lag).exp();
        state.acceleration + (command - state.acceleration) * blend
    };
    next.commanded_acceleration = command;
    next.speed = (state.speed + next.acceleration * dt).max(0.0);
    next.position = state.position + next.speed * dt;
    Ok(next)
}

/// Bumper-to-bumper gap from `ego` to the vehicle ahead. Non-positive values
/// mean the two vehicles overlap.
pub fn radar_distance(ego: &VehicleState, front: &VehicleState) -> Result<f64> {
    if ego.lane != front.lane {
        return Err(Error::LaneMismatch {
            ego: ego.lane,
            front: front.lane,
        });
    }
    Ok(front.position - front.length - ego.position)
}
