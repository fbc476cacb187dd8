//! Discrete-event simulator for CACC vehicle platoons sharing a broadcast
//! channel, comparing jerk-driven beaconing (JB) against its follower-aware
//! extension (JBE).

pub mod beaconing;
pub mod channel;
pub mod config;
pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod output;
pub mod queue;
pub mod scenario;
pub mod sim;
pub mod time;
pub mod types;

pub use beaconing::Scheme;
pub use config::{Density, SimConfig};
pub use error::{Error, Result};
pub use metrics::RunMetrics;
pub use scenario::Experiment;
pub use sim::{run, run_with, RunOptions, Simulation};
pub use time::SimTime;
