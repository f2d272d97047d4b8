//! Simulator and evaluation pipeline for near-field RF wireless power
//! transfer from a distributed multi-antenna array.
//!
//! The pipeline is: [`geometry`] places transmitters and receive points,
//! [`channel`] computes spherical-wavefront line-of-sight gains,
//! [`strategies`] turns pilot estimates into transmit phases, [`engine`]
//! sums the contributions into received-power fields and Monte Carlo sweeps,
//! and [`metrics`] extracts focal-spot size, gains and distributions.

// `!(x >= 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod strategies;

pub use channel::{channel_vector, los_channel, uplink_phase_estimate, wrap_phase, Carrier, ChannelVector};
pub use config::{load_config, SimConfig};
pub use engine::{
    analytic_expected_power, received_power, simulate_field, simulate_snapshots, sweep_sigma, PowerField, Scenario,
    SweepOptions, SweepResult,
};
pub use error::{Error, Result};
pub use geometry::{build_ceiling_grid, build_sampling_plane, distance, AntennaArray, Position3D, SamplingPlane};
pub use metrics::{ecdf, gain_db, percentile, spot_region, split_in_out, Ecdf, FocalSpot, Region};
pub use rng::RandomStream;
pub use strategies::{StrategyConfig, StrategyKind, TxPlan};
