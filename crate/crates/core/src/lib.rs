//! Simulation and optimization of irregular reconfigurable-intelligent-surface
//! (RIS) aided multi-user MISO downlinks.
//!
//! `N` RIS elements are placed on a subset of `N_s` grid points. The crate
//! draws Rayleigh channels with distance-dependent path loss, and searches
//! the element placement with adaptive tabu search ([`ats`]) and the 1..b-bit
//! phases with neighbor-extraction cross-entropy ([`nece`]), under a
//! zero-forcing BS precoder. An exhaustive [`oracle`] solves tiny instances.

pub mod ats;
pub mod channel;
pub mod config;
pub mod error;
pub mod model;
pub mod nece;
pub mod objective;
pub mod oracle;
pub mod power;
pub mod seed;

pub use config::SystemConfig;
pub use error::{Result, RisError};
pub use model::{ChannelSet, EvaluationResult, PhaseConfig, Precoder, TopologyMask};
pub use objective::{Objective, SearchContext};
pub use seed::StreamKey;
