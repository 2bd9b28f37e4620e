//! Two-stage robust design for STAR-RIS-aided integrated sensing and
//! communication under angle uncertainty.

pub mod beamforming;
pub mod channel;
pub mod config;
pub mod error;
pub mod expectation;
pub mod fp_core;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod partition;
pub mod protocol;
pub mod rng;
pub mod star_coeffs;

pub use config::{Scheme, SystemConfig};
pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Protocol stage of a time slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Preparation = 0,
    Communication = 1,
}
