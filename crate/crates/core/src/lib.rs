//! Probabilistic shaping of unipolar 4-PAM under a peak power constraint.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! piece of the system: channel laws, achievable-rate quadrature, the
//! single-parameter shaping optimizer, a constant composition distribution
//! matcher, regular LDPC construction with sum-product decoding, the PAS
//! transceiver, and the offline equalizer/AIR chain. File formats, the CLI
//! and thread pools live in the companion `ps4pam` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod air;
pub mod ccdm;
pub mod dsp;
pub mod error;
pub mod fer;
pub mod ldpc;
pub mod pam;
pub mod pas;
pub mod quadrature;
pub mod rates;
pub mod shaping;
pub mod spa;

pub use ccdm::Composition;
pub use error::{Error, Result};
pub use pam::{BitLabeling, ChannelKind, ChannelModel, InputDistribution, PamAlphabet};
pub use rates::{Metric, RateEngine, RatePoint};
pub use shaping::{ShapingOptimizer, ShapingSolution};
