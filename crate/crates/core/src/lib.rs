//! Device-free transmitter localization from Fresnel-zone blockage events.
//!
//! A moving obstacle tracked by a camera briefly blocks the first Fresnel
//! zone of an anchor-transmitter link. Detecting those blockages in the
//! anchor's received power, placing the obstacle's edges at the blockage
//! start and end, and fitting an ellipse to the edge points recovers the
//! transmitter position relative to the anchor.

pub mod baseline;
pub mod blockage;
pub mod boundary;
pub mod calibration;
pub mod error;
pub mod eval;
pub mod fitting;
pub mod geometry;
pub mod pipeline;
pub mod simulator;

pub use error::{Error, Result};
