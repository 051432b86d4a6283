//! Simulation, complex-domain encoding/decoding, and evaluation for
//! single-molecule localization microscopy.

pub mod codec;
pub mod error;
pub mod filtering;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod parallel;
pub mod pipeline;
pub mod render;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
