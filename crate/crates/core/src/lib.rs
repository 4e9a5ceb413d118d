pub mod analysis;
pub mod assignment;
pub mod chunking;
pub mod dataset;
pub mod error;
pub mod features;
pub mod loco;
pub mod model;
pub mod synth;
pub mod tracking;

pub use error::{Error, Result};
