pub mod classify;
pub mod cli;
pub mod error;
pub mod gaze;
pub mod hmm;
pub mod scores;
pub mod synth;
pub mod tuning;

pub use error::{Error, Result};
