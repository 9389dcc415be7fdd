pub mod analytics;
pub mod error;
pub mod filipovic;
pub mod harness;
pub mod mc;
pub mod operator;
pub mod ou;
pub mod projection;
pub mod rng;
pub mod variance;
pub mod vol_ou;

pub use error::{Error, Result};
