//! Lower and upper bounds on prioritized (prior-weighted worst-case) risk.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod divergence;
pub mod error;
pub mod experiments;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod packing;
pub mod report;
pub mod risk;
pub mod validation;

pub use error::{Error, Result};
