//! Scenarios, file formats, metrics and the command line around
//! [`spre_core`].

pub mod cli;
pub mod error;
pub mod format;
pub mod metrics;
pub mod run;
pub mod scenario;
pub mod table_io;
pub mod timeseries;

pub use error::{Result, SpreError};
