//! Std companion to `cyfut-core`: configuration, parallel simulation,
//! verification suite, backtests, sweeps and file formats.

pub mod backtest;
pub mod ce;
pub mod config;
pub mod error;
pub mod output;
pub mod sim;
pub mod sweep;
pub mod verify;

pub use config::{Config, Resolved};
pub use error::{Error, Result};
