//! Commodity futures under a two-factor stochastic convenience-yield model:
//! affine futures pricing, physical-measure futures dynamics, exact-transition
//! path simulation, and closed-form optimal trading strategies for an
//! exponential-utility investor holding one or two contracts.
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod model;
pub mod pricing;
pub mod quad;
pub mod strategy;

pub use error::{Error, Result};
pub use model::{ContractSpec, MarketState, ModelParams, RiskPrefs};
