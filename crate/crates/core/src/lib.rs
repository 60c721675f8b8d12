//! Deterministic simulation of anonymous, fully synchronous robots perpetually
//! exploring a ring whose edges appear and disappear over time.
//!
//! * [`ring`] fixes node/edge indexing on the static ring.
//! * [`dynamics`] produces the evolving graph, including adaptive adversaries.
//! * [`robots`] holds the three exploration algorithms as pure functions.
//! * [`engine`] runs Look-Compute-Move rounds and records traces.
//! * [`analysis`] checks invariants and measures coverage over traces.
//! * [`config`], [`experiment`] and [`verify`] drive runs, sweeps, demos and
//!   the acceptance suite.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod ring;
pub mod robots;
pub mod verify;

pub use error::{Error, Result};
