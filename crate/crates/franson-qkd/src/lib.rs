//! Simulation and analytic modeling of entanglement-based quantum key
//! distribution over telecom fiber.
//!
//! The system modeled here distributes a key between Alice, who keeps one
//! photon of each energy-time entangled pair, and Bob, who receives the
//! other photon over fiber and measures it in one of two phase bases with
//! gated avalanche photodiodes. The crate provides:
//!
//! - an analytic error-rate and raw-rate model built from the link budget
//!   ([`qber`]), with the fiber loss/dispersion model in [`channel`], the
//!   two-photon interference model in [`interference`], and the detector
//!   model in [`detection`];
//! - an event-level Monte Carlo of the protocol ([`protocol`]) that is
//!   cross-checked against the analytic model;
//! - classical post-processing: error estimation, interactive
//!   reconciliation, and privacy amplification ([`distillation`]);
//! - security comparisons against faint-laser-pulse systems ([`security`]);
//! - named experiment profiles and the command-line front end
//!   ([`profile`], [`cli`]).
//!
//! Most capabilities have a runnable demonstration under `examples/`; see
//! the README for the list.

pub mod channel;
pub mod cli;
pub mod detection;
pub mod distillation;
pub mod error;
pub mod interference;
pub mod profile;
pub mod protocol;
pub mod qber;
pub mod rng;
pub mod security;

pub use error::{Error, Result};
