//! Simulator and analysis toolkit for a five-context KCBS contextuality test
//! on a three-mode linear-optical network with threshold detectors.
//!
//! The crate is organized bottom-up:
//!
//! - [`states`]: input optical states, photon-number statistics, loss.
//! - [`network`]: pentagon measurement vectors, per-context mode splits,
//!   detector wiring.
//! - [`click`]: exact joint click-outcome distributions.
//! - [`events`]: measurement events E1/E2/E3, conditioning, correlations,
//!   the KCBS parameter β and its closed forms, the corrected bound.
//! - [`quasiprob`]: β through the Glauber–Sudarshan P representation and the
//!   non-classicality witness.
//! - [`montecarlo`]: seeded trial-level simulation emitting raw count tables,
//!   plus the standard source estimators.
//! - [`analysis`]: ingestion of count tables and reconstruction of β with
//!   uncertainties.
//!
//! All computations are deterministic; the Monte Carlo layer derives its
//! randomness from an explicit seed with counter-based per-trial streams.

pub mod analysis;
pub mod click;
pub mod error;
pub mod events;
pub mod montecarlo;
pub mod network;
pub mod numeric;
pub mod quasiprob;
pub mod states;

pub use error::{Error, Result};
