//! Resilient distributed recovery of large spatially distributed fields
//! under measurement attacks.
//!
//! A team of agents measures a high-dimensional field. Each agent only
//! cares about a window of the field (its *interest set*) and only
//! measures a subset of it. An adversary arbitrarily corrupts some of
//! the scalar measurements. The agents run a consensus+innovations
//! iteration with interest-set message censorship and an adaptive
//! saturated innovation gain; under a redundancy condition on the
//! uncompromised measurements every agent still recovers the components
//! it is interested in.
//!
//! Module map:
//! - [`field_model`]: the field, per-agent measurement matrices, interest
//!   sets and the global scalar-measurement indexing.
//! - [`graph`]: communication topology, Laplacians, per-component induced
//!   subgraphs.
//! - [`attack`]: the adversary model, the leverage constant `Δ_A` and the
//!   resilience condition check.
//! - [`recovery`]: the per-agent algorithm (censorship, saturated gains,
//!   weight schedules) plus the non-resilient CIRFE baseline.
//! - [`analysis`]: auxiliary-state transform, the stacked dynamics used
//!   as an independent oracle, consensus/average error diagnostics and
//!   scalar time-varying reference systems with decay-rate fits.
//! - [`scenario`]: grid-world generation, trace persistence and metrics
//!   backing the CLI.
//!
//! All numerical code is generic over the scalar type through
//! [`scalar::Real`]; `f64` aliases are exported at the crate root.

pub mod analysis;
pub mod attack;
pub mod error;
pub mod field_model;
pub mod graph;
pub mod linalg;
pub mod recovery;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};

/// Concrete `f64` aliases for the common case.
pub type FieldVector64 = field_model::FieldVector<f64>;
pub type AgentMeasurement64 = field_model::AgentMeasurement<f64>;
pub type FieldSystem64 = field_model::FieldSystem<f64>;
pub type AttackSpec64 = attack::AttackSpec<f64>;
pub type HyperParams64 = recovery::HyperParams<f64>;
pub type SimulationTrace64 = recovery::SimulationTrace<f64>;
