//! Simulation of extended Wigner's-friend experiments.
//!
//! Each agent keeps its own state assignment, updated step by step according
//! to a [`CollapsePolicy`]. The [`inference`] module derives the certainty
//! statements agents are entitled to, chains them across agents and checks
//! the result against the single-outcome branch records.

pub mod agents;
pub mod dsl;
pub mod error;
pub mod hardy;
pub mod hilbert;
pub mod inference;
pub mod measurement;
pub mod report;
pub mod scenario;

pub use agents::{
    advance, enumerate_branches, should_collapse, AgentView, Branch, CollapsePolicy, Run,
};
pub use error::{Error, Result};
pub use hardy::{hardy_probability, hardy_search, HardyResult, HardySettings};
pub use hilbert::{
    basis_state, inner, make_basis_state, normalize, superpose, tensor, Amplitude, SpaceRegistry,
    StateVector, Subsystem,
};
pub use inference::{
    certainty, derive_certainty_chain, detect_contradictions, view_probability, CertaintyStatement,
    Contradiction, Event,
};
pub use measurement::{
    collapse, outcome_probabilities, rewrite_in_basis, Distribution, MeasurementBasis,
};
pub use scenario::{Agent, Location, Scenario, Step};

/// Global comparison tolerance.
pub const EPS: f64 = 1e-9;
/// Threshold below which a probability or norm counts as exactly zero.
pub const ZERO_TOL: f64 = 1e-12;
