//! Simulation and verification of averaging systems over time-varying graphs.
//!
//! Agents on the unit interval repeatedly move toward their neighbours. The
//! crate simulates such systems, measures their s-energy and communication
//! counts, checks every trajectory against a pairwise credit certificate,
//! builds adversarial lower-bound trajectories, and runs two applications:
//! box-squeeze opinion dynamics and discrete Kuramoto oscillators.
//!
//! Agents are identified by 0-based ids; "rank" always means the 0-based
//! position in sorted order at the current step.

pub mod adversary;
pub mod apps;
pub mod averaging;
pub mod configuration;
pub mod digraph;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod graph;
pub mod ledger;
pub mod matrix;
pub mod measure;
pub mod reduction;
pub mod simulate;
pub mod trace;
pub mod twist;

pub use adversary::{
    lb_closedform_b, lb_recurrence_a, lb_recurrence_b, lb_trajectory, sandwich, ClosedFormB, SandwichRow,
};
pub use averaging::{
    allowed_interval, apply_policy, neighbor_extremes, validate_averaging_step, AveragingParams, Policy,
    StepReport, DEFAULT_TOLERANCE,
};
pub use configuration::Configuration;
pub use digraph::{
    asym_step, hovering_check, is_cut_balanced, is_type_symmetric, DiGraph, StochasticStep,
};
pub use error::{Error, Result};
pub use geometry::{interval_union, step_energy, Interval};
pub use graph::{Adjacency, StepGraph};
pub use ledger::{
    bound_injection, certify_trace, certify_trace_with, check_bc_lowerbound, ineq_sx, CertificateSummary,
    ClearingRecord, Ledger,
};
pub use matrix::Matrix;
pub use measure::{accumulate, bound_comm, bound_energy, comm_count, CommBound, EnergyReport};
pub use reduction::{reduce_step, reduce_trace, verify_taucond};
pub use simulate::{
    simulate, simulate_stochastic, PolicyKind, SimConfig, StochasticKind, StochasticSimConfig,
};
pub use trace::{StepAction, StopReason, Trace, TraceKind, TraceRecord};
pub use twist::{twist_interval, twist_step_energy, validate_twist_step, TwistStep};
