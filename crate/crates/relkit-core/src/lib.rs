//! Rigorous box-level numerics for discrete-time dynamics given by closed
//! relations.
//!
//! Phase spaces are compact rectangles discretized into uniform closed
//! boxes. Relations are finite unions of box products that contain the true
//! relation, so positive verdicts (attractor-block certification, admission
//! of a perturbed relation, omega enclosures) are rigorous for the denoted
//! objects. Finite discrete spaces get an exact digraph engine used as an
//! independent oracle.

pub mod attractor;
pub mod error;
pub mod expr;
pub mod finite;
pub mod grid;
pub mod interval;
pub mod persistence;
pub mod relation;
pub mod render;
pub mod report;
pub mod runner;
pub mod scenario;

pub use attractor::{
    attractor_from_block, find_attractor_block, is_attractor_block, is_invariant, omega_limit,
    BlockSearch, BlockVerdict, OmegaResult,
};
pub use error::{Error, Result};
pub use expr::Expr;
pub use finite::{FiniteRelation, Mutation, SuiteConfig, SuiteReport};
pub use grid::{BoxId, BoxSet, Grid};
pub use interval::Interval;
pub use persistence::{
    admits, parameter_sweep, perturbation_report, separation_radius, PersistenceReport, SweepRow,
};
pub use relation::{BoxRelation, RelationSpec, SpecKind};
pub use runner::{run_scenario, run_scenario_file, RunOptions};
pub use scenario::Scenario;
