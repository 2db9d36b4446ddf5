//! Association of networked flying platforms (NFPs, aerial fronthaul hubs)
//! with small cells.
//!
//! The pipeline is: place nodes ([`scenario`]), evaluate the air-to-ground
//! channel ([`channel`]), pose the association problem ([`instance`]) and
//! solve it greedily or exactly ([`solvers`]). [`experiments`] batches the
//! pipeline over random scenarios.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod instance;
pub mod matrix;
pub mod scenario;
pub mod solvers;

pub use channel::{compute_link_metrics, EnvironmentParams, LinkMetrics, Position3D};
pub use error::{Error, Result};
pub use instance::{
    check_feasibility, objective, AssociationInstance, AssociationMatrix, FeasibilityReport, NetworkLimits,
    SymmetricLimits,
};
pub use matrix::Matrix;
pub use scenario::{build_scenario, Scenario, ScenarioConfig};
pub use solvers::{solve, ScoreWeights, SolverKind, SolverOptions};
