//! Steering criteria for two-qubit Werner states under measurement
//! misalignment.
//!
//! The crate is split into:
//!
//! * [`qcore`]: states, Bloch-vector measurements and joint outcome tables
//!   (generic trace path and Werner closed forms).
//! * [`entropy`]: Tsallis, Shannon and Rényi entropies, their conditional
//!   forms and the uncertainty-relation bounds.
//! * [`criteria`]: entropic and dimension-bounded steering parameters,
//!   closed forms, threshold solvers and sweeps.
//! * [`montecarlo`]: violation probabilities of the dimension-bounded
//!   criterion under random measurements.
//! * [`expio`]: coincidence-count ingestion and error budgets.
//!
//! Every steering parameter is normalized so that a positive value certifies
//! steering.

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod criteria;
pub mod entropy;
pub mod error;
pub mod expio;
pub mod montecarlo;
pub mod qcore;

pub use criteria::{Criterion, MeasurementMode, Scenario, SteeringResult};
pub use entropy::{Distribution, Order};
pub use error::{Result, SteeringError};
pub use expio::{AnalysisOptions, CountsRecord, CriterionReport, ErrorBudget, ReportRecord};
pub use montecarlo::{MCConfig, MCEstimate, SamplerScheme};
pub use qcore::{BlochVector, DensityMatrix, JointTable, Outcome, Settings, WernerParam};
