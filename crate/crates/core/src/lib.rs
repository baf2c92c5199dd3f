//! Randomized reviewer-paper assignment.
//!
//! Fractional assignments are computed either by the capped linear program
//! (`solve_plra`) or by maximizing a concave perturbation of the quality
//! (`solve_pm_flow`, `solve_pm_exact`). Each fractional assignment can be
//! decomposed into a lottery over deterministic assignments and sampled.
//!
//! ```
//! use randmatch::{fixtures, solvers, metrics, cap::Cap};
//!
//! let inst = fixtures::fig1();
//! let x = solvers::solve_plra(&inst, Cap::new(1, 2).unwrap()).unwrap();
//! let m = metrics::compute_metrics(&x, &inst, None).unwrap();
//! assert!((m.quality - 5.0).abs() < 1e-9);
//! ```

pub mod cap;
pub mod cli;
mod dual;
pub mod error;
pub mod fixtures;
pub mod frontier;
pub mod flow;
pub mod instance;
pub mod io;
pub mod metrics;
pub mod perturbation;
pub mod sampling;
pub mod solvers;
pub mod tuning;

pub use cap::Cap;
pub use error::{Error, Result};
pub use instance::ProblemInstance;
pub use metrics::{compute_metrics, FractionalAssignment, MetricsReport};
pub use perturbation::{make_perturbation, Perturbation, PerturbationSpec};
