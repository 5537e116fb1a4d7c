//! Online procurement with an inventory: cover per-slot demand from a priced
//! market or a capacity- and rate-limited storage, without knowing future
//! prices or demands.
//!
//! * [`batman`] and [`batman_rate`] are the online policies.
//! * [`offline`] computes the hindsight optimum.
//! * [`baselines`], [`instances`] and [`harness`] support evaluation.

pub mod baselines;
pub mod batman;
pub mod batman_rate;
pub mod cli;
pub mod error;
pub mod feasibility;
pub mod harness;
pub mod instances;
pub mod math;
pub mod model;
pub mod numfmt;
pub mod offline;

pub use error::{OlimError, Result};
pub use feasibility::{check_feasibility, ConstraintKind, Violation};
pub use math::{alpha, lambert_w0, AlphaContext};
pub use model::{BoundMode, Instance, InventorySpec, PriceBounds, Schedule, Slot};
pub use offline::solve_opt;
