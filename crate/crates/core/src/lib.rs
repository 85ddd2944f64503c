//! Feasible primal-dual interior point methods for convex quadratic programming
//! with a controlled level of inexactness in the Newton step.
//!
//! The crate implements two path-following variants over the primal-dual pair
//!
//! ```text
//!   min  cᵀx + ½ xᵀQx          max  bᵀy − ½ xᵀQx
//!   s.t. Ax = b, x ≥ 0         s.t. Aᵀy + s − Qx = c, s ≥ 0
//! ```
//!
//! * a *short-step* method whose iterates stay in the Euclidean-norm
//!   neighbourhood `N₂(θ)` of the central path, and
//! * a *long-step* method whose iterates stay in the symmetric infinity-norm
//!   neighbourhood `N_S(γ)`.
//!
//! Both accept Newton directions whose third (complementarity) block carries a
//! residual `r` with `‖r‖_p ≤ δ‖ξ‖_p`; the first two blocks are always exact.
//! An optional audit mode asserts, at runtime and on every iteration, the
//! second-order bounds, neighbourhood retention and per-iteration contraction
//! guarantees that the parameter choices certify.
//!
//! Module map:
//! * [`problem`] — problem data, iterates, validation and feasibility measures
//! * [`neighborhood`] — central-path proximity measures and membership tests
//! * [`newton`] — exact, residual-injected and truncated-iterative Newton solves
//! * [`bounds`] — scalar bound and stepsize-condition formulas used by the audit
//! * [`ipm`] — the two outer algorithms, trace emission and the audit harness
//! * [`generator`] — synthetic feasible instances with exactly-central starts
//! * [`analysis`] — parameter certification, lemma tightness and scaling studies

pub mod analysis;
pub mod bounds;
pub mod generator;
pub mod ipm;
pub mod linalg;
pub mod neighborhood;
pub mod newton;
pub mod problem;
pub mod rng;

pub use ipm::{SolveResult, SolverConfig, SolverStatus, StepMode, TraceRecord, Variant};
pub use linalg::{CscMatrix, MatrixStore};
pub use neighborhood::ProximityReport;
pub use newton::{InexactnessPolicy, InjectShape, NewtonDirection, NewtonTarget, NormTag};
pub use problem::{FeasibilityReport, Iterate, QpProblem, ValidationReport};
