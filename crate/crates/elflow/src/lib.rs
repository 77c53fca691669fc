//! Finite-difference solver and verification laboratory for the simplified
//! Ericksen–Leslie equations of nematic liquid-crystal flow in the
//! (velocity, deformation-gradient) formulation.
//!
//! The coupled system couples an incompressible Navier–Stokes equation for
//! the velocity `u`, driven by the elastic stress `-div(FᵀF)`, to a
//! parabolic transport-stretching equation for the matrix field `F = ∇d`:
//!
//! ```text
//! ∂u/∂t + u·∇u − μΔu + ∇P = −λ div(FᵀF)
//! ∂F/∂t + u·∇F + F∇u      = γΔF
//! div u = 0
//! ```
//!
//! Two integrators advance it: a strong-solution integrator that resolves
//! each implicit step by fixed-point (Picard) iteration over the frozen
//! previous iterate, and an independent semi-implicit reference integrator
//! with explicit nonlinear terms. The diagnostics stack checks the energy
//! balance, fixed-point contraction, small-data boundedness, and the
//! Grönwall-type comparison of the two trajectories.

pub mod config;
pub mod diagnostics;
pub mod field;
pub mod grid;
pub mod io;
pub mod linsolve;
pub mod ops;
pub mod picard;
pub mod reference;
pub mod run;
pub mod scenario;
pub mod verify;
pub mod weak;

pub use field::{FieldData, MatrixField, ScalarField, State, VectorField};
pub use grid::{BoundaryMode, Grid, GridError};
pub use linsolve::{LinearSolveConfig, LinearSolveError, LinearSolveReport};
