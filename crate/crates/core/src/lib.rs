//! Toolkit for Lagrange optimal control problems with unrestricted controls.
//!
//! The crate models a problem `min ∫ L(t, x, u) dt` subject to
//! `x'(t) = φ(t, x, u)` with fixed endpoint states, and provides:
//!
//! - [`expr`]: parsed scalar expressions for `L` and the components of `φ`,
//!   with exact forward-mode derivatives;
//! - [`problem`]: the problem data model, grid-sampled trajectories and
//!   controls, cost evaluation, and admissibility checks;
//! - [`transform`]: the time reparameterization between the base problem and
//!   its autonomous companion in which `t` becomes a state with `t' = v`,
//!   `v ∈ [0.5, 1.5]`, including cost-preserving lifts and projections;
//! - [`extremal`]: Hamiltonians of both problems, adjoint-system residuals,
//!   maximality checks, and the lift/projection of extremals (lifted
//!   extremals sit on the zero level of the companion Hamiltonian);
//! - [`regularity`]: sampling-based checkers for the growth, coercivity,
//!   control-affinity, and integrable-bound conditions under which optimal
//!   controls are essentially bounded;
//! - [`solver`]: direct collocation transcription and an augmented-Lagrangian
//!   solver, plus a control-boundedness diagnostic over grid refinements;
//! - [`builtin`]: bundled example problems and reference trajectories.
//!
//! Everything is deterministic: sampling is seeded and low-discrepancy,
//! solves are single-threaded given an initial guess, and reports serialize
//! with a canonical JSON form (see [`report`]).

pub mod builtin;
pub mod expr;
pub mod extremal;
pub mod problem;
pub mod regularity;
pub mod report;
pub mod sampling;
pub mod solver;
pub mod transform;
