//! Multiple solutions of the discrete anisotropic boundary value problem
//!
//! ```text
//! -Δ(|Δx(k-1)|^{p(k-1)-2} Δx(k-1)) + γ g(k, x(k)) + λ f(k, x(k)) = 0,   k ∈ [1, T]
//! x(0) = x(T+1) = 0
//! ```
//!
//! Solutions are the critical points of an action functional on the
//! `T`-dimensional space of grid functions with zero boundary values. The
//! crate provides the functional and its derivatives ([`energy`]), the
//! nonlinear terms and sampling checks of their hypotheses
//! ([`nonlinearity`]), the constants that bound the parameter `γ` for which
//! two nontrivial solutions are guaranteed ([`constants`]), solvers that
//! locate and certify critical points ([`solver`]), and a parameter-plane
//! sweep with CSV/JSON reports ([`report`]).

pub mod constants;
pub mod energy;
pub mod error;
pub mod grid;
pub mod nonlinearity;
pub mod report;
pub mod solver;

pub use energy::{ExponentProfile, ProblemSpec};
pub use grid::{GridFunction, NormPair};
