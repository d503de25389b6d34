//! Core solvers for stochastic PDEs of the form
//!
//! ```text
//! du(t) - div γ(∇u(t)) dt ∋ B(t, u(t)) dW(t),      u(0) = u0,
//! ```
//!
//! on a rectangle with homogeneous Dirichlet boundary, where γ = ∂k is the
//! subdifferential of a convex integrand k (possibly multivalued) and W is a
//! truncated cylindrical Wiener process.
//!
//! The crate is organised around the constructive solution procedure:
//!
//! * [`convex`] — convex integrands with resolvent (proximal map), Yosida
//!   approximation, and convex conjugate, plus the duality identities that
//!   make the selection η ∈ γ(∇u) checkable numerically.
//! * [`grid`] — finite-difference fields with a gradient/divergence pair
//!   that satisfies summation by parts exactly, and the implicit viscosity
//!   solve.
//! * [`noise`] — counter-based Wiener increments and Hilbert–Schmidt
//!   diffusion coefficients (additive and multiplicative).
//! * [`evolution`] — the semi-implicit stepper for the regularized equation
//!   and per-path trajectory assembly with energy diagnostics.
//! * [`picard`] — the multiplicative-noise solver as a fixed point of the
//!   frozen-coefficient map in exponentially weighted norms.
//! * [`diagnostics`] — moment reports, λ-sweeps, and refinement studies.
//!
//! The crate is `no_std` (with `alloc`); all I/O lives in the companion CLI
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod convex;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod grid;
pub mod math;
pub mod noise;
pub mod picard;
pub mod rng;

pub use convex::ConvexIntegrand;
pub use error::{Error, Result};
pub use evolution::{SolutionBundle, SolverConfig};
pub use grid::{Field, Grid, VectorField};
pub use noise::{DiffusionCoefficient, WienerDriver};
