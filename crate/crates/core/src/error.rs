//! Error type shared by all solver modules.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Inner root-find / descent of the proximal solver did not converge.
    ProxSolver {
        iterations: usize,
        last_radius: f64,
        residual: f64,
    },
    /// The Legendre-transform search box grew past its limit, i.e. the
    /// integrand is not numerically superlinear.
    ConjugateBox { radius: f64 },
    /// Operand shapes do not conform (grid mismatch, wrong lattice).
    ShapeMismatch { context: &'static str },
    /// Iterative linear solve stalled above tolerance.
    LinearSolver { residual: f64, iterations: usize },
    /// Non-finite state detected while stepping; the path is aborted.
    BlowUp { path: usize, step: usize },
    /// Time step violates the explicit-drift stability guard.
    GuardViolation { dt: f64, bound: f64 },
    /// Picard iteration expanded for three consecutive iterations.
    NonContraction {
        distances: Vec<f64>,
        ratios: Vec<f64>,
    },
    /// Picard iteration exhausted its iteration budget.
    MaxIterations { iterations: usize, distance: f64 },
    /// A reduction over paths received no data.
    EmptyBundle,
    /// Desk-scale resource limit exceeded.
    ResourceGuard { what: String },
    /// Requested evaluation time is not on the trajectory.
    TimeOutOfRange { t: f64, horizon: f64 },
    /// Invalid configuration value; `field` names the offending key.
    InvalidConfig { field: &'static str, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ProxSolver {
                iterations,
                last_radius,
                residual,
            } => write!(
                f,
                "prox solver failed after {iterations} iterations (last radius {last_radius:e}, residual {residual:e})"
            ),
            Error::ConjugateBox { radius } => write!(
                f,
                "conjugate search box exceeded radius {radius:e}; integrand is not numerically superlinear"
            ),
            Error::ShapeMismatch { context } => write!(f, "shape mismatch in {context}"),
            Error::LinearSolver {
                residual,
                iterations,
            } => write!(
                f,
                "linear solver stalled at relative residual {residual:e} after {iterations} iterations"
            ),
            Error::BlowUp { path, step } => {
                write!(f, "non-finite state on path {path} at step {step}")
            }
            Error::GuardViolation { dt, bound } => write!(
                f,
                "dt = {dt:e} violates the stability guard dt <= lambda*h^2/(4n) = {bound:e}"
            ),
            Error::NonContraction { ratios, .. } => write!(
                f,
                "fixed-point iteration is not contracting (last ratios {:?})",
                &ratios[ratios.len().saturating_sub(3)..]
            ),
            Error::MaxIterations {
                iterations,
                distance,
            } => write!(
                f,
                "fixed-point iteration did not converge within {iterations} iterations (distance {distance:e})"
            ),
            Error::EmptyBundle => write!(f, "no completed paths to aggregate"),
            Error::ResourceGuard { what } => write!(f, "resource guard exceeded: {what}"),
            Error::TimeOutOfRange { t, horizon } => {
                write!(f, "time {t} is outside the solved horizon [0, {horizon}]")
            }
            Error::InvalidConfig { field, message } => {
                write!(f, "invalid config value for `{field}`: {message}")
            }
        }
    }
}

impl core::error::Error for Error {}
