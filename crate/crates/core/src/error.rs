use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the numerical kernels and the model layers built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{name} {constraint} (got {value})")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A bracketing root search was handed an interval without a sign change.
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// An iterative method ran out of iterations. `estimate` is the best value reached.
    #[error("no convergence after {iterations} iterations (estimate {estimate}, error bound {error_bound})")]
    NonConvergence {
        estimate: f64,
        error_bound: f64,
        iterations: usize,
    },

    /// The self-consistent schedule needs λ·g(1) > log 2, otherwise γ₁ ≥ 1.
    #[error(
        "self-consistent liability schedule is infeasible: λ·g(1) = {lambda_g1} must exceed log 2"
    )]
    InfeasibleSchedule { lambda_g1: f64 },

    /// λh(0) ≤ κ⁻¹ − 1: even without litigation no sparing-first switch exists.
    #[error("no switching regime: λh(0) = {lambda_h0} must exceed κ⁻¹ − 1 = {threshold}")]
    NoSwitchingRegime { lambda_h0: f64, threshold: f64 },

    /// The first-order condition has no interior root for this configuration.
    #[error("no interior switching time exists for {what}")]
    NoSwitch { what: String },

    /// The fixed-step integrator produced a non-finite value.
    #[error("integration step failed at t = {t}")]
    StepFailure { t: f64 },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            constraint,
        }
    }
}
