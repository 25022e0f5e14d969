//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the solver and Monte-Carlo layers.
///
/// Diagnostics are carried as `f64`/`String` regardless of the scalar the
/// computation ran in.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The shift action on the quotient is not strongly connected.
    #[error("quotient not irreducible: state {from} cannot reach state {to}")]
    NotIrreducible { from: String, to: String },

    /// The positivity pattern of the transfer matrix is periodic, so matrix
    /// powers (and hence Busemann gradients) do not converge.
    #[error("matrix not primitive: positivity pattern has period {period}")]
    NotPrimitive { period: usize },

    /// Power iteration hit its iteration cap.
    #[error("eigen solve did not converge: last residual {residual:e}")]
    NonConvergence { residual: f64 },

    /// `exp` of the transfer-matrix entries would overflow; use the
    /// log-domain path (`pf::solve_pf_log`, provided for beta >= 50).
    #[error(
        "overflow guard: beta * (max |V0| + max |h.z|) = {magnitude:.1} > 700; \
         use the log-domain solver"
    )]
    OverflowGuard { magnitude: f64 },

    /// A configured enumeration or memory cap was exceeded.
    #[error("{what} cap exceeded: {requested} > {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    /// Circuit enumeration was cut short, so circuit-based values are unsafe.
    #[error("circuit enumeration incomplete; rerun with a larger cap")]
    IncompleteCircuits,

    /// Requested velocity cannot be realized by the available circuits/steps.
    #[error("velocity {xi:?} infeasible: {reason}")]
    InfeasibleVelocity { xi: Vec<f64>, reason: String },

    /// Moment generating function diverges for the requested parameters.
    #[error("annealed formula unavailable: {0}")]
    MgfDiverges(String),

    /// A grid extremum landed on the boundary of the search box.
    #[error("grid too coarse or box too small: {0}")]
    GridTooCoarse(String),

    #[error("endpoint {target:?} not reachable from {origin:?}")]
    Unreachable {
        origin: Vec<i64>,
        target: Vec<i64>,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
