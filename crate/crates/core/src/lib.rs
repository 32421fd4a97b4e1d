//! Solvers for joint communication/computation resource allocation in a
//! three-node cooperative edge-computing setup: a user with a deadline-bound
//! computing task, a nearby helper that can relay and compute, and an access
//! point hosting an edge server.
//!
//! The user splits its input data three ways: compute locally, offload to the
//! helper, offload to the access point. The helper simultaneously handles its
//! own task and the user's relayed bits. Uplink transmissions to the access
//! point use power-domain NOMA with successive interference cancellation, so
//! the user can reach the helper and the access point in the same slot.
//!
//! Two problems are covered, plus benchmarks and a reproduction harness:
//!
//! * [`energy_min`]: minimize weighted user+helper energy under latency and
//!   server-capacity constraints (dual ellipsoid ascent over a slot-split
//!   search, with a reduced algorithm when the helper has no task of its own).
//! * [`data_max`]: maximize weighted offloaded data under power and helper
//!   energy budgets (closed-form case analysis over the power split).
//! * [`baselines`]: TDMA and one-slot NOMA benchmark schemes.
//! * [`oracle`]: brute-force mesh optimizers used to cross-check the solvers.
//! * [`simharness`]: seeded fading draws, figure sweeps, CSV output, CLI.

pub mod baselines;
pub mod data_max;
pub mod energy_min;
pub mod numerics;
pub mod oracle;
pub mod simharness;
pub mod system_model;

mod cli;

pub use cli::cli;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scenario or argument failed validation.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// A sweep configuration failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    /// Superposition decoding requires the user→helper link to dominate the
    /// user→AP link; the inversion coefficient turns negative otherwise.
    #[error("channel order violated: h_uh < h_ua")]
    NomaOrderViolated,
    /// Positive bits were assigned to a zero-length transmission slot.
    #[error("zero-length slot with positive bits: {0}")]
    ZeroSlot(&'static str),
    /// Offloaded bits exceed the task size they are drawn from.
    #[error("offloaded bits exceed task size: {0}")]
    BitOverflow(&'static str),
    /// Root bracketing failed in strict bisection mode.
    #[error("no sign change on the bracket [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    /// The constraint set is empty.
    #[error("problem infeasible: {0}")]
    Infeasible(String),
    /// A case interval of the data-maximization analysis is empty.
    #[error("case interval empty: {0}")]
    CaseInfeasible(&'static str),
    /// Every mesh point of an oracle run was infeasible.
    #[error("all mesh points infeasible")]
    AllInfeasible,
}

pub type Result<T> = std::result::Result<T, Error>;
