//! Dynamic discrete-choice model of a profit-maximizing firm that owns a
//! general-purpose AI model and must decide, period by period, whether to
//! keep it closed (selling API access) or open-source it irreversibly.
//!
//! The crate is organized bottom-up:
//!
//! - [`economics`]: closed-form static pieces (producer profit, API demand,
//!   the aggregate profit constant `Theta`, external compute).
//! - [`interp`]: reading value tables at off-grid qualities.
//! - [`solver`]: value function iteration for the open and closed models.
//! - [`analysis`]: open-source windows, parameter sweeps, the development
//!   decision and audits of the threshold and price-cap properties.
//! - [`oracle`]: brute-force validators used to check the solver.
//!
//! ```
//! use openwindow::{solve_closed, solve_open, EconParams, GridSpec, SolverSettings};
//!
//! let p = EconParams::baseline();
//! let grid = GridSpec { q_max: 100.0, n_q: 11, n_k_open: 20, k_max_open: 6.0,
//!                       n_k_closed: 10, n_p: 5, ..GridSpec::default() };
//! let settings = SolverSettings::default();
//! let open = solve_open(&p, &grid, &settings)?;
//! let closed = solve_closed(&open, &p, &grid, &settings)?;
//! assert!(open.value.windows(2).all(|w| w[1] >= w[0]));
//! assert_eq!(closed.value.len(), 11 * 11);
//! # Ok::<(), openwindow::ModelError>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod economics;
pub mod error;
pub mod interp;
pub mod oracle;
pub mod params;
pub mod solver;

pub use error::{ModelError, Result};
pub use params::{EconParams, GridSpec, Interpolation, ProducerLocation, Quality, SolverSettings};
pub use solver::{
    adaptive_k_max, bellman_closed, bellman_open, solve_closed, solve_open, ClosedSolution, ClosedStep, Continuation,
    Decision, OpenSolution, SolveDiagnostics, SolveSummary,
};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/economics.md")]
    mod economics {}
    #[doc = include_str!("../../../book/src/open-model.md")]
    mod open_model {}
    #[doc = include_str!("../../../book/src/closed-model.md")]
    mod closed_model {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
