//! Reordering of interbank payment batches to minimize the liquidity a
//! real-time gross settlement system needs.
//!
//! - [`ledger`]: exact net positions, mNDP and required liquidity for an
//!   ordering. Every solver is checked against it.
//! - [`qubo`]: penalty QUBO and constrained-model encodings of a batch.
//! - [`solvers`]: exhaustive search, simulated annealing over the QUBO,
//!   permutation local search, FIFO, and best-of-samples selection.
//! - [`pipeline`]: batching of a payment day and the FIFO-vs-solver horse
//!   races with carried-forward state.
//! - [`data`]: CSV ingestion and synthetic payment days.
//! - [`report`]: summary tables and plot-ready series recomputed from a
//!   run manifest.
//! - [`verify`]: self-checks against slow independent recomputations.
//! - [`cli`]: the `paysort` command line.

pub mod cli;
pub mod data;
pub mod domain;
pub mod ledger;
pub mod pipeline;
pub mod qubo;
pub mod report;
pub mod solvers;
pub mod verify;

pub use domain::{Batch, Money, Ordering, ParticipantId, Payment, Timestamp};
pub use ledger::{Ledger, OrderingResult, ParticipantState};
