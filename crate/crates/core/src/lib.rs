//! Dirichlet evidence calculus and class-cardinality audit tooling.
//!
//! Evidential classifiers emit non-negative per-class evidence `e`, which
//! parameterises a Dirichlet with `alpha = e + 1`. Vacuity `K / S` depends on
//! the number of evaluated classes `K` as well as on the evidence itself, so
//! out-of-distribution scores computed over different class counts are not
//! comparable. This crate provides:
//!
//! - [`dirichlet`]: evidence records, Dirichlet states and every per-record
//!   uncertainty quantity, plus class expansion and restriction transforms.
//! - [`special`]: log-gamma, digamma and trigamma.
//! - [`losses`]: the EDL and IB-EDL objectives, analytic gradients and a small
//!   evidential classifier trainer.
//! - [`metrics`]: AUROC, step-wise AUPR, ECE, NLL and accuracy, with
//!   brute-force reference implementations.
//! - [`lab`]: cardinality audit, expansion sweeps and class-restriction runs
//!   over fixed prediction records.
//! - [`forge`]: seeded synthetic populations and toy datasets.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

mod error;

pub mod dirichlet;
pub mod forge;
pub mod lab;
pub mod losses;
pub mod metrics;
pub mod special;

pub use dirichlet::{DirichletState, EvidenceRecord, Group, UncertaintyScores};
pub use error::{Error, Result};
pub use metrics::{DetectionResult, ScoredSample};
