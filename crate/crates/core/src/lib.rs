//! Perplexity-aware data scaling law toolkit.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every algorithm of the
//! pipeline:
//!
//! - [`stats`]: mergeable mean/variance accumulators over document perplexities,
//! - [`law`]: the scaling law `L = E + D_c / (mu^(a0 + a1*sigma) * sigma^(b0 + b1*mu) * D^aD)`,
//! - [`fit`]: multi-start simplex fitting with a fit/validation protocol,
//! - [`landscape`]: loss surfaces over `(mu, sigma)`, descent paths and the optimum,
//! - [`select`]: distance-to-optimum selection and the random/low/high baselines,
//! - [`synth`]: seeded generators used as ground truth.
//!
//! File formats, the CLI and parallel restarts live in the `pplaw` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
mod error;
pub mod fit;
pub mod landscape;
pub mod law;
mod math;
pub mod select;
pub mod simplex;
pub mod stats;
pub mod synth;

pub use corpus::{chunk_corpus, Chunk, Corpus, CorpusBuilder, Document};
pub use error::{Error, Result};
pub use fit::{
    fit, split_observations, validate, BandConfig, FitConfig, FitLoss, FitResult, Observation,
    Residual, Split, Validation,
};

pub use landscape::{
    descent_paths, evaluate_grid, find_optimum, DescentConfig, LandscapeGrid, OptimumReport,
    PathPoint, SearchBox,
};
pub use law::{Decomposition, Gradient, LawForm, LawInput, LawParams};

pub use select::{
    baseline_select, brute_force_select, greedy_select, objective_j, DosTarget, Method,
    SelectOptions, SelectionManifest, TrajectoryStep,
};
pub use stats::{PplStats, WeightingMode};
