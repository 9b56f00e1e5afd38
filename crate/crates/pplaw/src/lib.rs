//! Std companion of `pplaw-core`: file formats, the fit artifact shared by the
//! pipeline stages, and a multi-threaded restart runner.

pub mod artifact;
pub mod export;
pub mod io;
pub mod parallel;

pub use artifact::{read_law, FitArtifact};
pub use parallel::fit_parallel;
