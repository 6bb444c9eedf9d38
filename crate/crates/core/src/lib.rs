//! Reconstruction of hidden per-category metrics from the union of
//! small-world graphs.

pub mod error;
pub mod graph;
pub mod metric;
pub mod rng;

pub use error::{Error, Result};
pub mod gen;
pub mod estimate;
pub mod prune;
pub mod amoeba;
pub mod twoball;
pub mod edp;
pub mod eval;
pub mod io;
pub mod config;
pub mod experiment;
