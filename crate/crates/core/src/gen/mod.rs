//! Small-world graph generation over one or more categories.

mod calibrate;
mod local;
mod multiplex;
mod sample;

pub use calibrate::{calibrate_for_target, calibrate_normalizer};
pub use local::{build_local_structure, LocalKind, LocalStructure};
pub use multiplex::{build_multiplex, partition_edges, MultiplexGraph, Origin};
pub use sample::{
    sample_single_category, sample_with, EdgeProbability, SmallWorld, SwgParams,
};
