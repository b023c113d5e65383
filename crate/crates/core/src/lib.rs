//! Composition-operator calculus for finite discrete probability
//! distributions: compose low-dimensional factors into multidimensional
//! models, check and construct perfect sequences, and marginalize a single
//! variable out of a generating sequence locally, without materializing
//! the joint.

pub mod compose;
pub mod error;
pub mod factor;
pub mod fixtures;
pub mod ipfp;
pub mod oracle;
pub mod registry;
pub mod scope;
pub mod sequence;

pub use compose::{anticipate, compose_left, compose_right, dominates, is_consistent, RChoice};
pub use error::{Error, Result};
pub use factor::{max_abs_diff, Factor, Table, Tolerance, DEFAULT_TOL};
pub use ipfp::{ipfp_run, ipfp_step, IpfpRun, DEFAULT_IPFP_TOL, DEFAULT_MAX_CYCLES};
pub use oracle::oracle_joint;
pub use registry::{VarId, VariableRegistry};
pub use scope::Scope;
pub use sequence::{
    EliminationResult, EliminationStats, GeneratingSequence, PerfectMethod, PerfectnessReport,
    RoundStats, DEFAULT_MAX_ENTRIES,
};
