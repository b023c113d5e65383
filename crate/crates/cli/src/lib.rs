//! Model file format and benchmark machinery behind the `cpm` binary.

pub mod bench;
pub mod model;
