//! Command-line front end for the PT-symmetric quantum mechanics toolkit.
//!
//! The binary wires these modules together; they are a library so
//! integration tests can drive the pipelines directly and assert on
//! intermediate structures, not just on process output.

pub mod config;
pub mod error;
pub mod frame_io;
pub mod json;
pub mod report;
pub mod runners;
