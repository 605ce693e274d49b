//! Command-line front end for `casimir-core`: TOML-configured runs that write
//! a JSON result plus CSV tables for plotting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;

pub use config::{Overrides, RunConfig, Task};
pub use run::{build_scene, run, RunReport};
