//! Command line support for the `dips-core` simulator: configuration files,
//! record and graph formats, experiment runners, manifests and chain replay.

pub mod config;
pub mod experiments;
pub mod graph_io;
pub mod manifest;
pub mod records;
pub mod run;
pub mod selftest;
pub mod verify;
