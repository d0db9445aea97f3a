//! Scenario runner, file formats, and the command-line interface for the
//! measurement-radiation library.

pub mod config;
pub mod emit;
pub mod runner;
