//! IO, file formats and command plumbing for the matchcast CLI.

pub mod commands;
pub mod io;
pub mod model_io;
pub mod report;
