//! Command-line front end and experiment runners for the `uanet` models.

pub mod cli;
pub mod experiments;
pub mod svg;
