//! HTTP API and command-line runner around `classchain-core`.

pub mod api;
pub mod cli;
pub mod config;
