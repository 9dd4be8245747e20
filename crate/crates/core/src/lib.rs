//! A small, deterministic blockchain stack for running a classroom
//! marketing simulation on-chain.
//!
//! * [`chain`]: blocks, accounts, mempool, transaction application,
//!   verification and the line-oriented chain file.
//! * [`consensus`]: proof-of-work mining and stake-weighted validator
//!   selection.
//! * [`vm`]: gas-metered native contracts, including the write-once
//!   `report_v1` contract.
//! * [`scaling`]: rollup-style round batches and shard partitioning.
//! * [`sim`]: the round-based marketing simulation and its response model.
//! * [`metrics`]: finality samples, network fee profiles and throughput.

pub mod chain;
pub mod clock;
pub mod codec;
pub mod consensus;
pub mod export;
pub mod fixed;
pub mod metrics;
pub mod scaling;
pub mod sim;
pub mod types;
pub mod vm;

pub use types::{Address, Hash256, HASH_FUNCTION};
