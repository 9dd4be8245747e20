//! Rollup-style round batches and shard partitioning.

mod rollup;
mod shard;

pub use rollup::{
    batch_digest, commit_rollup, execute_batch_offchain, read_batch_digest, read_report, read_report_bytes,
    CommitParams, RollupBatch, RollupCommit, RollupError,
};
pub use shard::{
    apply_sequential, apply_sharded, partition, shard_of, sharded_throughput_bench, ShardBench, ShardError, ShardRun,
    ShardWorkload, BENCH_GAS_LIMIT, BENCH_GAS_PRICE,
};
pub(crate) use shard::{millis, rate};
