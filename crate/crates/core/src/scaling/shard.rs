//! Horizontal partitioning of accounts and contracts by address.
//!
//! A shard owns every account and contract whose address maps to it. The
//! throughput bench only accepts transactions whose sender and target live
//! in the same shard, so shards can run on separate threads and be merged
//! back by plain union.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::chain::{apply_transaction, Account, Receipt, Transaction, TxError, TxKind, WorldState};
use crate::consensus;
use crate::fixed::Fixed;
use crate::types::{Address, Hash256};
use crate::vm::{
    deploy_contract, derive_contract_address, GasSchedule, HandlerRegistry, ReportArgs, REPORT_HANDLER_ID,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShardError {
    #[error("shard count must be at least 1")]
    ZeroShards,
    #[error("tx {tx_id}: sender in shard {sender_shard}, target in shard {target_shard}")]
    CrossShardTx {
        tx_id: Hash256,
        sender_shard: u32,
        target_shard: u32,
    },
    #[error("tx {tx_id} rejected: {error}")]
    Rejected { tx_id: Hash256, error: TxError },
    #[error("workload setup failed: {0}")]
    Setup(String),
}

/// `address (big-endian integer) mod shard_count`.
pub fn shard_of(address: &Address, shard_count: u32) -> Result<u32, ShardError> {
    if shard_count == 0 {
        return Err(ShardError::ZeroShards);
    }
    let count = shard_count as u64;
    let rem = address
        .as_bytes()
        .iter()
        .fold(0u64, |acc, b| (acc * 256 + *b as u64) % count);
    Ok(rem as u32)
}

fn target_of(tx: &Transaction) -> Address {
    match &tx.kind {
        TxKind::ContractCall { target, .. } => *target,
        TxKind::ContractCreate { .. } => derive_contract_address(&tx.sender, tx.nonce),
    }
}

/// Transactions grouped by shard; each group keeps the input order.
pub fn partition(txs: &[Transaction], shard_count: u32) -> Result<Vec<Vec<Transaction>>, ShardError> {
    let mut shards = vec![Vec::new(); shard_count.max(1) as usize];
    for tx in txs {
        let sender_shard = shard_of(&tx.sender, shard_count)?;
        let target_shard = shard_of(&target_of(tx), shard_count)?;
        if sender_shard != target_shard {
            return Err(ShardError::CrossShardTx {
                tx_id: tx.tx_id,
                sender_shard,
                target_shard,
            });
        }
        shards[sender_shard as usize].push(tx.clone());
    }
    Ok(shards)
}

/// Genesis state and transactions for the bench: `tx_count` distinct senders,
/// each committing one report to a contract in its own shard.
#[derive(Debug, Clone)]
pub struct ShardWorkload {
    pub genesis: WorldState,
    pub transactions: Vec<Transaction>,
    pub producer: Address,
    /// One report contract per shard, indexed by shard.
    pub contracts: Vec<Address>,
}

pub const BENCH_GAS_LIMIT: u64 = 100_000;
pub const BENCH_GAS_PRICE: u128 = 1;

impl ShardWorkload {
    pub fn build(
        tx_count: usize,
        shard_count: u32,
        registry: &HandlerRegistry,
        schedule: &GasSchedule,
    ) -> Result<Self, ShardError> {
        if shard_count == 0 {
            return Err(ShardError::ZeroShards);
        }
        let deployer = Address::from_label("bench-deployer");
        let producer = Address::from_label("bench-producer");
        let mut genesis = WorldState::from_accounts([Account::new(deployer, 0), Account::new(producer, 0)]);

        let payload = crate::vm::encode_metric_list(&crate::sim::Benchmarks::default().metric_list());
        let mut contracts = Vec::with_capacity(shard_count as usize);
        let mut nonce = 0u64;
        for shard in 0..shard_count {
            while shard_of(&derive_contract_address(&deployer, nonce), shard_count)? != shard {
                nonce += 1;
            }
            let exec = deploy_contract(
                &mut genesis,
                registry,
                schedule,
                deployer,
                nonce,
                REPORT_HANDLER_ID,
                &payload,
                BENCH_GAS_LIMIT,
            )
            .map_err(|f| ShardError::Setup(f.error.to_string()))?;
            contracts.push(exec.created_address.expect("deploy returns its address"));
            nonce += 1;
        }

        let metrics = crate::sim::Benchmarks::default().metric_list();
        let funding = BENCH_GAS_LIMIT as u128 * BENCH_GAS_PRICE * 10;
        let mut transactions = Vec::with_capacity(tx_count);
        for i in 0..tx_count {
            let sender = Address::from_label(&format!("bench-sender-{i}"));
            genesis.accounts.insert(sender, Account::new(sender, funding));
            let contract = contracts[shard_of(&sender, shard_count)? as usize];
            let args = ReportArgs::commit(&format!("bench-{i}"), 1, &metrics);
            transactions.push(Transaction::call(
                sender,
                0,
                contract,
                "commit_report",
                args,
                BENCH_GAS_LIMIT,
                BENCH_GAS_PRICE,
            ));
        }
        Ok(Self {
            genesis,
            transactions,
            producer,
            contracts,
        })
    }
}

/// Outcome of applying a workload, with wall time spent applying.
#[derive(Debug, Clone)]
pub struct ShardRun {
    pub state: WorldState,
    pub receipts: Vec<Receipt>,
    pub elapsed: Duration,
}

impl ShardRun {
    pub fn digest(&self) -> Hash256 {
        self.state.digest()
    }
}

fn apply_all(
    state: &mut WorldState,
    txs: &[Transaction],
    registry: &HandlerRegistry,
    schedule: &GasSchedule,
) -> Result<(Vec<Receipt>, u128), ShardError> {
    let mut receipts = Vec::with_capacity(txs.len());
    let mut fees = 0u128;
    for tx in txs {
        let applied = apply_transaction(state, tx, registry, schedule)
            .map_err(|error| ShardError::Rejected { tx_id: tx.tx_id, error })?;
        fees += applied.fee;
        receipts.push(applied.receipt);
    }
    Ok((receipts, fees))
}

fn split_state(state: &WorldState, shard_count: u32) -> Vec<WorldState> {
    let mut shards = vec![WorldState::default(); shard_count as usize];
    for (addr, account) in &state.accounts {
        let s = shard_of(addr, shard_count).expect("count checked") as usize;
        shards[s].accounts.insert(*addr, account.clone());
    }
    for (addr, contract) in &state.contracts {
        let s = shard_of(addr, shard_count).expect("count checked") as usize;
        shards[s].contracts.insert(*addr, contract.clone());
    }
    shards
}

type ShardOutcome = (WorldState, Vec<Receipt>, u128);

/// Applies each shard's transactions on its own thread, merges the shard
/// states in shard order and then credits all fees to the producer.
pub fn apply_sharded(
    genesis: &WorldState,
    txs: &[Transaction],
    shard_count: u32,
    producer: &Address,
    registry: &HandlerRegistry,
    schedule: &GasSchedule,
) -> Result<ShardRun, ShardError> {
    let groups = partition(txs, shard_count)?;
    let states = split_state(genesis, shard_count);
    let started = Instant::now();
    let results: Vec<Result<ShardOutcome, ShardError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = states
            .into_iter()
            .zip(&groups)
            .map(|(mut state, group)| {
                scope.spawn(move || {
                    let (receipts, fees) = apply_all(&mut state, group, registry, schedule)?;
                    Ok((state, receipts, fees))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("shard thread panicked"))
            .collect()
    });

    let mut merged = WorldState::default();
    let mut receipts = Vec::with_capacity(txs.len());
    let mut fees = 0u128;
    for result in results {
        let (state, shard_receipts, shard_fees) = result?;
        merged.accounts.extend(state.accounts);
        merged.contracts.extend(state.contracts);
        receipts.extend(shard_receipts);
        fees += shard_fees;
    }
    consensus::reward_producer(&mut merged, producer, fees).map_err(|e| ShardError::Setup(e.to_string()))?;
    Ok(ShardRun {
        state: merged,
        receipts,
        elapsed: started.elapsed(),
    })
}

/// Oracle: one thread, transactions in shard-major order.
pub fn apply_sequential(
    genesis: &WorldState,
    txs: &[Transaction],
    shard_count: u32,
    producer: &Address,
    registry: &HandlerRegistry,
    schedule: &GasSchedule,
) -> Result<ShardRun, ShardError> {
    let ordered: Vec<Transaction> = partition(txs, shard_count)?.into_iter().flatten().collect();
    let mut state = genesis.clone();
    let started = Instant::now();
    let (receipts, fees) = apply_all(&mut state, &ordered, registry, schedule)?;
    consensus::reward_producer(&mut state, producer, fees).map_err(|e| ShardError::Setup(e.to_string()))?;
    Ok(ShardRun {
        state,
        receipts,
        elapsed: started.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShardBench {
    pub shard_count: u32,
    pub tx_count: usize,
    pub elapsed_ms: Fixed,
    pub tps: Fixed,
    pub state_digest: Hash256,
    /// Transactions per shard.
    pub occupancy: Vec<usize>,
}

pub(crate) fn rate(count: usize, elapsed: Duration) -> Fixed {
    let micros = elapsed.as_micros().max(1);
    let raw = crate::fixed::div_round_half_up(count as u128 * 1_000_000 * crate::fixed::SCALE as u128, micros);
    Fixed::from_raw(raw.min(u64::MAX as u128) as u64)
}

pub(crate) fn millis(elapsed: Duration) -> Fixed {
    let raw = crate::fixed::div_round_half_up(elapsed.as_nanos(), 100);
    Fixed::from_raw(raw.min(u64::MAX as u128) as u64)
}

/// Builds a `tx_count` workload for `shard_count` shards and applies it in
/// parallel.
pub fn sharded_throughput_bench(
    tx_count: usize,
    shard_count: u32,
    registry: &HandlerRegistry,
    schedule: &GasSchedule,
) -> Result<ShardBench, ShardError> {
    let workload = ShardWorkload::build(tx_count, shard_count, registry, schedule)?;
    let run = apply_sharded(
        &workload.genesis,
        &workload.transactions,
        shard_count,
        &workload.producer,
        registry,
        schedule,
    )?;
    let occupancy = partition(&workload.transactions, shard_count)?
        .iter()
        .map(Vec::len)
        .collect();
    Ok(ShardBench {
        shard_count,
        tx_count,
        elapsed_ms: millis(run.elapsed),
        tps: rate(tx_count, run.elapsed),
        state_digest: run.digest(),
        occupancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_shards_rejected() {
        assert_eq!(shard_of(&Address::zero(), 0), Err(ShardError::ZeroShards));
    }

    #[test]
    fn big_endian_modulus() {
        let mut bytes = [0u8; 20];
        bytes[19] = 7;
        bytes[18] = 1; // 263
        assert_eq!(shard_of(&Address::new(bytes), 4).unwrap(), 263 % 4);
        assert_eq!(shard_of(&Address::new(bytes), 10).unwrap(), 3);
        assert_eq!(shard_of(&Address::new([0xff; 20]), 1).unwrap(), 0);
        // 2^160 - 1 mod 3 == 0
        assert_eq!(shard_of(&Address::new([0xff; 20]), 3).unwrap(), 0);
    }

    #[test]
    fn cross_shard_rejected() {
        let a = Address::new([0; 20]);
        let mut b = [0; 20];
        b[19] = 1;
        let tx = Transaction::call(a, 0, Address::new(b), "m", vec![], 1, 1);
        assert!(matches!(
            partition(std::slice::from_ref(&tx), 2),
            Err(ShardError::CrossShardTx { .. })
        ));
        assert_eq!(partition(&[tx], 1).unwrap()[0].len(), 1);
    }

    #[test]
    fn single_shard_equals_plain_sequential() {
        let registry = HandlerRegistry::default();
        let schedule = GasSchedule::default();
        let w = ShardWorkload::build(50, 1, &registry, &schedule).unwrap();
        let par = apply_sharded(&w.genesis, &w.transactions, 1, &w.producer, &registry, &schedule).unwrap();
        let seq = apply_sequential(&w.genesis, &w.transactions, 1, &w.producer, &registry, &schedule).unwrap();
        assert_eq!(par.digest(), seq.digest());
        assert!(par.receipts.iter().all(Receipt::is_success));
    }

    #[test]
    fn contracts_land_in_their_shard() {
        let registry = HandlerRegistry::default();
        let w = ShardWorkload::build(10, 4, &registry, &GasSchedule::default()).unwrap();
        for (i, c) in w.contracts.iter().enumerate() {
            assert_eq!(shard_of(c, 4).unwrap(), i as u32);
        }
    }

    proptest! {
        #[test]
        fn shard_is_in_range(bytes: [u8; 20], count in 1u32..64) {
            let s = shard_of(&Address::new(bytes), count).unwrap();
            prop_assert!(s < count);
            prop_assert_eq!(s, shard_of(&Address::new(bytes), count).unwrap());
        }

        #[test]
        fn merge_is_schedule_independent(tx_count in 1usize..60, shards in 1u32..6) {
            let registry = HandlerRegistry::default();
            let schedule = GasSchedule::default();
            let w = ShardWorkload::build(tx_count, shards, &registry, &schedule).unwrap();
            let par = apply_sharded(&w.genesis, &w.transactions, shards, &w.producer, &registry, &schedule).unwrap();
            let seq = apply_sequential(&w.genesis, &w.transactions, shards, &w.producer, &registry, &schedule).unwrap();
            prop_assert_eq!(par.digest(), seq.digest());
        }
    }
}
