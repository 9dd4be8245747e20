//! Wall-time throughput of block production.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::chain::{Account, Chain, ChainError, ChainParams, Transaction};
use crate::clock::SystemClock;
use crate::consensus::ConsensusConfig;
use crate::fixed::Fixed;
use crate::scaling::{millis, rate, BENCH_GAS_LIMIT, BENCH_GAS_PRICE};
use crate::sim::Benchmarks;
use crate::types::Address;
use crate::vm::{encode_metric_list, GasSchedule, HandlerRegistry, ReportArgs, REPORT_HANDLER_ID};

/// Reference throughputs, transactions per second.
pub const BITCOIN_TPS: Fixed = Fixed::from_raw(46_000);
pub const VISA_TPS: Fixed = Fixed::from_int(1_700);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReferenceTps {
    pub bitcoin: Fixed,
    pub visa: Fixed,
}

impl Default for ReferenceTps {
    fn default() -> Self {
        Self {
            bitcoin: BITCOIN_TPS,
            visa: VISA_TPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TpsConfig {
    pub consensus: ConsensusConfig,
    pub block_size: usize,
    pub gas_schedule: GasSchedule,
}

impl Default for TpsConfig {
    fn default() -> Self {
        Self {
            consensus: ConsensusConfig::pow(0),
            block_size: 100,
            gas_schedule: GasSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TpsReport {
    pub tx_count: usize,
    pub difficulty_bits: u8,
    pub blocks: usize,
    pub elapsed_ms: Fixed,
    pub tps: Fixed,
    pub reference: ReferenceTps,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Produces `tx_count` independent report commits in blocks of
/// `config.block_size` and times block production only (contract setup is
/// excluded).
pub fn tps_benchmark(tx_count: usize, config: TpsConfig) -> Result<TpsReport, ChainError> {
    let block_size = config.block_size.max(1);
    let deployer = Address::from_label("tps-deployer");
    let producer = Address::from_label("tps-producer");
    let funding = BENCH_GAS_LIMIT as u128 * BENCH_GAS_PRICE * 10;
    let senders: Vec<Address> = (0..tx_count)
        .map(|i| Address::from_label(&format!("tps-sender-{i}")))
        .collect();
    let mut alloc = vec![Account::new(deployer, funding), Account::new(producer, 0).with_stake(1)];
    alloc.extend(senders.iter().map(|s| Account::new(*s, funding)));

    let params = ChainParams {
        consensus: config.consensus,
        gas_schedule: config.gas_schedule,
        beneficiary: producer,
    };
    let mut chain = Chain::genesis(params, HandlerRegistry::default(), Arc::new(SystemClock), alloc)?;
    let deploy = Transaction::create(
        deployer,
        0,
        REPORT_HANDLER_ID,
        encode_metric_list(&Benchmarks::default().metric_list()),
        BENCH_GAS_LIMIT,
        BENCH_GAS_PRICE,
    );
    chain.submit(deploy);
    let produced = chain.produce_block()?;
    let contract = produced.receipts[0].created_address.expect("report contract deploys");

    let metrics = Benchmarks::default().metric_list();
    let txs: Vec<Transaction> = senders
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let args = ReportArgs::commit(&format!("tps-{i}"), 1, &metrics);
            Transaction::call(*s, 0, contract, "commit_report", args, BENCH_GAS_LIMIT, BENCH_GAS_PRICE)
        })
        .collect();

    let started = Instant::now();
    let mut blocks = 0;
    for chunk in txs.chunks(block_size) {
        for tx in chunk {
            chain.submit(tx.clone());
        }
        chain.produce_block()?;
        blocks += 1;
    }
    let elapsed = started.elapsed();
    Ok(TpsReport {
        tx_count,
        difficulty_bits: config.consensus.difficulty_bits,
        blocks,
        elapsed_ms: millis(elapsed),
        tps: rate(tx_count, elapsed),
        reference: ReferenceTps::default(),
        elapsed,
    })
}
