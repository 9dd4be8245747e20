//! Round batches: reports are computed off-chain and only the reports plus a
//! binding digest are posted. The raw decisions never reach the chain.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Chain, ChainError, Receipt, ReceiptStatus, Transaction, TxError, WorldState};
use crate::codec::Encoder;
use crate::sim::{compute_report, ActivityReport, RoundDecision, SimulationConfig};
use crate::types::{sha256, Address, Hash256};
use crate::vm::{decode_metric_list, view, HandlerRegistry, ReportArgs, VmError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollupBatch {
    pub round: u64,
    pub decisions: Vec<RoundDecision>,
    /// Sorted by team.
    pub reports: Vec<ActivityReport>,
    pub batch_digest: Hash256,
}

impl RollupBatch {
    pub fn digest_is_valid(&self) -> bool {
        batch_digest(&self.reports) == self.batch_digest
    }
}

#[derive(Debug, Error)]
pub enum RollupError {
    #[error("decision for round {found} in a batch for round {expected}")]
    MixedRounds { expected: u64, found: u64 },
    #[error("team {0} appears twice in the batch")]
    DuplicateTeam(String),
    #[error("committer {0} has no account")]
    UnknownCommitter(Address),
    #[error("batch digest does not match its reports")]
    DigestMismatch,
    #[error("transaction {tx_id} rejected: {error}")]
    Rejected { tx_id: Hash256, error: TxError },
    #[error("{code}: {reason}")]
    Contract {
        code: String,
        reason: String,
        receipt: Box<Receipt>,
    },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

impl RollupError {
    /// Contract error code, when the failure came from the contract.
    pub fn contract_code(&self) -> Option<&str> {
        match self {
            RollupError::Contract { code, .. } => Some(code),
            _ => None,
        }
    }
}

/// `sha256(u32 n | (str team | u64 round | u64 likes | u64 post_engagement | u64 page_views)*)`
pub fn batch_digest(reports: &[ActivityReport]) -> Hash256 {
    let mut enc = Encoder::new();
    enc.u32(reports.len() as u32);
    for r in reports {
        enc.str(&r.team)
            .u64(r.round)
            .u64(r.likes.raw())
            .u64(r.post_engagement.raw())
            .u64(r.page_views.raw());
    }
    sha256(&enc.finish())
}

/// Runs the response model for every decision. `previous` holds each team's
/// latest report; teams missing from it start at the benchmarks. Touches no
/// chain state.
pub fn execute_batch_offchain(
    config: &SimulationConfig,
    previous: &BTreeMap<String, ActivityReport>,
    round: u64,
    decisions: &[RoundDecision],
) -> Result<RollupBatch, RollupError> {
    let mut seen = BTreeSet::new();
    for d in decisions {
        if d.round != round {
            return Err(RollupError::MixedRounds {
                expected: round,
                found: d.round,
            });
        }
        if !seen.insert(d.team.as_str()) {
            return Err(RollupError::DuplicateTeam(d.team.clone()));
        }
    }
    let mut decisions = decisions.to_vec();
    decisions.sort_by(|a, b| a.team.cmp(&b.team));
    let reports: Vec<ActivityReport> = decisions
        .iter()
        .map(|d| {
            let baseline;
            let prev = match previous.get(&d.team) {
                Some(p) => p,
                None => {
                    baseline = ActivityReport::baseline(&d.team, &config.benchmarks);
                    &baseline
                }
            };
            compute_report(prev, d, config)
        })
        .collect();
    let batch_digest = batch_digest(&reports);
    Ok(RollupBatch {
        round,
        decisions,
        reports,
        batch_digest,
    })
}

/// Where a committed batch landed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RollupCommit {
    pub round: u64,
    pub height: u64,
    pub block_hash: Hash256,
    pub receipts: Vec<Receipt>,
    pub transactions: Vec<Transaction>,
    pub submitted_at: u64,
    pub finalized_at: u64,
}

impl RollupCommit {
    pub fn gas_used(&self) -> u64 {
        self.receipts.iter().map(|r| r.gas_used).sum()
    }
}

/// Parameters of the transactions a commit submits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommitParams {
    pub committer: Address,
    pub contract: Address,
    pub gas_price: u128,
    pub gas_limit: u64,
}

fn split_reason(reason: &str) -> (String, String) {
    match reason.split_once(": ") {
        Some((code, rest)) => (code.to_string(), rest.to_string()),
        None => (reason.to_string(), String::new()),
    }
}

/// Posts one `commit_report` per report and one `commit_batch` with the
/// digest, then produces the block holding all of them. Fails with the first
/// contract error if any call in the block failed (the block is still
/// appended; failed calls are charged like any other).
pub fn commit_rollup(
    chain: &mut Chain,
    batch: &RollupBatch,
    params: CommitParams,
) -> Result<RollupCommit, RollupError> {
    if !batch.digest_is_valid() {
        return Err(RollupError::DigestMismatch);
    }
    let first_nonce = chain
        .next_nonce(&params.committer)
        .ok_or(RollupError::UnknownCommitter(params.committer))?;
    let submitted_at = chain.clock().now_ms();

    let mut calls: Vec<(&str, Vec<u8>)> = batch
        .reports
        .iter()
        .map(|r| ("commit_report", ReportArgs::commit(&r.team, r.round, &r.metric_list())))
        .collect();
    calls.push((
        "commit_batch",
        ReportArgs::commit_batch(batch.round, &batch.batch_digest),
    ));
    let mut transactions = Vec::with_capacity(calls.len());
    for (offset, (method, args)) in calls.into_iter().enumerate() {
        let tx = Transaction::call(
            params.committer,
            first_nonce + offset as u64,
            params.contract,
            method,
            args,
            params.gas_limit,
            params.gas_price,
        );
        chain.submit(tx.clone());
        transactions.push(tx);
    }

    let produced = chain.produce_block()?;
    let finalized_at = chain.clock().now_ms();
    if let Some((tx_id, error)) = produced.dropped.into_iter().next() {
        return Err(RollupError::Rejected { tx_id, error });
    }
    if let Some(failed) = produced.receipts.iter().find(|r| !r.is_success()) {
        let reason = match &failed.status {
            ReceiptStatus::Failure(reason) => reason.clone(),
            ReceiptStatus::Success => unreachable!(),
        };
        let (code, reason) = split_reason(&reason);
        return Err(RollupError::Contract {
            code,
            reason,
            receipt: Box::new(failed.clone()),
        });
    }
    Ok(RollupCommit {
        round: batch.round,
        height: produced.block.height(),
        block_hash: produced.block.block_hash,
        receipts: produced.receipts,
        transactions,
        submitted_at,
        finalized_at,
    })
}

/// Reads a committed report through the contract; `None` if not committed.
pub fn read_report(
    state: &WorldState,
    registry: &HandlerRegistry,
    contract: Address,
    team: &str,
    round: u64,
) -> Result<Option<ActivityReport>, VmError> {
    match view(state, registry, contract, "get_report", &ReportArgs::get(team, round)) {
        Ok(bytes) => {
            let list = decode_metric_list(&bytes).map_err(|e| VmError::InvalidArgs(e.to_string()))?;
            ActivityReport::from_metric_list(team, round, &list)
                .map(Some)
                .ok_or_else(|| VmError::InvalidArgs("report does not hold the three metrics".into()))
        }
        Err(VmError::NotFound(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Raw stored bytes of a report's metric list, as `get_report` returns them.
pub fn read_report_bytes(
    state: &WorldState,
    registry: &HandlerRegistry,
    contract: Address,
    team: &str,
    round: u64,
) -> Result<Vec<u8>, VmError> {
    view(state, registry, contract, "get_report", &ReportArgs::get(team, round))
}

/// Stored digest for `round`, if the batch was committed.
pub fn read_batch_digest(
    state: &WorldState,
    registry: &HandlerRegistry,
    contract: Address,
    round: u64,
) -> Result<Option<Hash256>, VmError> {
    match view(state, registry, contract, "get_batch", &ReportArgs::get_batch(round)) {
        Ok(bytes) => {
            let raw: [u8; 32] = bytes
                .as_slice()
                .try_into()
                .map_err(|_| VmError::InvalidArgs("corrupt batch digest".into()))?;
            Ok(Some(Hash256::new(raw)))
        }
        Err(VmError::NotFound(_)) => Ok(None),
        Err(e) => Err(e),
    }
}
