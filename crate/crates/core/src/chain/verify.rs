use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::consensus::{self, ConsensusConfig, ConsensusSeal};
use crate::types::Hash256;
use crate::vm::{GasSchedule, HandlerRegistry};

use super::{apply_transaction, transactions_root, Ledger, TxRecord, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    EmptyLedger,
    Height,
    ParentHash,
    BlockHash,
    TxId,
    TxRoot,
    Seal,
    SealMode,
    Producer,
    Alloc,
    InvalidTransaction,
    StateDigest,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// First rule a ledger breaks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("block {height}: {rule} ({detail})")]
pub struct Violation {
    pub height: u64,
    pub rule: Rule,
    pub detail: String,
}

impl Violation {
    fn new(height: u64, rule: Rule, detail: impl Into<String>) -> Self {
        Self {
            height,
            rule,
            detail: detail.into(),
        }
    }
}

/// State and receipts rebuilt by replaying a verified ledger.
#[derive(Debug, Clone)]
pub struct Replay {
    pub state: WorldState,
    pub receipts: HashMap<Hash256, TxRecord>,
}

/// Checks hash links, hashes, seals and producers for every block, then
/// replays every transaction from the genesis allocation and compares each
/// stored state digest. The consensus mode (and PoW difficulty) is taken
/// from the genesis seal; every later block must use the same.
pub fn verify_chain(ledger: &Ledger, registry: &HandlerRegistry, schedule: &GasSchedule) -> Result<Replay, Violation> {
    let genesis = ledger
        .blocks
        .first()
        .ok_or_else(|| Violation::new(0, Rule::EmptyLedger, "no genesis block"))?;
    let expected_consensus = ConsensusConfig::from_seal(&genesis.header.seal);

    let mut state = WorldState::default();
    let mut receipts = HashMap::new();
    let mut previous_hash = Hash256::zero();

    for (index, block) in ledger.blocks.iter().enumerate() {
        let height = index as u64;
        let header = &block.header;
        if header.height != height {
            return Err(Violation::new(
                height,
                Rule::Height,
                format!("stored height {}", header.height),
            ));
        }
        if header.parent_hash != previous_hash {
            return Err(Violation::new(height, Rule::ParentHash, "parent hash does not link"));
        }
        if !block.hash_is_valid() {
            return Err(Violation::new(height, Rule::BlockHash, "block hash does not recompute"));
        }
        if let Some(tx) = block.transactions.iter().find(|tx| !tx.id_is_valid()) {
            return Err(Violation::new(
                height,
                Rule::TxId,
                format!("tx {} does not recompute", tx.tx_id),
            ));
        }
        if header.tx_root != transactions_root(&block.transactions) {
            return Err(Violation::new(
                height,
                Rule::TxRoot,
                "transaction root does not recompute",
            ));
        }

        if height == 0 {
            if !block.transactions.is_empty() {
                return Err(Violation::new(0, Rule::Alloc, "genesis carries transactions"));
            }
            if block.alloc.windows(2).any(|w| w[0].address >= w[1].address) {
                return Err(Violation::new(
                    0,
                    Rule::Alloc,
                    "allocation not strictly ordered by address",
                ));
            }
            state = WorldState::from_accounts(block.alloc.iter().cloned());
        } else if !block.alloc.is_empty() {
            return Err(Violation::new(height, Rule::Alloc, "allocation outside genesis"));
        }

        // Seal and producer are checked against the pre-state.
        if ConsensusConfig::from_seal(&header.seal) != expected_consensus {
            return Err(Violation::new(
                height,
                Rule::SealMode,
                "seal differs from genesis consensus",
            ));
        }
        match &header.seal {
            ConsensusSeal::Pow { .. } => {
                if !consensus::verify_pow(block) {
                    return Err(Violation::new(
                        height,
                        Rule::Seal,
                        "proof of work does not meet difficulty",
                    ));
                }
            }
            ConsensusSeal::Pos {
                validator,
                selection_seed,
            } => {
                if *selection_seed != header.parent_hash {
                    return Err(Violation::new(
                        height,
                        Rule::Seal,
                        "selection seed is not the parent hash",
                    ));
                }
                let expected = consensus::select_validator(&state.stake_table(), selection_seed)
                    .map_err(|e| Violation::new(height, Rule::Seal, e.to_string()))?;
                if *validator != expected {
                    return Err(Violation::new(
                        height,
                        Rule::Seal,
                        "validator is not the stake-weighted selection",
                    ));
                }
                if header.producer != *validator {
                    return Err(Violation::new(
                        height,
                        Rule::Producer,
                        "producer is not the selected validator",
                    ));
                }
            }
        }

        let mut fees: u128 = 0;
        let mut block_receipts = Vec::with_capacity(block.transactions.len());
        for (i, tx) in block.transactions.iter().enumerate() {
            let applied = apply_transaction(&mut state, tx, registry, schedule)
                .map_err(|e| Violation::new(height, Rule::InvalidTransaction, format!("tx {i}: {e}")))?;
            fees += applied.fee;
            block_receipts.push(applied.receipt);
        }
        if height > 0 {
            consensus::reward_producer(&mut state, &header.producer, fees)
                .map_err(|e| Violation::new(height, Rule::Producer, e.to_string()))?;
        }
        if state.digest() != header.state_digest {
            return Err(Violation::new(
                height,
                Rule::StateDigest,
                "replayed state digest differs",
            ));
        }

        for (index, receipt) in block_receipts.into_iter().enumerate() {
            receipts.insert(receipt.tx_id, TxRecord { height, index, receipt });
        }
        previous_hash = block.block_hash;
    }

    Ok(Replay { state, receipts })
}
