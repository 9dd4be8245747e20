//! Append-only block ledger, account state, mempool and transaction
//! application.
//!
//! [`Chain`] is the single writer: every state mutation goes through
//! [`Chain::produce_block`]. Callers that share a chain across threads wrap
//! it in a lock; readers only ever see fully appended blocks.

mod block;
mod persist;
mod state;
mod tx;
mod verify;

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;
use tracing::warn;

use crate::clock::Clock;
use crate::consensus::{self, ConsensusConfig, ConsensusError, ConsensusMode, ConsensusSeal};
use crate::types::{Address, Hash256};
use crate::vm::{self, GasOp, GasSchedule, HandlerRegistry};

pub use block::{hash_block, Block, BlockHeader};
pub use persist::{append_blocks, block_line, load, persist, PersistError};
pub use state::{Account, WorldState};
pub use tx::{transactions_root, Receipt, ReceiptStatus, Transaction, TxKind};
pub use verify::{verify_chain, Replay, Rule, Violation};

/// Reasons a transaction is rejected outright. Rejected transactions are
/// never included in a block and are not charged.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TxError {
    #[error("unknown sender {0}")]
    UnknownSender(Address),
    #[error("bad nonce: account expects {expected}, transaction has {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("insufficient balance: have {balance}, need {required}")]
    InsufficientBalance { balance: u128, required: u128 },
    #[error("gas limit must be > 0")]
    ZeroGasLimit,
    #[error("tx_id does not match transaction fields")]
    BadTxId,
}

impl TxError {
    pub fn code(&self) -> &'static str {
        match self {
            TxError::UnknownSender(_) => "UnknownSender",
            TxError::BadNonce { .. } => "BadNonce",
            TxError::InsufficientBalance { .. } => "InsufficientBalance",
            TxError::ZeroGasLimit => "ZeroGasLimit",
            TxError::BadTxId => "BadTxId",
        }
    }
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("mempool is empty")]
    EmptyMempool,
    #[error("could not seal block: {0}")]
    SealFailure(ConsensusError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error("invalid ledger: {0}")]
    Invalid(#[from] Violation),
    #[error("ledger is empty")]
    EmptyLedger,
}

/// Outcome of a successfully applied transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applied {
    pub receipt: Receipt,
    /// `gas_used × gas_price`, held for the block producer.
    pub fee: u128,
    pub trace: Vec<GasOp>,
}

/// Validates `tx` against `state` and executes it. On `Ok`, the sender has
/// paid `receipt.gas_used × gas_price` and its nonce is bumped, whether or
/// not the contract call itself succeeded. On `Err`, `state` is unchanged.
pub fn apply_transaction(
    state: &mut WorldState,
    tx: &Transaction,
    registry: &HandlerRegistry,
    schedule: &GasSchedule,
) -> Result<Applied, TxError> {
    if tx.gas_limit == 0 {
        return Err(TxError::ZeroGasLimit);
    }
    if !tx.id_is_valid() {
        return Err(TxError::BadTxId);
    }
    let account = state
        .accounts
        .get(&tx.sender)
        .ok_or(TxError::UnknownSender(tx.sender))?;
    if account.nonce != tx.nonce {
        return Err(TxError::BadNonce {
            expected: account.nonce,
            got: tx.nonce,
        });
    }
    let required = tx.max_fee().unwrap_or(u128::MAX);
    if account.balance < required {
        return Err(TxError::InsufficientBalance {
            balance: account.balance,
            required,
        });
    }

    let outcome = match &tx.kind {
        TxKind::ContractCreate {
            handler_id,
            init_payload,
        } => vm::deploy_contract(
            state,
            registry,
            schedule,
            tx.sender,
            tx.nonce,
            handler_id,
            init_payload,
            tx.gas_limit,
        ),
        TxKind::ContractCall { target, method, args } => vm::call_contract(
            state,
            registry,
            schedule,
            tx.sender,
            *target,
            method,
            args,
            tx.gas_limit,
        ),
    };
    let (receipt, trace) = match outcome {
        Ok(exec) => (
            Receipt {
                tx_id: tx.tx_id,
                status: ReceiptStatus::Success,
                gas_used: exec.gas_used,
                created_address: exec.created_address,
                output: exec.output,
            },
            exec.trace,
        ),
        Err(failure) => (
            Receipt {
                tx_id: tx.tx_id,
                status: ReceiptStatus::Failure(format!("{}: {}", failure.error.code(), failure.error)),
                gas_used: failure.gas_used,
                created_address: None,
                output: Vec::new(),
            },
            failure.trace,
        ),
    };

    let fee = receipt.fee(tx.gas_price);
    let account = state.accounts.get_mut(&tx.sender).expect("sender checked above");
    account.balance -= fee;
    account.nonce += 1;
    Ok(Applied { receipt, fee, trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainParams {
    pub consensus: ConsensusConfig,
    pub gas_schedule: GasSchedule,
    /// Fee recipient under proof-of-work. Under proof-of-stake the selected
    /// validator is the producer.
    pub beneficiary: Address,
}

/// Where a transaction landed, with its receipt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxRecord {
    pub height: u64,
    pub index: usize,
    pub receipt: Receipt,
}

#[derive(Debug, Clone)]
pub struct Produced {
    pub block: Block,
    pub receipts: Vec<Receipt>,
    pub dropped: Vec<(Hash256, TxError)>,
    pub total_fees: u128,
}

/// The ordered list of blocks; genesis first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    pub blocks: Vec<Block>,
}

impl Ledger {
    pub fn head(&self) -> Option<&Block> {
        self.blocks.last()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

pub struct Chain {
    params: ChainParams,
    registry: HandlerRegistry,
    clock: Arc<dyn Clock>,
    ledger: Ledger,
    state: WorldState,
    receipts: HashMap<Hash256, TxRecord>,
    mempool: VecDeque<Transaction>,
}

impl std::fmt::Debug for Chain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Chain")
            .field("params", &self.params)
            .field("height", &self.height())
            .field("mempool", &self.mempool.len())
            .finish()
    }
}

impl Chain {
    /// Creates a chain holding only a sealed genesis block for `alloc`.
    pub fn genesis(
        params: ChainParams,
        registry: HandlerRegistry,
        clock: Arc<dyn Clock>,
        alloc: Vec<Account>,
    ) -> Result<Self, ChainError> {
        params.consensus.validate()?;
        let mut alloc = alloc;
        alloc.sort_by_key(|a| a.address);
        alloc.dedup_by_key(|a| a.address);
        let state = WorldState::from_accounts(alloc.clone());

        let mut chain = Chain {
            params,
            registry,
            clock,
            ledger: Ledger::default(),
            state,
            receipts: HashMap::new(),
            mempool: VecDeque::new(),
        };
        let producer = chain.producer_for(&Hash256::zero(), &chain.state)?;
        let header = BlockHeader {
            height: 0,
            parent_hash: Hash256::zero(),
            timestamp: chain.clock.now_ms(),
            tx_root: transactions_root(&[]),
            producer,
            seal: ConsensusSeal::Pow {
                pow_nonce: 0,
                difficulty_bits: 0,
            },
            state_digest: chain.state.digest(),
        };
        let block = chain.seal(header, Vec::new(), alloc)?;
        chain.ledger.blocks.push(block);
        Ok(chain)
    }

    /// Rebuilds a chain from a loaded ledger, verifying every block and
    /// replaying every transaction.
    pub fn from_ledger(
        ledger: Ledger,
        registry: HandlerRegistry,
        clock: Arc<dyn Clock>,
        gas_schedule: GasSchedule,
    ) -> Result<Self, ChainError> {
        let genesis = ledger.blocks.first().ok_or(ChainError::EmptyLedger)?;
        let consensus = ConsensusConfig::from_seal(&genesis.header.seal);
        let beneficiary = genesis.header.producer;
        let replay = verify_chain(&ledger, &registry, &gas_schedule)?;
        Ok(Chain {
            params: ChainParams {
                consensus,
                gas_schedule,
                beneficiary,
            },
            registry,
            clock,
            ledger,
            state: replay.state,
            receipts: replay.receipts,
            mempool: VecDeque::new(),
        })
    }

    fn producer_for(&self, seed: &Hash256, pre_state: &WorldState) -> Result<Address, ChainError> {
        match self.params.consensus.mode {
            ConsensusMode::Pow => Ok(self.params.beneficiary),
            ConsensusMode::Pos => {
                consensus::select_validator(&pre_state.stake_table(), seed).map_err(ChainError::SealFailure)
            }
        }
    }

    fn seal(
        &self,
        mut header: BlockHeader,
        transactions: Vec<Transaction>,
        alloc: Vec<Account>,
    ) -> Result<Block, ChainError> {
        match self.params.consensus.mode {
            ConsensusMode::Pow => {
                let bits = self.params.consensus.difficulty_bits;
                let mined = consensus::mine_pow(&header, bits).map_err(ChainError::SealFailure)?;
                self.clock.charge_hashes(mined.attempts);
                header.seal = ConsensusSeal::Pow {
                    pow_nonce: mined.pow_nonce,
                    difficulty_bits: bits,
                };
            }
            ConsensusMode::Pos => {
                header.seal = ConsensusSeal::Pos {
                    validator: header.producer,
                    selection_seed: header.parent_hash,
                };
            }
        }
        Ok(Block::seal_header(header, transactions, alloc))
    }

    /// Queues a transaction. Validation happens when the block is produced.
    pub fn submit(&mut self, tx: Transaction) -> Hash256 {
        let id = tx.tx_id;
        self.mempool.push_back(tx);
        id
    }

    /// Drains the mempool in FIFO order into a new sealed block. Transactions
    /// that fail validation are dropped (and logged), not included.
    pub fn produce_block(&mut self) -> Result<Produced, ChainError> {
        if self.mempool.is_empty() {
            return Err(ChainError::EmptyMempool);
        }
        let parent = self.head().clone();
        let producer = self.producer_for(&parent.block_hash, &self.state)?;
        if !self.state.accounts.contains_key(&producer) {
            return Err(ChainError::Consensus(ConsensusError::UnknownProducer(producer)));
        }

        let mut working = self.state.clone();
        let mut included = Vec::new();
        let mut receipts = Vec::new();
        let mut dropped = Vec::new();
        let mut total_fees: u128 = 0;
        for tx in self.mempool.drain(..) {
            match apply_transaction(&mut working, &tx, &self.registry, &self.params.gas_schedule) {
                Ok(applied) => {
                    total_fees += applied.fee;
                    receipts.push(applied.receipt);
                    included.push(tx);
                }
                Err(err) => {
                    warn!(tx_id = %tx.tx_id, reason = %err, "dropping invalid transaction");
                    dropped.push((tx.tx_id, err));
                }
            }
        }
        consensus::reward_producer(&mut working, &producer, total_fees)?;

        let header = BlockHeader {
            height: parent.height() + 1,
            parent_hash: parent.block_hash,
            timestamp: self.clock.now_ms(),
            tx_root: transactions_root(&included),
            producer,
            seal: ConsensusSeal::Pow {
                pow_nonce: 0,
                difficulty_bits: 0,
            },
            state_digest: working.digest(),
        };
        let block = self.seal(header, included, Vec::new())?;

        let height = block.height();
        for (index, receipt) in receipts.iter().enumerate() {
            self.receipts.insert(
                receipt.tx_id,
                TxRecord {
                    height,
                    index,
                    receipt: receipt.clone(),
                },
            );
        }
        self.state = working;
        self.ledger.blocks.push(block.clone());
        Ok(Produced {
            block,
            receipts,
            dropped,
            total_fees,
        })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn registry(&self) -> &HandlerRegistry {
        &self.registry
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn blocks(&self) -> &[Block] {
        &self.ledger.blocks
    }

    pub fn block(&self, height: u64) -> Option<&Block> {
        self.ledger.blocks.get(usize::try_from(height).ok()?)
    }

    pub fn head(&self) -> &Block {
        self.ledger.blocks.last().expect("chain always holds genesis")
    }

    pub fn height(&self) -> u64 {
        self.head().height()
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn receipt(&self, tx_id: &Hash256) -> Option<&TxRecord> {
        self.receipts.get(tx_id)
    }

    pub fn transaction(&self, tx_id: &Hash256) -> Option<&Transaction> {
        let record = self.receipts.get(tx_id)?;
        self.block(record.height)?.transactions.get(record.index)
    }

    pub fn mempool_len(&self) -> usize {
        self.mempool.len()
    }

    /// Nonce the next transaction from `sender` should carry, counting
    /// transactions still waiting in the mempool.
    pub fn next_nonce(&self, sender: &Address) -> Option<u64> {
        let base = self.state.account(sender)?.nonce;
        let pending = self.mempool.iter().filter(|tx| tx.sender == *sender).count() as u64;
        Some(base + pending)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::LogicalClock;
    use crate::fixed::Fixed;
    use crate::vm::{encode_metric_list, MetricList, REPORT_HANDLER_ID};

    fn alice() -> Address {
        Address::from_label("alice")
    }

    fn miner() -> Address {
        Address::from_label("miner")
    }

    fn params(bits: u8) -> ChainParams {
        ChainParams {
            consensus: ConsensusConfig::pow(bits),
            gas_schedule: GasSchedule::default(),
            beneficiary: miner(),
        }
    }

    fn chain(bits: u8) -> Chain {
        Chain::genesis(
            params(bits),
            HandlerRegistry::default(),
            Arc::new(LogicalClock::default()),
            vec![Account::new(alice(), 10u128.pow(18)), Account::new(miner(), 0)],
        )
        .unwrap()
    }

    fn deploy_tx(nonce: u64) -> Transaction {
        let payload = encode_metric_list(&MetricList::new(vec![("likes".into(), Fixed::from_int(1))]).unwrap());
        Transaction::create(alice(), nonce, REPORT_HANDLER_ID, payload, 100_000, 10)
    }

    #[test]
    fn accepted_transaction_bumps_nonce_and_charges_fee() {
        let mut state = WorldState::from_accounts([Account::new(alice(), 10u128.pow(18))]);
        let applied = apply_transaction(
            &mut state,
            &deploy_tx(0),
            &HandlerRegistry::default(),
            &GasSchedule::default(),
        )
        .unwrap();
        let account = state.account(&alice()).unwrap();
        assert_eq!(account.nonce, 1);
        assert_eq!(applied.receipt.gas_used, 37_000);
        assert_eq!(applied.fee, 370_000);
        assert_eq!(account.balance, 10u128.pow(18) - 370_000);
    }

    #[test]
    fn replay_is_bad_nonce() {
        let mut state = WorldState::from_accounts([Account::new(alice(), 10u128.pow(18))]);
        let tx = deploy_tx(0);
        apply_transaction(&mut state, &tx, &HandlerRegistry::default(), &GasSchedule::default()).unwrap();
        let before = state.clone();
        assert_eq!(
            apply_transaction(&mut state, &tx, &HandlerRegistry::default(), &GasSchedule::default()),
            Err(TxError::BadNonce { expected: 1, got: 0 })
        );
        assert_eq!(state, before);
    }

    #[test]
    fn insufficient_balance_for_gas_limit() {
        let mut state = WorldState::from_accounts([Account::new(alice(), 100)]);
        let tx = Transaction::call(alice(), 0, Address::zero(), "m", vec![], 21_000, 1);
        assert_eq!(
            apply_transaction(&mut state, &tx, &HandlerRegistry::default(), &GasSchedule::default()),
            Err(TxError::InsufficientBalance {
                balance: 100,
                required: 21_000
            })
        );
    }

    #[test]
    fn unknown_sender_and_zero_gas() {
        let mut state = WorldState::default();
        let tx = Transaction::call(alice(), 0, Address::zero(), "m", vec![], 21_000, 1);
        assert_eq!(
            apply_transaction(&mut state, &tx, &HandlerRegistry::default(), &GasSchedule::default()),
            Err(TxError::UnknownSender(alice()))
        );
        let tx = Transaction::call(alice(), 0, Address::zero(), "m", vec![], 0, 1);
        assert_eq!(
            apply_transaction(&mut state, &tx, &HandlerRegistry::default(), &GasSchedule::default()),
            Err(TxError::ZeroGasLimit)
        );
    }

    #[test]
    fn contract_failure_still_charges_and_bumps_nonce() {
        let mut state = WorldState::from_accounts([Account::new(alice(), 10u128.pow(18))]);
        let tx = Transaction::call(alice(), 0, Address::zero(), "get_report", vec![], 50_000, 2);
        let applied = apply_transaction(&mut state, &tx, &HandlerRegistry::default(), &GasSchedule::default()).unwrap();
        assert!(!applied.receipt.is_success());
        assert_eq!(applied.receipt.gas_used, 21_000);
        assert_eq!(state.account(&alice()).unwrap().nonce, 1);
        assert_eq!(state.account(&alice()).unwrap().balance, 10u128.pow(18) - 42_000);
    }

    #[test]
    fn produce_block_includes_single_tx() {
        let mut chain = chain(4);
        chain.submit(deploy_tx(0));
        let produced = chain.produce_block().unwrap();
        assert_eq!(produced.block.height(), 1);
        assert_eq!(produced.block.transactions, vec![deploy_tx(0)]);
        assert_eq!(chain.height(), 1);
        assert_eq!(chain.head().header.parent_hash, chain.block(0).unwrap().block_hash);
    }

    #[test]
    fn produce_block_drops_bad_nonce() {
        let mut chain = chain(4);
        chain.submit(deploy_tx(0));
        chain.submit(deploy_tx(5));
        let produced = chain.produce_block().unwrap();
        assert_eq!(produced.block.transactions, vec![deploy_tx(0)]);
        assert_eq!(produced.dropped.len(), 1);
        assert_eq!(produced.dropped[0].1, TxError::BadNonce { expected: 1, got: 5 });
    }

    #[test]
    fn empty_mempool_is_an_error() {
        let mut chain = chain(0);
        assert!(matches!(chain.produce_block(), Err(ChainError::EmptyMempool)));
    }

    #[test]
    fn producer_receives_exactly_the_fees() {
        let mut chain = chain(0);
        let before = chain.state().account(&miner()).unwrap().balance;
        chain.submit(deploy_tx(0));
        chain.submit(Transaction::call(alice(), 1, Address::zero(), "x", vec![], 30_000, 10));
        let produced = chain.produce_block().unwrap();
        let fees: u128 = produced
            .block
            .transactions
            .iter()
            .zip(&produced.receipts)
            .map(|(tx, r)| r.gas_used as u128 * tx.gas_price)
            .sum();
        assert_eq!(fees, 370_000 + 210_000);
        let after = chain.state().account(&miner()).unwrap().balance;
        assert_eq!(after - before, fees);
        assert_eq!(chain.state().total_balance(), 10u128.pow(18));
    }

    #[test]
    fn pos_without_stakers_cannot_seal() {
        let params = ChainParams {
            consensus: ConsensusConfig::pos(),
            gas_schedule: GasSchedule::default(),
            beneficiary: miner(),
        };
        let err = Chain::genesis(
            params,
            HandlerRegistry::default(),
            Arc::new(LogicalClock::default()),
            vec![Account::new(alice(), 1)],
        )
        .unwrap_err();
        assert!(matches!(err, ChainError::SealFailure(ConsensusError::NoStakers)));
    }

    #[test]
    fn next_nonce_counts_pending() {
        let mut chain = chain(0);
        assert_eq!(chain.next_nonce(&alice()), Some(0));
        chain.submit(deploy_tx(0));
        assert_eq!(chain.next_nonce(&alice()), Some(1));
        chain.produce_block().unwrap();
        assert_eq!(chain.next_nonce(&alice()), Some(1));
    }
}
