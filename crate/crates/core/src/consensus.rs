//! Block sealing: proof-of-work mining and stake-weighted validator selection.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Block, BlockHeader, WorldState};
use crate::codec::Encoder;
use crate::types::{sha256, Address, Hash256};

/// Highest difficulty accepted by the miner.
pub const MAX_DIFFICULTY_BITS: u8 = 255;
/// Highest difficulty accepted in configuration for desk-scale runs.
pub const DESK_DIFFICULTY_CEILING: u8 = 32;
pub const DEFAULT_DIFFICULTY_BITS: u8 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsensusError {
    #[error("proof-of-work nonce space exhausted")]
    Exhausted,
    #[error("no account has stake > 0")]
    NoStakers,
    #[error("difficulty {0} outside [0, {DESK_DIFFICULTY_CEILING}]")]
    DifficultyOutOfRange(u8),
    #[error("unknown producer {0}")]
    UnknownProducer(Address),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsensusMode {
    Pow,
    Pos,
}

impl fmt::Display for ConsensusMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConsensusMode::Pow => "pow",
            ConsensusMode::Pos => "pos",
        })
    }
}

impl FromStr for ConsensusMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pow" => Ok(ConsensusMode::Pow),
            "pos" => Ok(ConsensusMode::Pos),
            other => Err(format!("unknown consensus mode {other:?} (expected pow|pos)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsensusConfig {
    pub mode: ConsensusMode,
    /// Proof-of-work only.
    pub difficulty_bits: u8,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        Self {
            mode: ConsensusMode::Pow,
            difficulty_bits: DEFAULT_DIFFICULTY_BITS,
        }
    }
}

impl ConsensusConfig {
    pub fn pow(difficulty_bits: u8) -> Self {
        Self {
            mode: ConsensusMode::Pow,
            difficulty_bits,
        }
    }

    pub fn pos() -> Self {
        Self {
            mode: ConsensusMode::Pos,
            difficulty_bits: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        if self.mode == ConsensusMode::Pow && self.difficulty_bits > DESK_DIFFICULTY_CEILING {
            return Err(ConsensusError::DifficultyOutOfRange(self.difficulty_bits));
        }
        Ok(())
    }

    /// Recovers the configuration a ledger was produced under from its
    /// genesis seal.
    pub fn from_seal(seal: &ConsensusSeal) -> Self {
        match seal {
            ConsensusSeal::Pow { difficulty_bits, .. } => Self::pow(*difficulty_bits),
            ConsensusSeal::Pos { .. } => Self::pos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConsensusSeal {
    Pow {
        pow_nonce: u64,
        difficulty_bits: u8,
    },
    Pos {
        validator: Address,
        selection_seed: Hash256,
    },
}

impl ConsensusSeal {
    /// `0x00 | pow_nonce u64 | difficulty u8` or `0x01 | validator | seed`.
    pub fn encode_into(&self, enc: &mut Encoder) {
        match self {
            ConsensusSeal::Pow {
                pow_nonce,
                difficulty_bits,
            } => {
                enc.u8(0).u64(*pow_nonce).u8(*difficulty_bits);
            }
            ConsensusSeal::Pos {
                validator,
                selection_seed,
            } => {
                enc.u8(1).address(validator).hash(selection_seed);
            }
        }
    }

    pub fn mode(&self) -> ConsensusMode {
        match self {
            ConsensusSeal::Pow { .. } => ConsensusMode::Pow,
            ConsensusSeal::Pos { .. } => ConsensusMode::Pos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinedSeal {
    pub pow_nonce: u64,
    pub block_hash: Hash256,
    /// Hashes computed, including the successful one.
    pub attempts: u64,
}

/// Finds the smallest nonce, searching upward from zero, whose header hash
/// has at least `difficulty_bits` leading zero bits. The seal already present
/// in `header` is ignored.
pub fn mine_pow(header: &BlockHeader, difficulty_bits: u8) -> Result<MinedSeal, ConsensusError> {
    let mut prefix = Encoder::new();
    header.encode_until_seal(&mut prefix);
    prefix.u8(0);
    let mut preimage = prefix.finish();
    let nonce_at = preimage.len();
    preimage.extend_from_slice(&0u64.to_be_bytes());
    preimage.push(difficulty_bits);
    preimage.extend_from_slice(header.state_digest.as_bytes());

    let target = u32::from(difficulty_bits);
    let mut nonce: u64 = 0;
    loop {
        preimage[nonce_at..nonce_at + 8].copy_from_slice(&nonce.to_be_bytes());
        let hash = sha256(&preimage);
        if hash.leading_zero_bits() >= target {
            return Ok(MinedSeal {
                pow_nonce: nonce,
                block_hash: hash,
                attempts: nonce + 1,
            });
        }
        nonce = nonce.checked_add(1).ok_or(ConsensusError::Exhausted)?;
    }
}

/// True iff the block carries a PoW seal, its hash recomputes, and the hash
/// meets the seal's difficulty.
pub fn verify_pow(block: &Block) -> bool {
    let ConsensusSeal::Pow { difficulty_bits, .. } = block.header.seal else {
        return false;
    };
    block.hash_is_valid() && block.block_hash.leading_zero_bits() >= u32::from(difficulty_bits)
}

/// Stake-weighted choice. `r = seed (big-endian 256-bit) mod total_stake`;
/// walking accounts in ascending address order, the first account whose
/// cumulative stake exceeds `r` is selected.
pub fn select_validator(stakes: &BTreeMap<Address, u128>, seed: &Hash256) -> Result<Address, ConsensusError> {
    let total: u128 = stakes
        .values()
        .copied()
        .try_fold(0u128, u128::checked_add)
        .expect("total stake overflows u128");
    if total == 0 {
        return Err(ConsensusError::NoStakers);
    }
    let r = (BigUint::from_bytes_be(seed.as_bytes()) % BigUint::from(total))
        .to_u128()
        .expect("remainder below a u128 modulus");
    let mut cumulative = 0u128;
    for (address, stake) in stakes {
        cumulative += stake;
        if cumulative > r {
            return Ok(*address);
        }
    }
    unreachable!("r < total stake")
}

/// Credits the block's summed fees to its producer. Fees are the only
/// reward; there is no block subsidy.
pub fn reward_producer(state: &mut WorldState, producer: &Address, total_fees: u128) -> Result<(), ConsensusError> {
    let account = state
        .accounts
        .get_mut(producer)
        .ok_or(ConsensusError::UnknownProducer(*producer))?;
    account.balance = account.balance.checked_add(total_fees).expect("balance overflow");
    Ok(())
}
