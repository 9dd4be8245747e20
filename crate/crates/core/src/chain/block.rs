use serde::{Deserialize, Serialize};

use crate::codec::Encoder;
use crate::consensus::ConsensusSeal;
use crate::types::{sha256, Address, Hash256};

use super::{Account, Transaction};

/// Every hashed header field. `block_hash` is the SHA-256 of
/// [`BlockHeader::canonical_bytes`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub height: u64,
    pub parent_hash: Hash256,
    /// Milliseconds, from the injected clock.
    pub timestamp: u64,
    /// Digest of the ordered transaction id list.
    pub tx_root: Hash256,
    /// Account credited with the block's fees.
    pub producer: Address,
    pub seal: ConsensusSeal,
    pub state_digest: Hash256,
}

impl BlockHeader {
    /// `height u64 | parent_hash | timestamp u64 | tx_root | producer | seal |
    /// state_digest`
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode_until_seal(&mut enc);
        self.seal.encode_into(&mut enc);
        enc.hash(&self.state_digest);
        enc.finish()
    }

    pub(crate) fn encode_until_seal(&self, enc: &mut Encoder) {
        enc.u64(self.height)
            .hash(&self.parent_hash)
            .u64(self.timestamp)
            .hash(&self.tx_root)
            .address(&self.producer);
    }

    pub fn hash(&self) -> Hash256 {
        hash_block(self)
    }
}

/// Digest of the canonical header serialization.
pub fn hash_block(header: &BlockHeader) -> Hash256 {
    sha256(&header.canonical_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    #[serde(flatten)]
    pub header: BlockHeader,
    pub block_hash: Hash256,
    pub transactions: Vec<Transaction>,
    /// Initial account allocation; present only on the genesis block and
    /// bound by its `state_digest`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alloc: Vec<Account>,
}

impl Block {
    pub fn seal_header(header: BlockHeader, transactions: Vec<Transaction>, alloc: Vec<Account>) -> Self {
        let block_hash = header.hash();
        Self {
            header,
            block_hash,
            transactions,
            alloc,
        }
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    pub fn hash_is_valid(&self) -> bool {
        self.header.hash() == self.block_hash
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::ConsensusSeal;

    fn header(timestamp: u64) -> BlockHeader {
        BlockHeader {
            height: 0,
            parent_hash: Hash256::zero(),
            timestamp,
            tx_root: Hash256::zero(),
            producer: Address::zero(),
            seal: ConsensusSeal::Pow {
                pow_nonce: 0,
                difficulty_bits: 0,
            },
            state_digest: Hash256::zero(),
        }
    }

    #[test]
    fn hashing_is_deterministic() {
        assert_eq!(hash_block(&header(7)), hash_block(&header(7)));
    }

    #[test]
    fn timestamp_changes_digest() {
        // Computed independently with Python's hashlib over the hand-built
        // 142-byte preimage.
        assert_eq!(
            hash_block(&header(0)).to_hex(),
            "0xb7f064b4bd27a3d68b5e66519cfac498d2e96da9bfd1bacf4110f4c7c98feca3"
        );
        assert_eq!(
            hash_block(&header(1)).to_hex(),
            "0x94a0e3c7e2a5d56592f901582e45f85ed5bf1a8c1b71455bce70373f00e08223"
        );
    }
}
