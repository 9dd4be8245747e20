use serde::{Deserialize, Serialize};

use crate::codec::Encoder;
use crate::types::{dec_u128, hex_bytes, sha256, Address, Hash256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TxKind {
    ContractCreate {
        handler_id: String,
        #[serde(with = "hex_bytes")]
        init_payload: Vec<u8>,
    },
    ContractCall {
        target: Address,
        method: String,
        #[serde(with = "hex_bytes")]
        args: Vec<u8>,
    },
}

impl TxKind {
    const CREATE_TAG: u8 = 0;
    const CALL_TAG: u8 = 1;

    pub fn encode_into(&self, enc: &mut Encoder) {
        match self {
            TxKind::ContractCreate {
                handler_id,
                init_payload,
            } => {
                enc.u8(Self::CREATE_TAG).str(handler_id).bytes(init_payload);
            }
            TxKind::ContractCall { target, method, args } => {
                enc.u8(Self::CALL_TAG).address(target).str(method).bytes(args);
            }
        }
    }
}

/// A message from an externally owned account.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_id: Hash256,
    pub sender: Address,
    pub nonce: u64,
    pub kind: TxKind,
    pub gas_limit: u64,
    #[serde(with = "dec_u128")]
    pub gas_price: u128,
}

impl Transaction {
    pub fn new(sender: Address, nonce: u64, kind: TxKind, gas_limit: u64, gas_price: u128) -> Self {
        let mut tx = Transaction {
            tx_id: Hash256::zero(),
            sender,
            nonce,
            kind,
            gas_limit,
            gas_price,
        };
        tx.tx_id = tx.compute_id();
        tx
    }

    pub fn create(
        sender: Address,
        nonce: u64,
        handler_id: &str,
        init_payload: Vec<u8>,
        gas_limit: u64,
        gas_price: u128,
    ) -> Self {
        let kind = TxKind::ContractCreate {
            handler_id: handler_id.to_string(),
            init_payload,
        };
        Self::new(sender, nonce, kind, gas_limit, gas_price)
    }

    pub fn call(
        sender: Address,
        nonce: u64,
        target: Address,
        method: &str,
        args: Vec<u8>,
        gas_limit: u64,
        gas_price: u128,
    ) -> Self {
        let kind = TxKind::ContractCall {
            target,
            method: method.to_string(),
            args,
        };
        Self::new(sender, nonce, kind, gas_limit, gas_price)
    }

    /// Canonical serialization of every field except `tx_id`.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.address(&self.sender).u64(self.nonce);
        self.kind.encode_into(&mut enc);
        enc.u64(self.gas_limit).u128(self.gas_price);
        enc.finish()
    }

    pub fn compute_id(&self) -> Hash256 {
        sha256(&self.canonical_bytes())
    }

    pub fn id_is_valid(&self) -> bool {
        self.compute_id() == self.tx_id
    }

    /// Upper bound on what the sender may be charged.
    pub fn max_fee(&self) -> Option<u128> {
        (self.gas_limit as u128).checked_mul(self.gas_price)
    }
}

/// Digest binding the ordered transaction list into a block header.
pub fn transactions_root(txs: &[Transaction]) -> Hash256 {
    let mut enc = Encoder::new();
    enc.u32(txs.len() as u32);
    for tx in txs {
        enc.hash(&tx.tx_id);
    }
    sha256(&enc.finish())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum ReceiptStatus {
    Success,
    Failure(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_id: Hash256,
    #[serde(flatten)]
    pub status: ReceiptStatus,
    pub gas_used: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub created_address: Option<Address>,
    #[serde(with = "hex_bytes")]
    pub output: Vec<u8>,
}

impl Receipt {
    pub fn is_success(&self) -> bool {
        matches!(self.status, ReceiptStatus::Success)
    }

    pub fn fee(&self, gas_price: u128) -> u128 {
        self.gas_used as u128 * gas_price
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_covers_every_field() {
        let base = Transaction::call(
            Address::from_label("a"),
            3,
            Address::from_label("c"),
            "m",
            vec![1],
            50_000,
            7,
        );
        assert!(base.id_is_valid());

        let mut variants = vec![base.clone(); 6];
        variants[0].sender = Address::from_label("b");
        variants[1].nonce += 1;
        variants[2].gas_limit += 1;
        variants[3].gas_price += 1;
        if let TxKind::ContractCall { args, .. } = &mut variants[4].kind {
            args.push(0);
        }
        if let TxKind::ContractCall { method, .. } = &mut variants[5].kind {
            method.push('x');
        }
        for v in variants {
            assert!(!v.id_is_valid());
        }
    }

    #[test]
    fn json_shape_is_stable() {
        let tx = Transaction::create(Address::zero(), 0, "report_v1", vec![0xab], 100_000, 1);
        let json = serde_json::to_string(&tx).unwrap();
        assert!(json.contains(r#""kind":{"type":"contract_create","handler_id":"report_v1","init_payload":"0xab"}"#));
        assert!(json.ends_with(r#""gas_limit":100000,"gas_price":"1"}"#));
        let back: Transaction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tx);
    }
}
