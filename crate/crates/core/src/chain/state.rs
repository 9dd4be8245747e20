use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::Encoder;
use crate::types::{dec_u128, sha256, Address, Hash256};
use crate::vm::Contract;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub address: Address,
    /// Wei.
    #[serde(with = "dec_u128")]
    pub balance: u128,
    pub nonce: u64,
    /// Wei locked as collateral; weights proof-of-stake selection.
    #[serde(with = "dec_u128")]
    pub stake: u128,
}

impl Account {
    pub fn new(address: Address, balance: u128) -> Self {
        Self {
            address,
            balance,
            nonce: 0,
            stake: 0,
        }
    }

    pub fn with_stake(mut self, stake: u128) -> Self {
        self.stake = stake;
        self
    }
}

/// Accounts and contracts. Both maps are ordered by address, which is the
/// order used for the state digest and for stake-weighted selection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorldState {
    pub accounts: BTreeMap<Address, Account>,
    pub contracts: BTreeMap<Address, Contract>,
}

impl WorldState {
    pub fn from_accounts(accounts: impl IntoIterator<Item = Account>) -> Self {
        Self {
            accounts: accounts.into_iter().map(|a| (a.address, a)).collect(),
            contracts: BTreeMap::new(),
        }
    }

    pub fn account(&self, address: &Address) -> Option<&Account> {
        self.accounts.get(address)
    }

    pub fn contract(&self, address: &Address) -> Option<&Contract> {
        self.contracts.get(address)
    }

    pub fn stake_table(&self) -> BTreeMap<Address, u128> {
        self.accounts
            .values()
            .filter(|a| a.stake > 0)
            .map(|a| (a.address, a.stake))
            .collect()
    }

    pub fn total_balance(&self) -> u128 {
        self.accounts.values().map(|a| a.balance).sum()
    }

    /// Canonical serialization: account count, then each account as
    /// `address | balance u128 | nonce u64 | stake u128`; contract count, then
    /// each contract as `address | handler_id | entry count | (key, value)*`.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.u32(self.accounts.len() as u32);
        for account in self.accounts.values() {
            enc.address(&account.address)
                .u128(account.balance)
                .u64(account.nonce)
                .u128(account.stake);
        }
        enc.u32(self.contracts.len() as u32);
        for contract in self.contracts.values() {
            enc.address(&contract.address)
                .str(&contract.handler_id)
                .u32(contract.storage.len() as u32);
            for (key, value) in &contract.storage {
                enc.bytes(key).bytes(value);
            }
        }
        enc.finish()
    }

    pub fn digest(&self) -> Hash256 {
        sha256(&self.canonical_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_tracks_every_account_field() {
        let a = Address::from_label("a");
        let base = WorldState::from_accounts([Account::new(a, 10)]);
        let d0 = base.digest();

        let mut s = base.clone();
        s.accounts.get_mut(&a).unwrap().balance += 1;
        assert_ne!(s.digest(), d0);

        let mut s = base.clone();
        s.accounts.get_mut(&a).unwrap().nonce += 1;
        assert_ne!(s.digest(), d0);

        let mut s = base.clone();
        s.accounts.get_mut(&a).unwrap().stake += 1;
        assert_ne!(s.digest(), d0);
    }

    #[test]
    fn stake_table_skips_zero_stakes() {
        let s = WorldState::from_accounts([
            Account::new(Address::from_label("a"), 0).with_stake(5),
            Account::new(Address::from_label("b"), 0),
        ]);
        assert_eq!(s.stake_table().len(), 1);
    }
}
