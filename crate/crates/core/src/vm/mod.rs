//! Gas-metered contract runtime.
//!
//! Contracts are instances of native handlers registered at node start and
//! selected by `handler_id`. Every storage access goes through a
//! [`CallContext`] that charges gas from the [`GasSchedule`] and buffers
//! writes; the buffer is applied to contract storage only when the call
//! succeeds, so a failed call leaves storage untouched.

mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::WorldState;
use crate::codec::Encoder;
use crate::types::{sha256, Address};

pub use report::{
    batch_key, benchmark_key, decode_metric_list, encode_metric_list, report_key, report_prefix, MetricList,
    ReportArgs, ReportContract, REPORT_HANDLER_ID,
};

pub type Storage = BTreeMap<Vec<u8>, Vec<u8>>;
pub type Entry = (Vec<u8>, Vec<u8>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contract {
    pub address: Address,
    pub handler_id: String,
    pub storage: Storage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GasSchedule {
    pub tx_base: u64,
    pub storage_write_per_key: u64,
    pub storage_read_per_key: u64,
    pub create_base: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        Self {
            tx_base: 21_000,
            storage_write_per_key: 5_000,
            storage_read_per_key: 200,
            create_base: 32_000,
        }
    }
}

impl GasSchedule {
    pub fn validate(&self) -> Result<(), String> {
        let entries = [
            ("tx_base", self.tx_base),
            ("storage_write_per_key", self.storage_write_per_key),
            ("storage_read_per_key", self.storage_read_per_key),
            ("create_base", self.create_base),
        ];
        match entries.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(format!("gas schedule entry {name} must be > 0")),
            None => Ok(()),
        }
    }

    pub fn cost(&self, op: GasOp) -> u64 {
        match op {
            GasOp::TxBase => self.tx_base,
            GasOp::CreateBase => self.create_base,
            GasOp::StorageRead => self.storage_read_per_key,
            GasOp::StorageWrite => self.storage_write_per_key,
        }
    }

    /// Sum of the schedule over an operation trace.
    pub fn price_trace(&self, trace: &[GasOp]) -> u64 {
        trace.iter().map(|op| self.cost(*op)).sum()
    }
}

/// One metered step of an execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GasOp {
    TxBase,
    CreateBase,
    StorageRead,
    StorageWrite,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("unknown handler {0:?}")]
    UnknownHandler(String),
    #[error("address {0} already occupied")]
    AddressCollision(Address),
    #[error("out of gas (limit {limit})")]
    OutOfGas { limit: u64 },
    #[error("no contract at {0}")]
    UnknownContract(Address),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("storage key {key} already written")]
    ImmutableOverwrite { key: String },
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("write attempted in a read-only call")]
    ReadOnly,
}

impl VmError {
    /// Stable machine-readable code, used in receipts and API responses.
    pub fn code(&self) -> &'static str {
        match self {
            VmError::UnknownHandler(_) => "UnknownHandler",
            VmError::AddressCollision(_) => "AddressCollision",
            VmError::OutOfGas { .. } => "OutOfGas",
            VmError::UnknownContract(_) => "UnknownContract",
            VmError::UnknownMethod(_) => "UnknownMethod",
            VmError::ImmutableOverwrite { .. } => "ImmutableOverwrite",
            VmError::InvalidArgs(_) => "InvalidArgs",
            VmError::NotFound(_) => "NotFound",
            VmError::ReadOnly => "ReadOnly",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub gas_used: u64,
    pub output: Vec<u8>,
    pub created_address: Option<Address>,
    pub trace: Vec<GasOp>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub error: VmError,
    /// Gas charged for the failed execution. Equals the gas limit for
    /// `OutOfGas`, otherwise the metered gas up to the failing step.
    pub gas_used: u64,
    pub trace: Vec<GasOp>,
}

#[derive(Debug, Clone)]
struct GasMeter {
    schedule: GasSchedule,
    limit: u64,
    used: u64,
    trace: Vec<GasOp>,
}

impl GasMeter {
    fn new(schedule: GasSchedule, limit: u64) -> Self {
        Self {
            schedule,
            limit,
            used: 0,
            trace: Vec::new(),
        }
    }

    fn charge(&mut self, op: GasOp) -> Result<(), VmError> {
        let next = self.used.saturating_add(self.schedule.cost(op));
        if next > self.limit {
            return Err(VmError::OutOfGas { limit: self.limit });
        }
        self.used = next;
        self.trace.push(op);
        Ok(())
    }

    fn fail(self, error: VmError) -> Failure {
        let gas_used = match error {
            VmError::OutOfGas { limit } => limit,
            _ => self.used,
        };
        Failure {
            error,
            gas_used,
            trace: self.trace,
        }
    }
}

/// Metered, buffered view of one contract's storage during a call.
pub struct CallContext<'a> {
    base: &'a Storage,
    writes: Storage,
    meter: GasMeter,
    read_only: bool,
    caller: Address,
    address: Address,
}

impl<'a> CallContext<'a> {
    fn new(base: &'a Storage, meter: GasMeter, caller: Address, address: Address) -> Self {
        Self {
            base,
            writes: Storage::new(),
            meter,
            read_only: false,
            caller,
            address,
        }
    }

    pub fn caller(&self) -> Address {
        self.caller
    }

    pub fn address(&self) -> Address {
        self.address
    }

    /// Whether `key` holds a value. Free: the existence check is part of
    /// the price of the write that follows it.
    pub fn contains(&self, key: &[u8]) -> bool {
        self.writes.contains_key(key) || self.base.contains_key(key)
    }

    pub fn read(&mut self, key: &[u8]) -> Result<Option<Vec<u8>>, VmError> {
        self.meter.charge(GasOp::StorageRead)?;
        Ok(self.writes.get(key).or_else(|| self.base.get(key)).cloned())
    }

    /// All entries whose key starts with `prefix`, in key order. Charges one
    /// read per entry returned.
    pub fn scan_prefix(&mut self, prefix: &[u8]) -> Result<Vec<Entry>, VmError> {
        let mut merged: Storage = self
            .base
            .range(prefix.to_vec()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (k, v) in self.writes.range(prefix.to_vec()..) {
            if !k.starts_with(prefix) {
                break;
            }
            merged.insert(k.clone(), v.clone());
        }
        for _ in 0..merged.len() {
            self.meter.charge(GasOp::StorageRead)?;
        }
        Ok(merged.into_iter().collect())
    }

    pub fn write(&mut self, key: Vec<u8>, value: Vec<u8>) -> Result<(), VmError> {
        if self.read_only {
            return Err(VmError::ReadOnly);
        }
        self.meter.charge(GasOp::StorageWrite)?;
        self.writes.insert(key, value);
        Ok(())
    }

    /// Writes a key that must not have been written before.
    pub fn write_once(&mut self, key: Vec<u8>, value: Vec<u8>) -> Result<(), VmError> {
        if self.contains(&key) {
            return Err(VmError::ImmutableOverwrite {
                key: crate::types::encode_hex(&key),
            });
        }
        self.write(key, value)
    }
}

pub trait Handler: Send + Sync {
    fn id(&self) -> &str;

    /// Runs once at deployment with the creation payload.
    fn init(&self, ctx: &mut CallContext<'_>, payload: &[u8]) -> Result<Vec<u8>, VmError>;

    fn call(&self, ctx: &mut CallContext<'_>, method: &str, args: &[u8]) -> Result<Vec<u8>, VmError>;
}

/// Handlers available to the node, fixed at construction.
#[derive(Clone)]
pub struct HandlerRegistry {
    handlers: BTreeMap<String, Arc<dyn Handler>>,
}

impl fmt::Debug for HandlerRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.handlers.keys()).finish()
    }
}

impl Default for HandlerRegistry {
    /// Registry holding only the report contract.
    fn default() -> Self {
        Self::empty().with(Arc::new(ReportContract))
    }
}

impl HandlerRegistry {
    pub fn empty() -> Self {
        Self {
            handlers: BTreeMap::new(),
        }
    }

    pub fn with(mut self, handler: Arc<dyn Handler>) -> Self {
        self.handlers.insert(handler.id().to_string(), handler);
        self
    }

    pub fn get(&self, id: &str) -> Option<&Arc<dyn Handler>> {
        self.handlers.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.handlers.keys().map(String::as_str)
    }
}

/// Last 20 bytes of `sha256(creator | nonce as u64 big-endian)`.
pub fn derive_contract_address(creator: &Address, nonce: u64) -> Address {
    let mut enc = Encoder::new();
    enc.address(creator).u64(nonce);
    Address::from_digest_tail(&sha256(&enc.finish()))
}

/// Installs a new contract. On failure `state` is unchanged.
#[allow(clippy::too_many_arguments)]
pub fn deploy_contract(
    state: &mut WorldState,
    registry: &HandlerRegistry,
    schedule: &GasSchedule,
    sender: Address,
    nonce: u64,
    handler_id: &str,
    init_payload: &[u8],
    gas_limit: u64,
) -> Result<Execution, Failure> {
    let mut meter = GasMeter::new(*schedule, gas_limit);
    if let Err(e) = meter.charge(GasOp::CreateBase) {
        return Err(meter.fail(e));
    }
    let Some(handler) = registry.get(handler_id) else {
        return Err(meter.fail(VmError::UnknownHandler(handler_id.to_string())));
    };
    let address = derive_contract_address(&sender, nonce);
    if state.contracts.contains_key(&address) || state.accounts.contains_key(&address) {
        return Err(meter.fail(VmError::AddressCollision(address)));
    }

    let empty = Storage::new();
    let mut ctx = CallContext::new(&empty, meter, sender, address);
    let result = handler.init(&mut ctx, init_payload);
    let CallContext { writes, meter, .. } = ctx;
    match result {
        Ok(output) => {
            state.contracts.insert(
                address,
                Contract {
                    address,
                    handler_id: handler_id.to_string(),
                    storage: writes,
                },
            );
            Ok(Execution {
                gas_used: meter.used,
                output,
                created_address: Some(address),
                trace: meter.trace,
            })
        }
        Err(e) => Err(meter.fail(e)),
    }
}

/// Dispatches a method call. On failure the contract's storage is unchanged.
#[allow(clippy::too_many_arguments)]
pub fn call_contract(
    state: &mut WorldState,
    registry: &HandlerRegistry,
    schedule: &GasSchedule,
    sender: Address,
    target: Address,
    method: &str,
    args: &[u8],
    gas_limit: u64,
) -> Result<Execution, Failure> {
    let mut meter = GasMeter::new(*schedule, gas_limit);
    if let Err(e) = meter.charge(GasOp::TxBase) {
        return Err(meter.fail(e));
    }
    let Some(contract) = state.contracts.get_mut(&target) else {
        return Err(meter.fail(VmError::UnknownContract(target)));
    };
    let Some(handler) = registry.get(&contract.handler_id) else {
        return Err(meter.fail(VmError::UnknownHandler(contract.handler_id.clone())));
    };

    let mut ctx = CallContext::new(&contract.storage, meter, sender, target);
    let result = handler.call(&mut ctx, method, args);
    let CallContext { writes, meter, .. } = ctx;
    match result {
        Ok(output) => {
            contract.storage.extend(writes);
            Ok(Execution {
                gas_used: meter.used,
                output,
                created_address: None,
                trace: meter.trace,
            })
        }
        Err(e) => Err(meter.fail(e)),
    }
}

/// Read-only call against committed state; unmetered, no transaction.
pub fn view(
    state: &WorldState,
    registry: &HandlerRegistry,
    target: Address,
    method: &str,
    args: &[u8],
) -> Result<Vec<u8>, VmError> {
    let contract = state.contracts.get(&target).ok_or(VmError::UnknownContract(target))?;
    let handler = registry
        .get(&contract.handler_id)
        .ok_or_else(|| VmError::UnknownHandler(contract.handler_id.clone()))?;
    let meter = GasMeter::new(GasSchedule::default(), u64::MAX);
    let mut ctx = CallContext::new(&contract.storage, meter, Address::zero(), target);
    ctx.read_only = true;
    handler.call(&mut ctx, method, args)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::Fixed;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn metrics3() -> MetricList {
        MetricList::new(vec![
            ("likes".into(), Fixed::from_int(100)),
            ("page_views".into(), Fixed::from_int(200)),
            ("post_engagement".into(), Fixed::from_int(50)),
        ])
        .unwrap()
    }

    fn deployed() -> (WorldState, Address) {
        let mut state = WorldState::default();
        let admin = Address::from_label("admin");
        let exec = deploy_contract(
            &mut state,
            &HandlerRegistry::default(),
            &GasSchedule::default(),
            admin,
            0,
            REPORT_HANDLER_ID,
            &encode_metric_list(&metrics3()),
            1_000_000,
        )
        .unwrap();
        (state, exec.created_address.unwrap())
    }

    fn commit(
        state: &mut WorldState,
        target: Address,
        team: &str,
        round: u64,
        m: &MetricList,
    ) -> Result<Execution, Failure> {
        let args = ReportArgs::commit(team, round, m);
        call_contract(
            state,
            &HandlerRegistry::default(),
            &GasSchedule::default(),
            Address::from_label("admin"),
            target,
            "commit_report",
            &args,
            1_000_000,
        )
    }

    #[test]
    fn address_depends_on_creator_and_nonce() {
        let c = Address::from_label("creator");
        assert_eq!(derive_contract_address(&c, 0), derive_contract_address(&c, 0));
        assert_ne!(derive_contract_address(&c, 0), derive_contract_address(&c, 1));
    }

    #[test]
    fn deploy_report_with_three_benchmarks_costs_47000() {
        let (state, address) = deployed();
        let contract = state.contract(&address).unwrap();
        assert_eq!(contract.storage.len(), 3);
        assert_eq!(address, derive_contract_address(&Address::from_label("admin"), 0));

        let mut again = WorldState::default();
        let exec = deploy_contract(
            &mut again,
            &HandlerRegistry::default(),
            &GasSchedule::default(),
            Address::from_label("other"),
            0,
            REPORT_HANDLER_ID,
            &encode_metric_list(&metrics3()),
            47_000,
        )
        .unwrap();
        assert_eq!(exec.gas_used, 32_000 + 3 * 5_000);
    }

    #[test]
    fn deploy_unknown_handler_changes_nothing() {
        let mut state = WorldState::default();
        let err = deploy_contract(
            &mut state,
            &HandlerRegistry::default(),
            &GasSchedule::default(),
            Address::zero(),
            0,
            "nope",
            &[],
            100_000,
        )
        .unwrap_err();
        assert_eq!(err.error, VmError::UnknownHandler("nope".into()));
        assert_eq!(state, WorldState::default());
    }

    #[test]
    fn deploy_out_of_gas_charges_limit_and_installs_nothing() {
        let mut state = WorldState::default();
        let err = deploy_contract(
            &mut state,
            &HandlerRegistry::default(),
            &GasSchedule::default(),
            Address::zero(),
            0,
            REPORT_HANDLER_ID,
            &encode_metric_list(&metrics3()),
            1_000,
        )
        .unwrap_err();
        assert_eq!(err.error, VmError::OutOfGas { limit: 1_000 });
        assert_eq!(err.gas_used, 1_000);
        assert!(state.contracts.is_empty());

        // Enough for the base but not for every write: still rolled back.
        let err = deploy_contract(
            &mut state,
            &HandlerRegistry::default(),
            &GasSchedule::default(),
            Address::zero(),
            0,
            REPORT_HANDLER_ID,
            &encode_metric_list(&metrics3()),
            46_999,
        )
        .unwrap_err();
        assert_eq!(err.gas_used, 46_999);
        assert!(state.contracts.is_empty());
    }

    #[test]
    fn address_collision_is_rejected() {
        let (mut state, _) = deployed();
        let err = deploy_contract(
            &mut state,
            &HandlerRegistry::default(),
            &GasSchedule::default(),
            Address::from_label("admin"),
            0,
            REPORT_HANDLER_ID,
            &encode_metric_list(&metrics3()),
            1_000_000,
        )
        .unwrap_err();
        assert!(matches!(err.error, VmError::AddressCollision(_)));
    }

    #[test]
    fn commit_then_get_is_byte_identical_and_costs_36000() {
        let (mut state, target) = deployed();
        let m = metrics3();
        let exec = commit(&mut state, target, "team-1", 1, &m).unwrap();
        assert_eq!(exec.gas_used, 21_000 + 3 * 5_000);

        let out = view(
            &state,
            &HandlerRegistry::default(),
            target,
            "get_report",
            &ReportArgs::get("team-1", 1),
        )
        .unwrap();
        assert_eq!(out, encode_metric_list(&m));

        let get = call_contract(
            &mut state,
            &HandlerRegistry::default(),
            &GasSchedule::default(),
            Address::zero(),
            target,
            "get_report",
            &ReportArgs::get("team-1", 1),
            100_000,
        )
        .unwrap();
        assert_eq!(get.output, encode_metric_list(&m));
        assert_eq!(get.gas_used, 21_000 + 3 * 200);
    }

    #[test]
    fn second_commit_is_immutable_overwrite() {
        let (mut state, target) = deployed();
        let m = metrics3();
        commit(&mut state, target, "team-1", 1, &m).unwrap();
        let before = state.clone();

        let other = MetricList::new(vec![("likes".into(), Fixed::from_int(1))]).unwrap();
        let err = commit(&mut state, target, "team-1", 1, &other).unwrap_err();
        assert!(matches!(err.error, VmError::ImmutableOverwrite { .. }));
        assert_eq!(err.gas_used, 21_000);
        assert_eq!(state, before);
    }

    #[test]
    fn unknown_method_and_contract() {
        let (mut state, target) = deployed();
        let reg = HandlerRegistry::default();
        let sched = GasSchedule::default();
        let err = call_contract(
            &mut state,
            &reg,
            &sched,
            Address::zero(),
            target,
            "selfdestruct",
            &[],
            100_000,
        )
        .unwrap_err();
        assert_eq!(err.error, VmError::UnknownMethod("selfdestruct".into()));
        let err = call_contract(
            &mut state,
            &reg,
            &sched,
            Address::zero(),
            Address::zero(),
            "get_report",
            &[],
            100_000,
        )
        .unwrap_err();
        assert_eq!(err.error, VmError::UnknownContract(Address::zero()));
        assert_eq!(err.gas_used, 21_000);
    }

    #[test]
    fn view_cannot_write() {
        let (state, target) = deployed();
        let err = view(
            &state,
            &HandlerRegistry::default(),
            target,
            "commit_report",
            &ReportArgs::commit("t", 1, &metrics3()),
        )
        .unwrap_err();
        assert_eq!(err, VmError::ReadOnly);
    }

    #[test]
    fn ten_thousand_random_creators_give_distinct_addresses() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut seen = HashSet::new();
        let mut inputs = HashSet::new();
        while inputs.len() < 10_000 {
            let bytes: [u8; 20] = rng.random();
            let nonce: u64 = rng.random_range(0..64);
            if inputs.insert((bytes, nonce)) {
                assert!(seen.insert(derive_contract_address(&Address::new(bytes), nonce)));
            }
        }
    }

    proptest! {
        #[test]
        fn gas_used_equals_schedule_over_trace(
            ops in proptest::collection::vec((0u8..3, "[a-c]{1,2}", 1u64..4), 1..30),
            limit in 20_000u64..200_000,
        ) {
            let (mut state, target) = deployed();
            let schedule = GasSchedule::default();
            for (kind, team, round) in ops {
                let before = state.clone();
                let res = match kind {
                    0 => commit(&mut state, target, &team, round, &metrics3()),
                    1 => call_contract(&mut state, &HandlerRegistry::default(), &schedule, Address::zero(), target, "get_report", &ReportArgs::get(&team, round), limit),
                    _ => call_contract(&mut state, &HandlerRegistry::default(), &schedule, Address::zero(), target, "commit_report", &ReportArgs::commit(&team, round, &metrics3()), limit),
                };
                match res {
                    Ok(exec) => prop_assert_eq!(exec.gas_used, schedule.price_trace(&exec.trace)),
                    Err(fail) => {
                        // Atomicity: storage is byte-identical after a failure.
                        prop_assert_eq!(&state, &before);
                        if let VmError::OutOfGas { limit } = fail.error {
                            prop_assert_eq!(fail.gas_used, limit);
                        } else {
                            prop_assert_eq!(fail.gas_used, schedule.price_trace(&fail.trace));
                        }
                    }
                }
            }
        }

        #[test]
        fn first_commit_wins(values in proptest::collection::vec(0u64..1_000_000, 1..20)) {
            let (mut state, target) = deployed();
            let mut first = None;
            for v in values {
                let m = MetricList::new(vec![("likes".into(), Fixed::from_raw(v))]).unwrap();
                if commit(&mut state, target, "t", 1, &m).is_ok() {
                    prop_assert!(first.is_none());
                    first = Some(m);
                }
            }
            let stored = view(&state, &HandlerRegistry::default(), target, "get_report", &ReportArgs::get("t", 1)).unwrap();
            prop_assert_eq!(stored, encode_metric_list(first.as_ref().unwrap()));
        }
    }
}
