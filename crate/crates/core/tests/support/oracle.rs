//! Slow path used as an oracle for the rollup: every team sends its raw
//! decision as its own transaction and the contract computes and stores the
//! report itself. Storage layout matches `report_v1`, so stored bytes can be
//! compared directly.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use classchain_core::chain::{Account, Chain, ChainParams, Transaction};
use classchain_core::clock::LogicalClock;
use classchain_core::codec::{Decoder, Encoder};
use classchain_core::consensus::ConsensusConfig;
use classchain_core::fixed::Fixed;
use classchain_core::sim::{compute_report, ActivityReport, Metric, Platform, RoundDecision, SimulationConfig};
use classchain_core::vm::{
    benchmark_key, encode_metric_list, report_key, CallContext, GasSchedule, Handler, HandlerRegistry, ReportContract,
    VmError,
};
use classchain_core::Address;

pub const ORACLE_HANDLER_ID: &str = "report_oracle_v1";

pub struct DecideOracle {
    pub config: SimulationConfig,
}

pub fn encode_decision(d: &RoundDecision) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.str(&d.team).u64(d.round).str(&d.chosen_device);
    enc.u32(d.budgets.len() as u32);
    for (p, v) in &d.budgets {
        enc.str(p.name()).u64(v.raw());
    }
    enc.u32(d.keywords.len() as u32);
    for k in &d.keywords {
        enc.str(k);
    }
    enc.finish()
}

fn decode_decision(bytes: &[u8]) -> Result<RoundDecision, VmError> {
    let bad = |e: classchain_core::codec::DecodeError| VmError::InvalidArgs(e.to_string());
    let mut dec = Decoder::new(bytes);
    let team = dec.str().map_err(bad)?.to_string();
    let round = dec.u64().map_err(bad)?;
    let chosen_device = dec.str().map_err(bad)?.to_string();
    let mut budgets = BTreeMap::new();
    for _ in 0..dec.u32().map_err(bad)? {
        let name = dec.str().map_err(bad)?.to_string();
        let platform = Platform::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| VmError::InvalidArgs(format!("platform {name}")))?;
        budgets.insert(platform, Fixed::from_raw(dec.u64().map_err(bad)?));
    }
    let mut keywords = std::collections::BTreeSet::new();
    for _ in 0..dec.u32().map_err(bad)? {
        keywords.insert(dec.str().map_err(bad)?.to_string());
    }
    dec.finish().map_err(bad)?;
    Ok(RoundDecision {
        team,
        round,
        chosen_device,
        budgets,
        keywords,
    })
}

fn read_fixed(ctx: &mut CallContext<'_>, key: &[u8]) -> Result<Fixed, VmError> {
    let bytes = ctx
        .read(key)?
        .ok_or_else(|| VmError::NotFound("previous metric".into()))?;
    let raw: [u8; 8] = bytes
        .as_slice()
        .try_into()
        .map_err(|_| VmError::InvalidArgs("metric width".into()))?;
    Ok(Fixed::from_raw(u64::from_be_bytes(raw)))
}

impl Handler for DecideOracle {
    fn id(&self) -> &str {
        ORACLE_HANDLER_ID
    }

    fn init(&self, ctx: &mut CallContext<'_>, payload: &[u8]) -> Result<Vec<u8>, VmError> {
        ReportContract.init(ctx, payload)
    }

    fn call(&self, ctx: &mut CallContext<'_>, method: &str, args: &[u8]) -> Result<Vec<u8>, VmError> {
        if method != "decide" {
            return ReportContract.call(ctx, method, args);
        }
        let d = decode_decision(args)?;
        let mut prev = ActivityReport::baseline(&d.team, &self.config.benchmarks);
        for m in Metric::ALL {
            let key = if d.round == 1 {
                benchmark_key(m.name())
            } else {
                report_key(&d.team, d.round - 1, m.name())
            };
            let value = read_fixed(ctx, &key)?;
            match m {
                Metric::Likes => prev.likes = value,
                Metric::PostEngagement => prev.post_engagement = value,
                Metric::PageViews => prev.page_views = value,
            }
        }
        let next = compute_report(&prev, &d, &self.config);
        for (name, value) in next.metric_list().entries() {
            ctx.write_once(report_key(&d.team, d.round, name), value.raw().to_be_bytes().to_vec())?;
        }
        Ok(Vec::new())
    }
}

/// A chain running the oracle contract, one block per round.
pub struct OracleRun {
    pub chain: Chain,
    pub contract: Address,
}

pub fn team_sender(team: &str) -> Address {
    Address::from_label(&format!("oracle:{team}"))
}

impl OracleRun {
    pub fn new(config: &SimulationConfig) -> Self {
        let admin = Address::from_label("oracle-admin");
        let miner = Address::from_label("oracle-miner");
        let mut alloc = vec![Account::new(admin, u64::MAX as u128), Account::new(miner, 0)];
        alloc.extend(
            config
                .team_ids()
                .iter()
                .map(|t| Account::new(team_sender(t), u64::MAX as u128)),
        );
        let registry = HandlerRegistry::empty().with(Arc::new(DecideOracle { config: config.clone() }));
        let params = ChainParams {
            consensus: ConsensusConfig::pow(0),
            gas_schedule: GasSchedule::default(),
            beneficiary: miner,
        };
        let mut chain = Chain::genesis(params, registry, Arc::new(LogicalClock::default()), alloc).unwrap();
        let payload = encode_metric_list(&config.benchmarks.metric_list());
        chain.submit(Transaction::create(admin, 0, ORACLE_HANDLER_ID, payload, 1_000_000, 1));
        let produced = chain.produce_block().unwrap();
        let contract = produced.receipts[0].created_address.expect("oracle deploys");
        Self { chain, contract }
    }

    pub fn play_round(&mut self, decisions: &[RoundDecision]) {
        for d in decisions {
            let sender = team_sender(&d.team);
            let nonce = self.chain.next_nonce(&sender).unwrap();
            self.chain.submit(Transaction::call(
                sender,
                nonce,
                self.contract,
                "decide",
                encode_decision(d),
                1_000_000,
                1,
            ));
        }
        let produced = self.chain.produce_block().unwrap();
        assert!(produced.dropped.is_empty());
        for r in &produced.receipts {
            assert!(r.is_success(), "oracle decide failed: {:?}", r.status);
        }
    }
}
