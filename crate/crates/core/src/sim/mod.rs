//! The round-based marketing simulation.
//!
//! Iteration 0 is setup: the instructor's account deploys `report_v1` with
//! the benchmarks. Each later round collects one [`RoundDecision`] per team
//! off-chain, runs the response model for all of them as one rollup batch,
//! and commits the resulting reports plus the batch digest in a single block.

mod agent;
mod config;
mod model;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::chain::{Account, Chain, ChainError, ChainParams, Ledger, ReceiptStatus, Transaction};
use crate::clock::{Clock, LogicalClock};
use crate::consensus::ConsensusConfig;
use crate::fixed::Fixed;
use crate::metrics::{self, CostRow, FinalityLog, FinalitySample, MetricsError, NetworkProfile};
use crate::scaling::{self, CommitParams, RollupError};
use crate::types::{Address, Hash256};
use crate::vm::{encode_metric_list, GasSchedule, HandlerRegistry, REPORT_HANDLER_ID};

pub use agent::{largest_remainder, scripted_agent_decide};
pub use config::{
    default_catalog, ActivityReport, Benchmarks, DeviceSpec, Metric, Platform, RoundDecision, SimulationConfig,
    SpecTier,
};
pub use model::{compute_report, decision_factors, demand_tag, metric_increase, FIT_DEFAULT, FIT_MATCH, KEYWORD_BONUS};

/// Gas limit on every transaction the simulation submits.
pub const SIM_GAS_LIMIT: u64 = 100_000;
const ADMIN_BALANCE: u128 = 1_000_000_000_000_000_000_000_000_000;
const TEAM_BALANCE: u128 = 1_000_000_000_000_000_000_000;
const ETHER: u128 = 1_000_000_000_000_000_000;
/// Validator stakes, in ether.
pub const VALIDATOR_STAKES: [u128; 3] = [1, 3, 6];

pub fn admin_address() -> Address {
    Address::from_label("instructor")
}

pub fn team_address(team: &str) -> Address {
    Address::from_label(&format!("team:{team}"))
}

pub fn miner_address() -> Address {
    Address::from_label("miner")
}

pub fn validator_address(index: usize) -> Address {
    Address::from_label(&format!("validator-{}", index + 1))
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation already initialized")]
    AlreadyInitialized,
    #[error("simulation not initialized")]
    NotInitialized,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown network profile {0}")]
    UnknownProfile(String),
    #[error("decision is for round {got}, current round is {expected}")]
    WrongRound { expected: u64, got: u64 },
    #[error("unknown team {0}")]
    UnknownTeam(String),
    #[error("team {team} already decided round {round}")]
    DuplicateDecision { team: String, round: u64 },
    #[error("budgets sum to {}, round budget is {expected}", got.map(|g| g.to_string()).unwrap_or_else(|| "overflow".into()))]
    BudgetMismatch { expected: Fixed, got: Option<Fixed> },
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("teams yet to decide: {}", .0.join(", "))]
    MissingDecisions(Vec<String>),
    #[error("simulation is complete")]
    SimulationComplete,
    #[error("report contract deployment failed: {0}")]
    Deploy(String),
    #[error("cannot resume from ledger: {0}")]
    Resume(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Rollup(#[from] RollupError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::AlreadyInitialized => "AlreadyInitialized",
            SimError::NotInitialized => "NotInitialized",
            SimError::InvalidConfig(_) => "InvalidConfig",
            SimError::UnknownProfile(_) => "UnknownProfile",
            SimError::WrongRound { .. } => "WrongRound",
            SimError::UnknownTeam(_) => "UnknownTeam",
            SimError::DuplicateDecision { .. } => "DuplicateDecision",
            SimError::BudgetMismatch { .. } => "BudgetMismatch",
            SimError::UnknownDevice(_) => "UnknownDevice",
            SimError::MissingDecisions(_) => "MissingDecisions",
            SimError::SimulationComplete => "SimulationComplete",
            SimError::Deploy(_) => "DeployFailed",
            SimError::Resume(_) => "ResumeFailed",
            SimError::Chain(_) => "ChainError",
            SimError::Rollup(e) => match e {
                RollupError::Contract { .. } => "ContractError",
                _ => "RollupError",
            },
            SimError::Metrics(_) => "MetricsError",
        }
    }
}

/// Everything needed to start a simulation.
#[derive(Clone)]
pub struct SimOptions {
    pub config: SimulationConfig,
    pub consensus: ConsensusConfig,
    pub gas_schedule: GasSchedule,
    pub profiles: Vec<NetworkProfile>,
    pub clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for SimOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimOptions")
            .field("config", &self.config)
            .field("consensus", &self.consensus)
            .field("gas_schedule", &self.gas_schedule)
            .field("profiles", &self.profiles)
            .finish()
    }
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            config: SimulationConfig::default(),
            consensus: ConsensusConfig::default(),
            gas_schedule: GasSchedule::default(),
            profiles: NetworkProfile::defaults(),
            clock: Arc::new(LogicalClock::default()),
        }
    }
}

/// A committed report with what its commit cost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportRecord {
    #[serde(flatten)]
    pub report: ActivityReport,
    pub gas_used: u64,
    #[serde(with = "crate::types::dec_u128")]
    pub fee_wei: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundSummary {
    pub round: u64,
    pub height: u64,
    pub block_hash: Hash256,
    pub batch_digest: Hash256,
    pub reports: Vec<ActivityReport>,
    pub tx_count: usize,
    pub gas_used: u64,
    pub finality: FinalitySample,
}

/// Read-only snapshot for clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationState {
    pub current_round: u64,
    pub total_rounds: u64,
    pub complete: bool,
    pub teams: Vec<String>,
    pub decided: Vec<String>,
    pub committed_rounds: u64,
    pub contract: Address,
    pub height: u64,
    pub network_profile: String,
    pub demand_tag: Option<String>,
}

pub struct Simulation {
    config: SimulationConfig,
    profiles: Vec<NetworkProfile>,
    profile: NetworkProfile,
    chain: Chain,
    contract: Address,
    current_round: u64,
    complete: bool,
    pending: BTreeMap<String, RoundDecision>,
    latest: BTreeMap<String, ActivityReport>,
    records: BTreeMap<(u64, String), ReportRecord>,
    finality: FinalityLog,
    summaries: Vec<RoundSummary>,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("current_round", &self.current_round)
            .field("complete", &self.complete)
            .field("contract", &self.contract)
            .field("chain", &self.chain)
            .finish()
    }
}

fn genesis_alloc(config: &SimulationConfig) -> Vec<Account> {
    let mut alloc = vec![
        Account::new(admin_address(), ADMIN_BALANCE),
        Account::new(miner_address(), 0),
    ];
    alloc.extend(
        config
            .team_ids()
            .iter()
            .map(|t| Account::new(team_address(t), TEAM_BALANCE)),
    );
    alloc.extend(
        VALIDATOR_STAKES
            .iter()
            .enumerate()
            .map(|(i, stake)| Account::new(validator_address(i), 0).with_stake(stake * ETHER)),
    );
    alloc
}

fn check_options(options: &SimOptions) -> Result<NetworkProfile, SimError> {
    options.config.validate().map_err(SimError::InvalidConfig)?;
    options.gas_schedule.validate().map_err(SimError::InvalidConfig)?;
    options
        .consensus
        .validate()
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    NetworkProfile::find(&options.profiles, &options.config.network_profile)
        .cloned()
        .ok_or_else(|| SimError::UnknownProfile(options.config.network_profile.clone()))
}

impl Simulation {
    /// Iteration 0: genesis, team accounts and the report contract.
    pub fn init(options: SimOptions) -> Result<Self, SimError> {
        let profile = check_options(&options)?;
        let config = options.config;
        let params = ChainParams {
            consensus: options.consensus,
            gas_schedule: options.gas_schedule,
            beneficiary: miner_address(),
        };
        let mut chain = Chain::genesis(
            params,
            HandlerRegistry::default(),
            options.clock,
            genesis_alloc(&config),
        )?;

        let deploy = Transaction::create(
            admin_address(),
            0,
            REPORT_HANDLER_ID,
            encode_metric_list(&config.benchmarks.metric_list()),
            SIM_GAS_LIMIT,
            profile.chain_gas_price(),
        );
        chain.submit(deploy);
        let produced = chain.produce_block()?;
        if let Some((_, err)) = produced.dropped.first() {
            return Err(SimError::Deploy(err.to_string()));
        }
        let receipt = &produced.receipts[0];
        if let ReceiptStatus::Failure(reason) = &receipt.status {
            return Err(SimError::Deploy(reason.clone()));
        }
        let contract = receipt.created_address.expect("successful create has an address");

        Ok(Self {
            config,
            profiles: options.profiles,
            profile,
            chain,
            contract,
            current_round: 1,
            complete: false,
            pending: BTreeMap::new(),
            latest: BTreeMap::new(),
            records: BTreeMap::new(),
            finality: FinalityLog::default(),
            summaries: Vec::new(),
        })
    }

    /// Rebuilds progress from a verified ledger written by an earlier run.
    /// Committed rounds and reports come back; finality samples and pending
    /// decisions do not.
    pub fn resume(options: SimOptions, ledger: Ledger) -> Result<Self, SimError> {
        let profile = check_options(&options)?;
        let config = options.config;
        let chain = Chain::from_ledger(ledger, HandlerRegistry::default(), options.clock, options.gas_schedule)?;
        let deploy = chain
            .block(1)
            .and_then(|b| b.transactions.first())
            .ok_or_else(|| SimError::Resume("ledger has no setup block".into()))?;
        let contract = chain
            .receipt(&deploy.tx_id)
            .and_then(|r| r.receipt.created_address)
            .ok_or_else(|| SimError::Resume("setup block did not deploy a contract".into()))?;

        let mut sim = Self {
            config,
            profiles: options.profiles,
            profile,
            chain,
            contract,
            current_round: 1,
            complete: false,
            pending: BTreeMap::new(),
            latest: BTreeMap::new(),
            records: BTreeMap::new(),
            finality: FinalityLog::default(),
            summaries: Vec::new(),
        };
        let registry = sim.chain.registry().clone();
        while sim.current_round <= sim.config.last_round() {
            let round = sim.current_round;
            let digest = scaling::read_batch_digest(sim.chain.state(), &registry, contract, round)
                .map_err(|e| SimError::Resume(e.to_string()))?;
            if digest.is_none() {
                break;
            }
            for team in sim.config.team_ids() {
                let report = scaling::read_report(sim.chain.state(), &registry, contract, &team, round)
                    .map_err(|e| SimError::Resume(e.to_string()))?
                    .ok_or_else(|| SimError::Resume(format!("round {round} lacks a report for {team}")))?;
                sim.latest.insert(team.clone(), report.clone());
                sim.records.insert(
                    (round, team),
                    ReportRecord {
                        report,
                        gas_used: 0,
                        fee_wei: 0,
                    },
                );
            }
            sim.current_round += 1;
        }
        sim.backfill_costs();
        if sim.current_round > sim.config.last_round() {
            sim.complete = true;
            sim.current_round = sim.config.last_round();
        }
        Ok(sim)
    }

    /// Fills gas and fee on restored records from the ledger's receipts.
    fn backfill_costs(&mut self) {
        for block in self.chain.blocks() {
            for tx in &block.transactions {
                let crate::chain::TxKind::ContractCall { method, args, .. } = &tx.kind else {
                    continue;
                };
                let (Some(team), Some(round)) = (
                    crate::vm::ReportArgs::team_of(method, args),
                    crate::vm::ReportArgs::round_of(method, args),
                ) else {
                    continue;
                };
                if method != "commit_report" {
                    continue;
                }
                if let (Some(rec), Some(tr)) = (self.records.get_mut(&(round, team)), self.chain.receipt(&tx.tx_id)) {
                    if tr.receipt.is_success() {
                        rec.gas_used = tr.receipt.gas_used;
                        rec.fee_wei = tr.receipt.fee(tx.gas_price);
                    }
                }
            }
        }
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn contract(&self) -> Address {
        self.contract
    }

    pub fn profile(&self) -> &NetworkProfile {
        &self.profile
    }

    pub fn profiles(&self) -> &[NetworkProfile] {
        &self.profiles
    }

    pub fn current_round(&self) -> u64 {
        self.current_round
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn finality(&self) -> &FinalityLog {
        &self.finality
    }

    pub fn summaries(&self) -> &[RoundSummary] {
        &self.summaries
    }

    pub fn committed_rounds(&self) -> u64 {
        self.records.keys().map(|(r, _)| *r).collect::<BTreeSet<_>>().len() as u64
    }

    /// Committed reports in (round, team) order.
    pub fn report_records(&self) -> impl Iterator<Item = &ReportRecord> {
        self.records.values()
    }

    pub fn pending_decision(&self, team: &str) -> Option<&RoundDecision> {
        self.pending.get(team)
    }

    pub fn missing_teams(&self) -> Vec<String> {
        self.config
            .team_ids()
            .into_iter()
            .filter(|t| !self.pending.contains_key(t))
            .collect()
    }

    /// A team's report as stored in the contract.
    pub fn report(&self, team: &str, round: u64) -> Option<ActivityReport> {
        scaling::read_report(self.chain.state(), self.chain.registry(), self.contract, team, round)
            .ok()
            .flatten()
    }

    /// Raw metric-list bytes returned by the contract's `get_report`.
    pub fn report_bytes(&self, team: &str, round: u64) -> Option<Vec<u8>> {
        scaling::read_report_bytes(self.chain.state(), self.chain.registry(), self.contract, team, round).ok()
    }

    pub fn cost_report(&self) -> Vec<CostRow> {
        metrics::cost_report(&self.chain, &self.profiles)
    }

    pub fn state(&self) -> SimulationState {
        SimulationState {
            current_round: self.current_round,
            total_rounds: self.config.total_rounds,
            complete: self.complete,
            teams: self.config.team_ids(),
            decided: self.pending.keys().cloned().collect(),
            committed_rounds: self.committed_rounds(),
            contract: self.contract,
            height: self.chain.height(),
            network_profile: self.profile.name.clone(),
            demand_tag: (!self.complete).then(|| demand_tag(&self.config, self.current_round).to_string()),
        }
    }

    /// Records a team's decision for the current round, off-chain.
    pub fn submit_decision(&mut self, decision: RoundDecision) -> Result<(), SimError> {
        if self.complete {
            return Err(SimError::SimulationComplete);
        }
        if decision.round != self.current_round {
            return Err(SimError::WrongRound {
                expected: self.current_round,
                got: decision.round,
            });
        }
        if !self.config.team_ids().contains(&decision.team) {
            return Err(SimError::UnknownTeam(decision.team));
        }
        if self.pending.contains_key(&decision.team) {
            return Err(SimError::DuplicateDecision {
                team: decision.team,
                round: decision.round,
            });
        }
        let total = decision.budget_total();
        if total != Some(self.config.round_budget) {
            return Err(SimError::BudgetMismatch {
                expected: self.config.round_budget,
                got: total,
            });
        }
        if self.config.device(&decision.chosen_device).is_none() {
            return Err(SimError::UnknownDevice(decision.chosen_device));
        }
        self.pending.insert(decision.team.clone(), decision);
        Ok(())
    }

    /// Batches the round's decisions, commits the reports and advances.
    pub fn close_round(&mut self) -> Result<RoundSummary, SimError> {
        if self.complete {
            return Err(SimError::SimulationComplete);
        }
        let missing = self.missing_teams();
        if !missing.is_empty() {
            return Err(SimError::MissingDecisions(missing));
        }
        let round = self.current_round;
        let decisions: Vec<RoundDecision> = self.pending.values().cloned().collect();
        let batch = scaling::execute_batch_offchain(&self.config, &self.latest, round, &decisions)?;
        let params = CommitParams {
            committer: admin_address(),
            contract: self.contract,
            gas_price: self.profile.chain_gas_price(),
            gas_limit: SIM_GAS_LIMIT,
        };
        let commit = scaling::commit_rollup(&mut self.chain, &batch, params)?;
        let finality = self.finality.record(round, commit.submitted_at, commit.finalized_at)?;

        for (report, (tx, receipt)) in batch
            .reports
            .iter()
            .zip(commit.transactions.iter().zip(&commit.receipts))
        {
            self.records.insert(
                (round, report.team.clone()),
                ReportRecord {
                    report: report.clone(),
                    gas_used: receipt.gas_used,
                    fee_wei: receipt.fee(tx.gas_price),
                },
            );
            self.latest.insert(report.team.clone(), report.clone());
        }
        self.pending.clear();

        let summary = RoundSummary {
            round,
            height: commit.height,
            block_hash: commit.block_hash,
            batch_digest: batch.batch_digest,
            reports: batch.reports,
            tx_count: commit.transactions.len(),
            gas_used: commit.gas_used(),
            finality,
        };
        self.summaries.push(summary.clone());
        if round >= self.config.last_round() {
            self.complete = true;
        } else {
            self.current_round += 1;
        }
        Ok(summary)
    }

    /// Plays every round with scripted agents.
    pub fn run_scripted(options: SimOptions) -> Result<Self, SimError> {
        let mut sim = Self::init(options)?;
        while !sim.complete {
            let round = sim.current_round;
            for team in sim.config.team_ids() {
                let decision = scripted_agent_decide(&sim.config, &team, round, sim.config.seed);
                sim.submit_decision(decision)?;
            }
            sim.close_round()?;
        }
        Ok(sim)
    }
}

/// Holds at most one simulation; a second init is refused.
#[derive(Debug, Default)]
pub struct SimulationSlot {
    inner: Option<Simulation>,
}

impl SimulationSlot {
    pub fn init(&mut self, options: SimOptions) -> Result<&mut Simulation, SimError> {
        if self.inner.is_some() {
            return Err(SimError::AlreadyInitialized);
        }
        Ok(self.inner.insert(Simulation::init(options)?))
    }

    pub fn restore(&mut self, sim: Simulation) -> Result<&mut Simulation, SimError> {
        if self.inner.is_some() {
            return Err(SimError::AlreadyInitialized);
        }
        Ok(self.inner.insert(sim))
    }

    pub fn get(&self) -> Result<&Simulation, SimError> {
        self.inner.as_ref().ok_or(SimError::NotInitialized)
    }

    pub fn get_mut(&mut self) -> Result<&mut Simulation, SimError> {
        self.inner.as_mut().ok_or(SimError::NotInitialized)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::VmError;

    fn options() -> SimOptions {
        SimOptions {
            consensus: ConsensusConfig::pow(4),
            ..SimOptions::default()
        }
    }

    fn decide_all(sim: &mut Simulation) {
        let round = sim.current_round();
        for team in sim.config().team_ids() {
            let d = scripted_agent_decide(sim.config(), &team, round, 7);
            sim.submit_decision(d).unwrap();
        }
    }

    #[test]
    fn init_deploys_contract_and_accounts() {
        let sim = Simulation::init(options()).unwrap();
        let contract = sim.chain().state().contract(&sim.contract()).unwrap();
        assert_eq!(contract.storage.len(), 3);
        for team in sim.config().team_ids() {
            assert!(sim.chain().state().account(&team_address(&team)).is_some());
        }
        assert_eq!(sim.current_round(), 1);
        assert_eq!(sim.chain().height(), 1);
    }

    #[test]
    fn second_init_refused() {
        let mut slot = SimulationSlot::default();
        slot.init(options()).unwrap();
        assert!(matches!(slot.init(options()), Err(SimError::AlreadyInitialized)));
    }

    #[test]
    fn decision_validation() {
        let mut sim = Simulation::init(options()).unwrap();
        let good = scripted_agent_decide(sim.config(), "team-1", 1, 7);

        let mut wrong_round = good.clone();
        wrong_round.round = 2;
        assert!(matches!(
            sim.submit_decision(wrong_round),
            Err(SimError::WrongRound { expected: 1, got: 2 })
        ));

        let mut stranger = good.clone();
        stranger.team = "team-9".into();
        assert!(matches!(sim.submit_decision(stranger), Err(SimError::UnknownTeam(_))));

        let mut short = good.clone();
        let social = short.budgets.get_mut(&Platform::Social).unwrap();
        *social = if social.raw() > 0 {
            Fixed::from_raw(social.raw() - 1)
        } else {
            Fixed::from_raw(1)
        };
        assert!(matches!(
            sim.submit_decision(short),
            Err(SimError::BudgetMismatch { .. })
        ));

        let mut gadget = good.clone();
        gadget.chosen_device = "toaster".into();
        assert!(matches!(sim.submit_decision(gadget), Err(SimError::UnknownDevice(_))));

        sim.submit_decision(good.clone()).unwrap();
        assert!(matches!(
            sim.submit_decision(good),
            Err(SimError::DuplicateDecision { .. })
        ));
    }

    #[test]
    fn close_needs_every_team() {
        let mut sim = Simulation::init(options()).unwrap();
        let d = scripted_agent_decide(sim.config(), "team-1", 1, 7);
        sim.submit_decision(d).unwrap();
        match sim.close_round() {
            Err(SimError::MissingDecisions(teams)) => assert_eq!(teams, ["team-2", "team-3"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_close_commits_reports_on_chain() {
        let mut sim = Simulation::init(options()).unwrap();
        decide_all(&mut sim);
        let summary = sim.close_round().unwrap();
        assert_eq!(summary.tx_count, 4);
        assert_eq!(sim.chain().head().transactions.len(), 4);
        assert_eq!(sim.current_round(), 2);
        for r in &summary.reports {
            assert_eq!(sim.report(&r.team, 1).as_ref(), Some(r));
        }
        let stored =
            scaling::read_batch_digest(sim.chain().state(), sim.chain().registry(), sim.contract(), 1).unwrap();
        assert_eq!(stored, Some(scaling::batch_digest(&summary.reports)));
    }

    #[test]
    fn recommit_of_a_round_is_immutable_overwrite() {
        let mut sim = Simulation::init(options()).unwrap();
        decide_all(&mut sim);
        let decisions: Vec<_> = sim.pending.values().cloned().collect();
        sim.close_round().unwrap();
        let batch = scaling::execute_batch_offchain(sim.config(), &BTreeMap::new(), 1, &decisions).unwrap();
        let params = CommitParams {
            committer: admin_address(),
            contract: sim.contract(),
            gas_price: 1,
            gas_limit: SIM_GAS_LIMIT,
        };
        let err = scaling::commit_rollup(&mut sim.chain, &batch, params).unwrap_err();
        assert_eq!(
            err.contract_code(),
            Some(VmError::ImmutableOverwrite { key: String::new() }.code())
        );
    }

    #[test]
    fn full_run_has_fifteen_rounds() {
        let sim = Simulation::run_scripted(options()).unwrap();
        assert!(sim.is_complete());
        assert_eq!(sim.summaries().len(), 15);
        assert_eq!(sim.finality().len(), 15);
        assert_eq!(sim.report_records().count(), 45);
        assert_eq!(sim.committed_rounds(), 15);
        assert!(matches!(
            Simulation::run_scripted(options()).map(|mut s| s.close_round()),
            Ok(Err(SimError::SimulationComplete))
        ));
    }

    #[test]
    fn metrics_are_monotone_per_team() {
        let sim = Simulation::run_scripted(options()).unwrap();
        for team in sim.config().team_ids() {
            let mut prev = ActivityReport::baseline(&team, &sim.config().benchmarks);
            for round in 1..=15 {
                let r = sim.report(&team, round).unwrap();
                for m in Metric::ALL {
                    assert!(r.get(m) >= prev.get(m));
                }
                prev = r;
            }
        }
    }

    #[test]
    fn resume_restores_progress() {
        let mut sim = Simulation::init(options()).unwrap();
        for _ in 0..3 {
            decide_all(&mut sim);
            sim.close_round().unwrap();
        }
        let ledger = sim.chain().ledger().clone();
        let resumed = Simulation::resume(options(), ledger).unwrap();
        assert_eq!(resumed.current_round(), 4);
        assert_eq!(resumed.contract(), sim.contract());
        assert_eq!(
            resumed.report_records().collect::<Vec<_>>(),
            sim.report_records().collect::<Vec<_>>()
        );
    }
}
