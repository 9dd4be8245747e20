//! Network fee profiles and per-round cost accounting.
//!
//! Fees and normalized gas are exact rationals: a fee factor of 1/3 has no
//! finite decimal form, and rounding before comparing would break the exact
//! 3× ratio between profiles. Decimal renderings are produced only for
//! display.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chain::{Chain, TxKind};
use crate::fixed::{Fixed, SCALE};
use crate::vm::ReportArgs;

pub type Rational = Ratio<u128>;

/// Normalized gas = gas × fee_factor / this.
pub const NORMALIZATION_DIVISOR: u128 = 100_000;
const WEI_PER_GWEI: u128 = 1_000_000_000;

/// Fee factor in `n/d` or plain decimal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeeFactor(pub Rational);

impl FromStr for FeeFactor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r = if let Some((n, d)) = s.split_once('/') {
            let n: u128 = n.trim().parse().map_err(|e| format!("fee factor numerator: {e}"))?;
            let d: u128 = d.trim().parse().map_err(|e| format!("fee factor denominator: {e}"))?;
            if d == 0 {
                return Err("fee factor denominator is zero".into());
            }
            Rational::new(n, d)
        } else {
            let f: Fixed = s.parse().map_err(|e| format!("fee factor: {e}"))?;
            Rational::new(f.raw() as u128, SCALE as u128)
        };
        if r.is_zero() {
            return Err("fee factor must be positive".into());
        }
        Ok(FeeFactor(r))
    }
}

impl fmt::Display for FeeFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&exact(&self.0))
    }
}

impl Serialize for FeeFactor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeeFactor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub name: String,
    pub gas_price_gwei: Fixed,
    pub fee_factor: FeeFactor,
    /// Derived from published figures rather than measured.
    #[serde(default)]
    pub predicted: bool,
}

impl NetworkProfile {
    pub fn ethereum() -> Self {
        Self {
            name: "ethereum".into(),
            gas_price_gwei: Fixed::from_raw(158_000),
            fee_factor: FeeFactor(Rational::one()),
            predicted: false,
        }
    }

    pub fn polkadot() -> Self {
        Self {
            name: "polkadot".into(),
            fee_factor: FeeFactor(Rational::new(1, 3)),
            predicted: true,
            ..Self::ethereum()
        }
    }

    pub fn cardano() -> Self {
        Self {
            name: "cardano".into(),
            fee_factor: FeeFactor(Rational::new(1, 3)),
            predicted: true,
            ..Self::ethereum()
        }
    }

    pub fn defaults() -> Vec<Self> {
        vec![Self::ethereum(), Self::polkadot(), Self::cardano()]
    }

    pub fn find<'a>(profiles: &'a [Self], name: &str) -> Option<&'a Self> {
        profiles.iter().find(|p| p.name == name)
    }

    /// Effective price per gas in wei, exact.
    pub fn wei_per_gas(&self) -> Rational {
        Rational::new(self.gas_price_gwei.raw() as u128 * WEI_PER_GWEI, SCALE as u128) * self.fee_factor.0
    }

    /// Integer gas price for on-chain transactions, rounded half up.
    pub fn chain_gas_price(&self) -> u128 {
        round_half_up(&self.wei_per_gas())
    }

    pub fn basis(&self) -> &'static str {
        if self.predicted {
            "predicted"
        } else {
            "measured"
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxCost {
    pub fee_wei: Rational,
    pub normalized_gas: Rational,
}

pub fn tx_cost(gas_used: u64, profile: &NetworkProfile) -> TxCost {
    let gas = Rational::from_integer(gas_used as u128);
    TxCost {
        fee_wei: gas * profile.wei_per_gas(),
        normalized_gas: gas * profile.fee_factor.0 / Rational::from_integer(NORMALIZATION_DIVISOR),
    }
}

pub fn round_half_up(r: &Rational) -> u128 {
    let (n, d) = (r.numer(), r.denom());
    let q = n / d;
    if (n % d) * 2 >= *d {
        q + 1
    } else {
        q
    }
}

/// `n/d` in lowest terms, or `n` when whole.
pub fn exact(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with `places` digits, rounded half up.
pub fn decimal(r: &Rational, places: u32) -> String {
    let scale = 10u128.pow(places);
    let scaled = round_half_up(&(r * Rational::from_integer(scale)));
    if places == 0 {
        return scaled.to_string();
    }
    format!("{}.{:0width$}", scaled / scale, scaled % scale, width = places as usize)
}

/// One round under one profile. Averages are over the round's successful
/// report and batch commits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostRow {
    pub round: u64,
    pub profile: String,
    pub predicted: bool,
    pub tx_count: u64,
    pub report_count: u64,
    pub total_gas: u64,
    pub avg_normalized_gas: Rational,
    pub avg_fee_wei: Rational,
}

impl CostRow {
    /// Gas attributable to one team's record for the round: total gas
    /// (reports plus the batch digest) divided by the number of reports.
    pub fn record_gas(&self) -> Rational {
        if self.report_count == 0 {
            return Rational::zero();
        }
        Rational::new(self.total_gas as u128, self.report_count as u128)
    }
}

/// Per-round, per-profile average costs over every committed round.
pub fn cost_report(chain: &Chain, profiles: &[NetworkProfile]) -> Vec<CostRow> {
    // round -> (tx count, report count, gas)
    let mut rounds: BTreeMap<u64, (u64, u64, u64)> = BTreeMap::new();
    for block in chain.blocks() {
        for tx in &block.transactions {
            let TxKind::ContractCall { method, args, .. } = &tx.kind else {
                continue;
            };
            if method != "commit_report" && method != "commit_batch" {
                continue;
            }
            let Some(round) = ReportArgs::round_of(method, args) else {
                continue;
            };
            let Some(record) = chain.receipt(&tx.tx_id) else {
                continue;
            };
            if !record.receipt.is_success() {
                continue;
            }
            let entry = rounds.entry(round).or_default();
            entry.0 += 1;
            entry.1 += (method == "commit_report") as u64;
            entry.2 += record.receipt.gas_used;
        }
    }

    let mut rows = Vec::with_capacity(rounds.len() * profiles.len());
    for (round, (tx_count, report_count, total_gas)) in rounds {
        for profile in profiles {
            let cost = tx_cost(total_gas, profile);
            let n = Rational::from_integer(tx_count as u128);
            rows.push(CostRow {
                round,
                profile: profile.name.clone(),
                predicted: profile.predicted,
                tx_count,
                report_count,
                total_gas,
                avg_normalized_gas: cost.normalized_gas / n,
                avg_fee_wei: cost.fee_wei / n,
            });
        }
    }
    rows
}
