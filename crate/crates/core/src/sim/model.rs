//! Response model turning a round decision into report increments.
//!
//! For each metric `m`:
//!
//! ```text
//! increase_m = benchmark_m × (Σ_p eff(m, p) × budget_p) / round_budget × fit × (1 + kb)
//! ```
//!
//! `fit` is 1.2 when the chosen device's target market matches the round's
//! demand tag and 1.0 otherwise; `kb` is 0.1 when the decision's keywords
//! intersect the device's target keywords. The whole product is evaluated on
//! raw fixed-point integers and rounded half-up once, at the end.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::codec::Encoder;
use crate::fixed::{Fixed, SCALE};
use crate::types::sha256;

use super::config::{ActivityReport, Metric, Platform, RoundDecision, SimulationConfig};

pub const FIT_MATCH: Fixed = Fixed::from_raw(12_000);
pub const FIT_DEFAULT: Fixed = Fixed::ONE;
pub const KEYWORD_BONUS: Fixed = Fixed::from_raw(11_000);

/// Target market in demand this round: catalog entry
/// `u64(sha256(seed u64 | round u64)[0..8]) mod catalog_len`.
pub fn demand_tag(config: &SimulationConfig, round: u64) -> &str {
    let mut enc = Encoder::new();
    enc.u64(config.seed).u64(round);
    let digest = sha256(&enc.finish());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest.as_bytes()[..8]);
    let index = u64::from_be_bytes(head) % config.device_catalog.len() as u64;
    &config.device_catalog[index as usize].target_market
}

/// Multipliers applied to a decision: `(fit, keyword factor)`.
pub fn decision_factors(decision: &RoundDecision, config: &SimulationConfig) -> (Fixed, Fixed) {
    let Some(device) = config.device(&decision.chosen_device) else {
        return (FIT_DEFAULT, Fixed::ONE);
    };
    let fit = if device.target_market == demand_tag(config, decision.round) {
        FIT_MATCH
    } else {
        FIT_DEFAULT
    };
    let keyword = if decision.keywords.is_disjoint(&device.target_keywords) {
        Fixed::ONE
    } else {
        KEYWORD_BONUS
    };
    (fit, keyword)
}

fn round_half_up(numerator: BigUint, denominator: &BigUint) -> BigUint {
    let quotient = &numerator / denominator;
    let remainder = numerator % denominator;
    if remainder * 2u32 >= *denominator {
        quotient + 1u32
    } else {
        quotient
    }
}

/// Increase of one metric for `decision`.
pub fn metric_increase(metric: Metric, decision: &RoundDecision, config: &SimulationConfig) -> Fixed {
    let (fit, keyword) = decision_factors(decision, config);
    let weighted: BigUint = Platform::ALL
        .iter()
        .map(|p| BigUint::from(metric.effectiveness(*p).raw()) * decision.budget(*p).raw())
        .sum();
    let numerator = weighted * config.benchmarks.get(metric).raw() * fit.raw() * keyword.raw();
    let denominator = BigUint::from(config.round_budget.raw()) * SCALE * SCALE * SCALE;
    let raw = round_half_up(numerator, &denominator);
    Fixed::from_raw(raw.to_u64().unwrap_or(u64::MAX))
}

/// Next cumulative report for the team. Metrics only ever grow.
pub fn compute_report(prev: &ActivityReport, decision: &RoundDecision, config: &SimulationConfig) -> ActivityReport {
    let next = |metric: Metric| {
        let increase = metric_increase(metric, decision, config);
        Fixed::from_raw(prev.get(metric).raw().saturating_add(increase.raw()))
    };
    ActivityReport {
        team: decision.team.clone(),
        round: decision.round,
        likes: next(Metric::Likes),
        post_engagement: next(Metric::PostEngagement),
        page_views: next(Metric::PageViews),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::Benchmarks;
    use proptest::prelude::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn config() -> SimulationConfig {
        SimulationConfig {
            benchmarks: Benchmarks {
                likes: Fixed::from_int(100),
                post_engagement: Fixed::from_int(50),
                page_views: Fixed::from_int(200),
            },
            ..SimulationConfig::default()
        }
    }

    /// A round whose demand tag does not match `device`, so fit = 1.0.
    fn off_demand_round(cfg: &SimulationConfig, device: &str) -> u64 {
        let market = &cfg.device(device).unwrap().target_market;
        (1..100).find(|r| demand_tag(cfg, *r) != market).unwrap()
    }

    fn decision(round: u64, device: &str, budgets: &[(Platform, u64)], keywords: &[&str]) -> RoundDecision {
        RoundDecision {
            team: "team-1".into(),
            round,
            chosen_device: device.into(),
            budgets: budgets
                .iter()
                .map(|(p, v)| (*p, Fixed::from_int(*v)))
                .collect::<BTreeMap<_, _>>(),
            keywords: keywords.iter().map(|k| k.to_string()).collect::<BTreeSet<_>>(),
        }
    }

    /// Independent evaluation in exact rationals via f64-free integer math:
    /// benchmark × Σ eff×budget / R × fit × kb, with every factor a ratio of
    /// small integers.
    fn oracle_increase(
        benchmark_whole: u64,
        eff_tenths: &[(u64, u64)],
        round_budget: u64,
        fit_tenths: u64,
        kb_tenths: u64,
    ) -> Fixed {
        // Everything scaled to 10^4 raw units at the end.
        let weighted_tenths: u64 = eff_tenths.iter().map(|(e, b)| e * b).sum();
        let num = benchmark_whole as u128 * weighted_tenths as u128 * fit_tenths as u128 * kb_tenths as u128 * 10_000;
        let den = round_budget as u128 * 1_000;
        assert_eq!(num % den, 0, "oracle cases are chosen to divide exactly");
        Fixed::from_raw((num / den) as u64)
    }

    #[test]
    fn zero_effectiveness_leaves_metric_unchanged() {
        // No platform has zero effectiveness in the fixed table, so a zero
        // budget is the only way to contribute nothing.
        let mut cfg = config();
        cfg.benchmarks.page_views = Fixed::ZERO;
        let round = off_demand_round(&cfg, "aurora");
        let d = decision(round, "aurora", &[(Platform::Social, 10_000)], &[]);
        let prev = ActivityReport::baseline("team-1", &cfg.benchmarks);
        let next = compute_report(&prev, &d, &cfg);
        assert_eq!(next.page_views, prev.page_views);
    }

    #[test]
    fn all_social_adds_exactly_the_benchmark() {
        let cfg = config();
        let round = off_demand_round(&cfg, "aurora");
        let d = decision(round, "aurora", &[(Platform::Social, 10_000)], &[]);
        let prev = ActivityReport::baseline("team-1", &cfg.benchmarks);
        let next = compute_report(&prev, &d, &cfg);
        assert_eq!(next.likes.checked_sub(prev.likes).unwrap(), Fixed::from_int(100));
        assert_eq!(
            next.likes.checked_sub(prev.likes).unwrap(),
            oracle_increase(100, &[(10, 10_000)], 10_000, 10, 10)
        );
    }

    #[test]
    fn keyword_bonus_adds_ten_percent() {
        let cfg = config();
        let round = off_demand_round(&cfg, "aurora");
        let d = decision(round, "aurora", &[(Platform::Social, 10_000)], &["camera"]);
        let prev = ActivityReport::baseline("team-1", &cfg.benchmarks);
        let next = compute_report(&prev, &d, &cfg);
        assert_eq!(next.likes.checked_sub(prev.likes).unwrap(), Fixed::from_int(110));
    }

    #[test]
    fn demand_match_adds_twenty_percent() {
        let cfg = config();
        let round = 1;
        let market = demand_tag(&cfg, round).to_string();
        let device = cfg
            .device_catalog
            .iter()
            .find(|d| d.target_market == market)
            .unwrap()
            .device_id
            .clone();
        let d = decision(
            round,
            &device,
            &[(Platform::Search, 5_000), (Platform::Display, 5_000)],
            &[],
        );
        let prev = ActivityReport::baseline("team-1", &cfg.benchmarks);
        let next = compute_report(&prev, &d, &cfg);
        // page_views: 200 × (1.0×5000 + 0.6×5000)/10000 × 1.2 = 192
        assert_eq!(
            next.page_views.checked_sub(prev.page_views).unwrap(),
            oracle_increase(200, &[(10, 5_000), (6, 5_000)], 10_000, 12, 10)
        );
        assert_eq!(
            next.page_views.checked_sub(prev.page_views).unwrap(),
            Fixed::from_int(192)
        );
    }

    #[test]
    fn single_rounding_half_up() {
        // likes: benchmark 0.0001 with 0.5 of budget on social -> 0.00005 -> 0.0001
        let mut cfg = config();
        cfg.benchmarks.likes = Fixed::from_raw(1);
        let round = off_demand_round(&cfg, "aurora");
        let d = decision(
            round,
            "aurora",
            &[(Platform::Social, 5_000), (Platform::Search, 5_000)],
            &[],
        );
        // weighted = 1.0×5000 + 0.1×5000 = 5500 -> 0.0001 × 0.55 = 0.000055 -> 0.0001
        let inc = metric_increase(Metric::Likes, &d, &cfg);
        assert_eq!(inc, Fixed::from_raw(1));
    }

    #[test]
    fn demand_tag_is_a_catalog_market() {
        let cfg = config();
        for round in 1..16 {
            let tag = demand_tag(&cfg, round);
            assert!(cfg.device_catalog.iter().any(|d| d.target_market == tag));
            assert_eq!(tag, demand_tag(&cfg, round));
        }
    }

    proptest! {
        #[test]
        fn metrics_never_decrease(
            weights in proptest::collection::vec(0u64..10_000, 4),
            device in 0usize..3,
            round in 1u64..16,
        ) {
            let cfg = config();
            let total: u64 = weights.iter().sum::<u64>().max(1);
            let mut budgets = BTreeMap::new();
            let mut used = 0;
            for (i, p) in Platform::ALL.iter().enumerate() {
                let raw = if i == 3 { cfg.round_budget.raw() - used } else { cfg.round_budget.raw() * weights[i] / total };
                used += raw;
                budgets.insert(*p, Fixed::from_raw(raw));
            }
            let d = RoundDecision {
                team: "team-1".into(),
                round,
                chosen_device: cfg.device_catalog[device].device_id.clone(),
                budgets,
                keywords: BTreeSet::new(),
            };
            let prev = ActivityReport::baseline("team-1", &cfg.benchmarks);
            let next = compute_report(&prev, &d, &cfg);
            for m in Metric::ALL {
                prop_assert!(next.get(m) >= prev.get(m));
            }
            prop_assert_eq!(next.clone(), compute_report(&prev, &d, &cfg));
        }
    }
}
