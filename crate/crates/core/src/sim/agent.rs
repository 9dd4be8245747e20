//! Scripted stand-ins for students in headless runs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::Encoder;
use crate::fixed::Fixed;
use crate::types::sha256;

use super::config::{Platform, RoundDecision, SimulationConfig};

fn agent_rng(team: &str, round: u64, seed: u64) -> ChaCha8Rng {
    let mut enc = Encoder::new();
    enc.u64(seed).str(team).u64(round);
    ChaCha8Rng::from_seed(*sha256(&enc.finish()).as_bytes())
}

/// Splits `total` raw units across `weights` proportionally, handing leftover
/// units to the largest remainders (ties go to the earlier index). The parts
/// always sum to `total`.
pub fn largest_remainder(total: u64, weights: &[u64]) -> Vec<u64> {
    let weight_sum: u128 = weights.iter().map(|w| *w as u128).sum();
    if weight_sum == 0 {
        return largest_remainder(total, &vec![1; weights.len()]);
    }
    let mut parts = Vec::with_capacity(weights.len());
    let mut remainders = Vec::with_capacity(weights.len());
    for (i, w) in weights.iter().enumerate() {
        let exact = total as u128 * *w as u128;
        parts.push((exact / weight_sum) as u64);
        remainders.push((exact % weight_sum, i));
    }
    let leftover = total - parts.iter().sum::<u64>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in remainders.into_iter().take(leftover as usize) {
        parts[i] += 1;
    }
    parts
}

/// Deterministic, always-valid decision for `team` in `round`.
pub fn scripted_agent_decide(config: &SimulationConfig, team: &str, round: u64, seed: u64) -> RoundDecision {
    let mut rng = agent_rng(team, round, seed);
    let weights: Vec<u64> = Platform::ALL.iter().map(|_| rng.random_range(0..=100)).collect();
    let parts = largest_remainder(config.round_budget.raw(), &weights);
    let budgets: BTreeMap<Platform, Fixed> = Platform::ALL
        .iter()
        .zip(parts)
        .map(|(p, raw)| (*p, Fixed::from_raw(raw)))
        .collect();

    let device = &config.device_catalog[rng.random_range(0..config.device_catalog.len())];
    let pool: Vec<&String> = config
        .device_catalog
        .iter()
        .flat_map(|d| d.target_keywords.iter())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut keywords = BTreeSet::new();
    if !pool.is_empty() {
        let count = rng.random_range(1..=pool.len().min(3));
        for i in index::sample(&mut rng, pool.len(), count) {
            keywords.insert(pool[i].clone());
        }
    }

    RoundDecision {
        team: team.to_string(),
        round,
        chosen_device: device.device_id.clone(),
        budgets,
        keywords,
    }
}
