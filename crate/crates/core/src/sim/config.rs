use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fixed::Fixed;
use crate::vm::MetricList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Search,
    Social,
    Display,
    Video,
}

impl Platform {
    pub const ALL: [Platform; 4] = [Platform::Search, Platform::Social, Platform::Display, Platform::Video];

    pub fn name(self) -> &'static str {
        match self {
            Platform::Search => "search",
            Platform::Social => "social",
            Platform::Display => "display",
            Platform::Video => "video",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Likes,
    PostEngagement,
    PageViews,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Likes, Metric::PostEngagement, Metric::PageViews];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Likes => "likes",
            Metric::PostEngagement => "post_engagement",
            Metric::PageViews => "page_views",
        }
    }

    /// Effectiveness of one unit of budget on `platform` for this metric,
    /// in raw fixed-point units (scale 10⁴).
    pub fn effectiveness(self, platform: Platform) -> Fixed {
        use Platform::*;
        let raw = match (self, platform) {
            (Metric::Likes, Social) => 10_000,
            (Metric::Likes, Video) => 5_000,
            (Metric::Likes, Search) => 1_000,
            (Metric::Likes, Display) => 2_000,
            (Metric::PostEngagement, Social) => 8_000,
            (Metric::PostEngagement, Video) => 8_000,
            (Metric::PostEngagement, Search) => 2_000,
            (Metric::PostEngagement, Display) => 2_000,
            (Metric::PageViews, Search) => 10_000,
            (Metric::PageViews, Display) => 6_000,
            (Metric::PageViews, Social) => 3_000,
            (Metric::PageViews, Video) => 3_000,
        };
        Fixed::from_raw(raw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecTier {
    Low,
    Mid,
    High,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub device_id: String,
    pub spec_tier: SpecTier,
    pub target_market: String,
    pub target_keywords: BTreeSet<String>,
}

impl DeviceSpec {
    fn new(id: &str, tier: SpecTier, market: &str, keywords: &[&str]) -> Self {
        Self {
            device_id: id.into(),
            spec_tier: tier,
            target_market: market.into(),
            target_keywords: keywords.iter().map(|k| k.to_string()).collect(),
        }
    }
}

/// Starting values of the three report metrics, identical for every team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Benchmarks {
    pub likes: Fixed,
    pub post_engagement: Fixed,
    pub page_views: Fixed,
}

impl Benchmarks {
    pub fn get(&self, metric: Metric) -> Fixed {
        match metric {
            Metric::Likes => self.likes,
            Metric::PostEngagement => self.post_engagement,
            Metric::PageViews => self.page_views,
        }
    }

    pub fn metric_list(&self) -> MetricList {
        metric_list(self.likes, self.post_engagement, self.page_views)
    }
}

impl Default for Benchmarks {
    fn default() -> Self {
        Self {
            likes: Fixed::from_int(100),
            post_engagement: Fixed::from_int(50),
            page_views: Fixed::from_int(200),
        }
    }
}

fn metric_list(likes: Fixed, post_engagement: Fixed, page_views: Fixed) -> MetricList {
    // Names in ascending byte order.
    MetricList::new(vec![
        ("likes".into(), likes),
        ("page_views".into(), page_views),
        ("post_engagement".into(), post_engagement),
    ])
    .expect("static names are sorted")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub team_count: u32,
    /// Iteration 0 is setup; rounds 1..total_rounds are played.
    pub total_rounds: u64,
    pub round_budget: Fixed,
    pub seed: u64,
    pub benchmarks: Benchmarks,
    pub device_catalog: Vec<DeviceSpec>,
    pub network_profile: String,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            team_count: 3,
            total_rounds: 16,
            round_budget: Fixed::from_int(10_000),
            seed: 0,
            benchmarks: Benchmarks::default(),
            device_catalog: default_catalog(),
            network_profile: "ethereum".into(),
        }
    }
}

pub fn default_catalog() -> Vec<DeviceSpec> {
    vec![
        DeviceSpec::new(
            "aurora-lite",
            SpecTier::Low,
            "budget",
            &["affordable", "battery", "value"],
        ),
        DeviceSpec::new(
            "aurora",
            SpecTier::Mid,
            "mainstream",
            &["camera", "display", "performance"],
        ),
        DeviceSpec::new(
            "aurora-pro",
            SpecTier::High,
            "premium",
            &["design", "flagship", "pro-camera"],
        ),
    ]
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.team_count == 0 {
            return Err("team_count must be at least 1".into());
        }
        if self.total_rounds < 2 {
            return Err("total_rounds must be at least 2 (setup plus one round)".into());
        }
        if self.round_budget == Fixed::ZERO {
            return Err("round_budget must be positive".into());
        }
        if self.device_catalog.len() != 3 {
            return Err(format!(
                "device_catalog must hold exactly 3 devices, found {}",
                self.device_catalog.len()
            ));
        }
        let ids: BTreeSet<_> = self.device_catalog.iter().map(|d| &d.device_id).collect();
        if ids.len() != self.device_catalog.len() {
            return Err("device ids must be unique".into());
        }
        Ok(())
    }

    pub fn team_ids(&self) -> Vec<String> {
        (1..=self.team_count).map(|i| format!("team-{i}")).collect()
    }

    pub fn device(&self, id: &str) -> Option<&DeviceSpec> {
        self.device_catalog.iter().find(|d| d.device_id == id)
    }

    /// Last round that is actually played.
    pub fn last_round(&self) -> u64 {
        self.total_rounds - 1
    }
}

/// One team's choices for one round. Kept off-chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundDecision {
    pub team: String,
    pub round: u64,
    pub chosen_device: String,
    pub budgets: BTreeMap<Platform, Fixed>,
    #[serde(default)]
    pub keywords: BTreeSet<String>,
}

impl RoundDecision {
    pub fn budget(&self, platform: Platform) -> Fixed {
        self.budgets.get(&platform).copied().unwrap_or(Fixed::ZERO)
    }

    pub fn budget_total(&self) -> Option<Fixed> {
        self.budgets
            .values()
            .try_fold(Fixed::ZERO, |acc, v| acc.checked_add(*v))
    }
}

/// Cumulative metrics for one team after one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityReport {
    pub team: String,
    pub round: u64,
    pub likes: Fixed,
    pub post_engagement: Fixed,
    pub page_views: Fixed,
}

impl ActivityReport {
    /// The round-0 report every team starts from.
    pub fn baseline(team: &str, benchmarks: &Benchmarks) -> Self {
        Self {
            team: team.to_string(),
            round: 0,
            likes: benchmarks.likes,
            post_engagement: benchmarks.post_engagement,
            page_views: benchmarks.page_views,
        }
    }

    pub fn get(&self, metric: Metric) -> Fixed {
        match metric {
            Metric::Likes => self.likes,
            Metric::PostEngagement => self.post_engagement,
            Metric::PageViews => self.page_views,
        }
    }

    pub fn metric_list(&self) -> MetricList {
        metric_list(self.likes, self.post_engagement, self.page_views)
    }

    pub fn from_metric_list(team: &str, round: u64, list: &MetricList) -> Option<Self> {
        if list.len() != 3 {
            return None;
        }
        Some(Self {
            team: team.to_string(),
            round,
            likes: list.get("likes")?,
            post_engagement: list.get("post_engagement")?,
            page_views: list.get("page_views")?,
        })
    }
}
