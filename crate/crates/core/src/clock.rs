//! Injected time sources. Block timestamps and finality samples only ever
//! read time through [`Clock`], never from the OS directly.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

pub trait Clock: Send + Sync {
    /// Milliseconds since the Unix epoch (or since an arbitrary origin for
    /// logical clocks).
    fn now_ms(&self) -> u64;

    /// Called by the miner with the number of hashes a seal took. Wall clocks
    /// ignore this; the logical clock turns it into elapsed time.
    fn charge_hashes(&self, _count: u64) {}
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

/// Deterministic clock for reproducible runs.
///
/// Time is kept in microseconds. Every `now_ms` read advances time by
/// `step_us`, and every mined hash advances it by `hash_cost_ns`, so mining
/// effort shows up as elapsed time without depending on the host machine.
#[derive(Debug)]
pub struct LogicalClock {
    micros: AtomicU64,
    nanos_carry: AtomicU64,
    step_us: u64,
    hash_cost_ns: u64,
}

impl LogicalClock {
    /// Default modeled cost of one header hash.
    pub const DEFAULT_HASH_COST_NS: u64 = 30_000;
    pub const DEFAULT_STEP_US: u64 = 1_000;

    pub fn new(start_ms: u64, step_us: u64, hash_cost_ns: u64) -> Self {
        Self {
            micros: AtomicU64::new(start_ms * 1_000),
            nanos_carry: AtomicU64::new(0),
            step_us,
            hash_cost_ns,
        }
    }

    /// A clock that never advances on its own.
    pub fn frozen(start_ms: u64) -> Self {
        Self::new(start_ms, 0, 0)
    }

    pub fn advance_ms(&self, ms: u64) {
        self.micros.fetch_add(ms * 1_000, Ordering::SeqCst);
    }
}

impl Default for LogicalClock {
    fn default() -> Self {
        Self::new(0, Self::DEFAULT_STEP_US, Self::DEFAULT_HASH_COST_NS)
    }
}

impl Clock for LogicalClock {
    fn now_ms(&self) -> u64 {
        let before = self.micros.fetch_add(self.step_us, Ordering::SeqCst);
        before / 1_000
    }

    fn charge_hashes(&self, count: u64) {
        let total_ns = self
            .nanos_carry
            .swap(0, Ordering::SeqCst)
            .saturating_add(count.saturating_mul(self.hash_cost_ns));
        self.micros.fetch_add(total_ns / 1_000, Ordering::SeqCst);
        self.nanos_carry.fetch_add(total_ns % 1_000, Ordering::SeqCst);
    }
}
