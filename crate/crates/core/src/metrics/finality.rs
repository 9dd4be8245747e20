use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("round {round}: finalized at {finalized_at} ms, before submission at {submitted_at} ms")]
    NegativeDuration {
        round: u64,
        submitted_at: u64,
        finalized_at: u64,
    },
    #[error("round {got} recorded after round {last}")]
    RoundOrder { last: u64, got: u64 },
}

/// Time from submitting a round's rollup transactions to the block that
/// holds them being sealed. One block deep: there are no reorgs here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalitySample {
    pub round: u64,
    pub submitted_at: u64,
    pub finalized_at: u64,
    pub finality_ms: u64,
}

pub fn record_finality(round: u64, submitted_at: u64, finalized_at: u64) -> Result<FinalitySample, MetricsError> {
    let finality_ms = finalized_at
        .checked_sub(submitted_at)
        .ok_or(MetricsError::NegativeDuration {
            round,
            submitted_at,
            finalized_at,
        })?;
    Ok(FinalitySample {
        round,
        submitted_at,
        finalized_at,
        finality_ms,
    })
}

/// Per-round series, append-only, rounds strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalityLog {
    samples: Vec<FinalitySample>,
}

impl FinalityLog {
    pub fn record(&mut self, round: u64, submitted_at: u64, finalized_at: u64) -> Result<FinalitySample, MetricsError> {
        if let Some(last) = self.samples.last() {
            if round <= last.round {
                return Err(MetricsError::RoundOrder {
                    last: last.round,
                    got: round,
                });
            }
        }
        let sample = record_finality(round, submitted_at, finalized_at)?;
        self.samples.push(sample);
        Ok(sample)
    }

    pub fn samples(&self) -> &[FinalitySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_duration() {
        assert_eq!(record_finality(1, 500, 500).unwrap().finality_ms, 0);
    }

    #[test]
    fn negative_duration_rejected() {
        assert!(matches!(
            record_finality(1, 501, 500),
            Err(MetricsError::NegativeDuration { .. })
        ));
    }

    #[test]
    fn rounds_must_increase() {
        let mut log = FinalityLog::default();
        log.record(1, 0, 10).unwrap();
        assert_eq!(log.record(1, 0, 10), Err(MetricsError::RoundOrder { last: 1, got: 1 }));
        log.record(3, 10, 12).unwrap();
        assert_eq!(log.len(), 2);
    }
}
