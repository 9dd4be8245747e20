//! Finality samples, network fee profiles and throughput.

mod fees;
mod finality;
mod tps;

pub use fees::{
    cost_report, decimal, exact, round_half_up, tx_cost, CostRow, FeeFactor, NetworkProfile, Rational, TxCost,
    NORMALIZATION_DIVISOR,
};
pub use finality::{record_finality, FinalityLog, FinalitySample, MetricsError};
pub use tps::{tps_benchmark, ReferenceTps, TpsConfig, TpsReport, BITCOIN_TPS, VISA_TPS};
