//! CSV and chain-file exports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::chain::{self, PersistError};
use crate::metrics::{decimal, exact, CostRow, FinalitySample, TpsReport};
use crate::scaling::ShardBench;
use crate::sim::{ReportRecord, Simulation};

pub const CHAIN_FILE: &str = "chain.jsonl";
pub const FINALITY_CSV: &str = "finality.csv";
pub const COSTS_CSV: &str = "costs.csv";
pub const REPORTS_CSV: &str = "reports.csv";
pub const TPS_CSV: &str = "tps.csv";
pub const SHARDS_CSV: &str = "shards.csv";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

fn finish<W: Write>(writer: csv::Writer<W>) -> Result<W, ExportError> {
    writer.into_inner().map_err(|e| ExportError::Io(e.into_error()))
}

pub fn finality_csv<W: Write>(out: W, samples: &[FinalitySample]) -> Result<W, ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "finality_ms"])?;
    for s in samples {
        w.write_record([s.round.to_string(), s.finality_ms.to_string()])?;
    }
    finish(w)
}

/// Rounded decimals for reading plus the exact rationals the ratios are
/// checked against.
pub fn costs_csv<W: Write>(out: W, rows: &[CostRow]) -> Result<W, ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "round",
        "profile",
        "avg_normalized_gas",
        "avg_fee_wei",
        "avg_normalized_gas_exact",
        "avg_fee_wei_exact",
        "basis",
    ])?;
    for r in rows {
        w.write_record([
            r.round.to_string(),
            r.profile.clone(),
            decimal(&r.avg_normalized_gas, 4),
            decimal(&r.avg_fee_wei, 0),
            exact(&r.avg_normalized_gas),
            exact(&r.avg_fee_wei),
            if r.predicted { "predicted" } else { "measured" }.to_string(),
        ])?;
    }
    finish(w)
}

pub fn reports_csv<'a, W: Write>(
    out: W,
    records: impl IntoIterator<Item = &'a ReportRecord>,
) -> Result<W, ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "team",
        "round",
        "likes",
        "post_engagement",
        "page_views",
        "gas_used",
        "fee_wei",
    ])?;
    for r in records {
        w.write_record([
            r.report.team.clone(),
            r.report.round.to_string(),
            r.report.likes.to_string(),
            r.report.post_engagement.to_string(),
            r.report.page_views.to_string(),
            r.gas_used.to_string(),
            r.fee_wei.to_string(),
        ])?;
    }
    finish(w)
}

pub fn tps_csv<W: Write>(out: W, reports: &[TpsReport]) -> Result<W, ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "tx_count",
        "difficulty_bits",
        "blocks",
        "elapsed_ms",
        "tps",
        "bitcoin_tps",
        "visa_tps",
    ])?;
    for r in reports {
        w.write_record([
            r.tx_count.to_string(),
            r.difficulty_bits.to_string(),
            r.blocks.to_string(),
            r.elapsed_ms.to_string(),
            r.tps.to_string(),
            r.reference.bitcoin.to_string(),
            r.reference.visa.to_string(),
        ])?;
    }
    finish(w)
}

pub fn shards_csv<W: Write>(out: W, benches: &[ShardBench]) -> Result<W, ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shard_count", "tx_count", "elapsed_ms", "tps"])?;
    for b in benches {
        w.write_record([
            b.shard_count.to_string(),
            b.tx_count.to_string(),
            b.elapsed_ms.to_string(),
            b.tps.to_string(),
        ])?;
    }
    finish(w)
}

fn to_file(path: &Path, bytes: Vec<u8>) -> Result<(), ExportError> {
    fs::write(path, bytes)?;
    Ok(())
}

/// Writes the chain file, finality.csv, costs.csv and reports.csv into
/// `dir`, creating it if needed. Returns the paths written.
pub fn export_simulation(sim: &Simulation, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    fs::create_dir_all(dir)?;
    let chain_path = dir.join(CHAIN_FILE);
    chain::persist(sim.chain().ledger(), &chain_path)?;
    let finality = dir.join(FINALITY_CSV);
    to_file(&finality, finality_csv(Vec::new(), sim.finality().samples())?)?;
    let costs = dir.join(COSTS_CSV);
    to_file(&costs, costs_csv(Vec::new(), &sim.cost_report())?)?;
    let reports = dir.join(REPORTS_CSV);
    to_file(&reports, reports_csv(Vec::new(), sim.report_records())?)?;
    Ok(vec![chain_path, finality, costs, reports])
}

pub fn write_tps(dir: &Path, reports: &[TpsReport]) -> Result<PathBuf, ExportError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(TPS_CSV);
    to_file(&path, tps_csv(Vec::new(), reports)?)?;
    Ok(path)
}

pub fn write_shards(dir: &Path, benches: &[ShardBench]) -> Result<PathBuf, ExportError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(SHARDS_CSV);
    to_file(&path, shards_csv(Vec::new(), benches)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::record_finality;

    #[test]
    fn finality_header_and_rows() {
        let samples = [record_finality(1, 10, 15).unwrap(), record_finality(2, 20, 20).unwrap()];
        let out = String::from_utf8(finality_csv(Vec::new(), &samples).unwrap()).unwrap();
        assert_eq!(out, "round,finality_ms\n1,5\n2,0\n");
    }
}
