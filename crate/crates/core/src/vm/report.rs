//! `report_v1`: write-once storage for per-team activity reports.
//!
//! Storage layout (every `seg` is a `u32` big-endian length followed by the
//! bytes):
//!
//! | entry | key | value |
//! |-------|-----|-------|
//! | benchmark | `seg("benchmark") seg(metric)` | `u64` raw fixed-point |
//! | report | `seg("report") seg(team) u64(round) seg(metric)` | `u64` raw fixed-point |
//! | batch digest | `seg("batch") u64(round)` | 32-byte digest |
//!
//! Every entry is written at most once.

use crate::codec::{DecodeError, Decoder, Encoder};
use crate::fixed::Fixed;
use crate::types::Hash256;

use super::{CallContext, Handler, VmError};

pub const REPORT_HANDLER_ID: &str = "report_v1";

/// Metric name/value pairs with strictly ascending, non-empty names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricList(Vec<(String, Fixed)>);

impl MetricList {
    pub fn new(entries: Vec<(String, Fixed)>) -> Result<Self, String> {
        if entries.iter().any(|(name, _)| name.is_empty()) {
            return Err("empty metric name".into());
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err("metric names must be strictly ascending".into());
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[(String, Fixed)] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<Fixed> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `u32 count | (str name | u64 raw)*`
pub fn encode_metric_list(list: &MetricList) -> Vec<u8> {
    let mut enc = Encoder::new();
    write_metric_list(&mut enc, list);
    enc.finish()
}

fn write_metric_list(enc: &mut Encoder, list: &MetricList) {
    enc.u32(list.0.len() as u32);
    for (name, value) in &list.0 {
        enc.str(name).u64(value.raw());
    }
}

fn read_metric_list(dec: &mut Decoder<'_>) -> Result<MetricList, DecodeError> {
    let count = dec.u32()?;
    let mut entries = Vec::new();
    for _ in 0..count {
        let name = dec.str()?.to_string();
        let value = Fixed::from_raw(dec.u64()?);
        entries.push((name, value));
    }
    MetricList::new(entries).map_err(DecodeError::Invalid)
}

pub fn decode_metric_list(bytes: &[u8]) -> Result<MetricList, DecodeError> {
    let mut dec = Decoder::new(bytes);
    let list = read_metric_list(&mut dec)?;
    dec.finish()?;
    Ok(list)
}

fn seg(enc: &mut Encoder, part: &str) {
    enc.str(part);
}

pub fn benchmark_key(metric: &str) -> Vec<u8> {
    let mut enc = Encoder::new();
    seg(&mut enc, "benchmark");
    seg(&mut enc, metric);
    enc.finish()
}

pub fn report_prefix(team: &str, round: u64) -> Vec<u8> {
    let mut enc = Encoder::new();
    seg(&mut enc, "report");
    seg(&mut enc, team);
    enc.u64(round);
    enc.finish()
}

pub fn report_key(team: &str, round: u64, metric: &str) -> Vec<u8> {
    let mut key = report_prefix(team, round);
    let mut enc = Encoder::new();
    seg(&mut enc, metric);
    key.extend(enc.finish());
    key
}

pub fn batch_key(round: u64) -> Vec<u8> {
    let mut enc = Encoder::new();
    seg(&mut enc, "batch");
    enc.u64(round);
    enc.finish()
}

/// Argument encoders for the `report_v1` methods.
pub struct ReportArgs;

impl ReportArgs {
    /// `commit_report`: `str team | u64 round | metric list`
    pub fn commit(team: &str, round: u64, metrics: &MetricList) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.str(team).u64(round);
        write_metric_list(&mut enc, metrics);
        enc.finish()
    }

    /// `get_report`: `str team | u64 round`
    pub fn get(team: &str, round: u64) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.str(team).u64(round);
        enc.finish()
    }

    /// `commit_batch`: `u64 round | digest`
    pub fn commit_batch(round: u64, digest: &Hash256) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.u64(round).hash(digest);
        enc.finish()
    }

    /// `get_batch`: `u64 round`
    pub fn get_batch(round: u64) -> Vec<u8> {
        round.to_be_bytes().to_vec()
    }

    /// Round number carried by `commit_report`, `get_report`, `commit_batch`
    /// or `get_batch` arguments.
    pub fn round_of(method: &str, args: &[u8]) -> Option<u64> {
        let mut dec = Decoder::new(args);
        match method {
            "commit_report" | "get_report" => {
                dec.str().ok()?;
                dec.u64().ok()
            }
            "commit_batch" | "get_batch" => dec.u64().ok(),
            _ => None,
        }
    }

    /// Team named by `commit_report` / `get_report` arguments.
    pub fn team_of(method: &str, args: &[u8]) -> Option<String> {
        match method {
            "commit_report" | "get_report" => Decoder::new(args).str().ok().map(str::to_string),
            _ => None,
        }
    }
}

fn bad_args(e: DecodeError) -> VmError {
    VmError::InvalidArgs(e.to_string())
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ReportContract;

impl Handler for ReportContract {
    fn id(&self) -> &str {
        REPORT_HANDLER_ID
    }

    fn init(&self, ctx: &mut CallContext<'_>, payload: &[u8]) -> Result<Vec<u8>, VmError> {
        let benchmarks = decode_metric_list(payload).map_err(bad_args)?;
        for (name, value) in benchmarks.entries() {
            ctx.write_once(benchmark_key(name), value.raw().to_be_bytes().to_vec())?;
        }
        Ok(Vec::new())
    }

    fn call(&self, ctx: &mut CallContext<'_>, method: &str, args: &[u8]) -> Result<Vec<u8>, VmError> {
        let mut dec = Decoder::new(args);
        match method {
            "commit_report" => {
                let team = dec.str().map_err(bad_args)?.to_string();
                let round = dec.u64().map_err(bad_args)?;
                let metrics = read_metric_list(&mut dec).map_err(bad_args)?;
                dec.finish().map_err(bad_args)?;
                if metrics.is_empty() {
                    return Err(VmError::InvalidArgs("empty report".into()));
                }
                // Reject before any write so a partial report never lands.
                if let Some((name, _)) = metrics
                    .entries()
                    .iter()
                    .find(|(name, _)| ctx.contains(&report_key(&team, round, name)))
                {
                    return Err(VmError::ImmutableOverwrite {
                        key: format!("report/{team}/{round}/{name}"),
                    });
                }
                for (name, value) in metrics.entries() {
                    ctx.write_once(report_key(&team, round, name), value.raw().to_be_bytes().to_vec())?;
                }
                Ok(Vec::new())
            }
            "get_report" => {
                let team = dec.str().map_err(bad_args)?.to_string();
                let round = dec.u64().map_err(bad_args)?;
                dec.finish().map_err(bad_args)?;
                let prefix = report_prefix(&team, round);
                let entries = ctx.scan_prefix(&prefix)?;
                if entries.is_empty() {
                    return Err(VmError::NotFound(format!("report {team}/{round}")));
                }
                let mut list = Vec::with_capacity(entries.len());
                for (key, value) in entries {
                    let mut kd = Decoder::new(&key[prefix.len()..]);
                    let name = kd.str().map_err(bad_args)?.to_string();
                    let raw: [u8; 8] = value
                        .as_slice()
                        .try_into()
                        .map_err(|_| VmError::InvalidArgs("corrupt metric value".into()))?;
                    list.push((name, Fixed::from_raw(u64::from_be_bytes(raw))));
                }
                let list = MetricList::new(list).map_err(VmError::InvalidArgs)?;
                Ok(encode_metric_list(&list))
            }
            "commit_batch" => {
                let round = dec.u64().map_err(bad_args)?;
                let digest = dec.hash().map_err(bad_args)?;
                dec.finish().map_err(bad_args)?;
                ctx.write_once(batch_key(round), digest.as_bytes().to_vec())?;
                Ok(Vec::new())
            }
            "get_batch" => {
                let round = dec.u64().map_err(bad_args)?;
                dec.finish().map_err(bad_args)?;
                ctx.read(&batch_key(round))?
                    .ok_or_else(|| VmError::NotFound(format!("batch {round}")))
            }
            "get_benchmarks" => {
                dec.finish().map_err(bad_args)?;
                let prefix = {
                    let mut enc = Encoder::new();
                    seg(&mut enc, "benchmark");
                    enc.finish()
                };
                let mut list = Vec::new();
                for (key, value) in ctx.scan_prefix(&prefix)? {
                    let name = Decoder::new(&key[prefix.len()..]).str().map_err(bad_args)?.to_string();
                    let raw: [u8; 8] = value
                        .as_slice()
                        .try_into()
                        .map_err(|_| VmError::InvalidArgs("corrupt benchmark value".into()))?;
                    list.push((name, Fixed::from_raw(u64::from_be_bytes(raw))));
                }
                Ok(encode_metric_list(
                    &MetricList::new(list).map_err(VmError::InvalidArgs)?,
                ))
            }
            other => Err(VmError::UnknownMethod(other.to_string())),
        }
    }
}
