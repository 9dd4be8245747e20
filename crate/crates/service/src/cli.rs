use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use classchain_core::chain::{self, verify_chain};
use classchain_core::clock::{LogicalClock, SystemClock};
use classchain_core::consensus::{ConsensusConfig, ConsensusMode};
use classchain_core::export;
use classchain_core::metrics::{tps_benchmark, TpsConfig};
use classchain_core::scaling::{apply_sequential, sharded_throughput_bench, ShardWorkload};
use classchain_core::sim::{SimOptions, Simulation};
use classchain_core::vm::{GasSchedule, HandlerRegistry};
use tracing::info;

use crate::api::{router, AppState};
use crate::config::ServiceConfig;

#[derive(Debug, Parser)]
#[command(
    name = "classchain",
    version,
    about = "Classroom blockchain simulation: service, runner and benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Consensus {
    Pow,
    Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Agents {
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchMode {
    Tps,
    Shards,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        config: PathBuf,
        /// Loaded on start if present; written after every round and on shutdown.
        #[arg(long)]
        chain_file: Option<PathBuf>,
        #[arg(long, value_enum)]
        consensus: Option<Consensus>,
        #[arg(long)]
        difficulty: Option<u8>,
        #[arg(long)]
        profile: Option<String>,
    },
    /// Headless end-to-end run with scripted agents.
    Simulate {
        #[arg(long, default_value_t = 16)]
        rounds: u64,
        #[arg(long, default_value_t = 3)]
        teams: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Agents::Scripted)]
        agents: Agents,
        #[arg(long, default_value = "out")]
        export_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Consensus::Pow)]
        consensus: Consensus,
        #[arg(long, default_value_t = 12)]
        difficulty: u8,
        #[arg(long)]
        profile: Option<String>,
    },
    /// Throughput benchmarks.
    Bench {
        #[arg(long, value_enum)]
        mode: BenchMode,
        #[arg(long, default_value_t = 1_000)]
        txs: usize,
        #[arg(long, default_value_t = 4)]
        shards: u32,
        #[arg(long, default_value_t = 0)]
        difficulty: u8,
        #[arg(long, default_value = "out")]
        export_dir: PathBuf,
    },
    /// Check a chain file; exit status 1 if it is invalid.
    Verify {
        #[arg(long)]
        chain_file: PathBuf,
    },
}

fn consensus_config(mode: Consensus, difficulty: u8) -> ConsensusConfig {
    match mode {
        Consensus::Pow => ConsensusConfig::pow(difficulty),
        Consensus::Pos => ConsensusConfig::pos(),
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Serve {
            port,
            host,
            config,
            chain_file,
            consensus,
            difficulty,
            profile,
        } => {
            let mut cfg = ServiceConfig::load(&config)?;
            if let Some(mode) = consensus {
                cfg.consensus.mode = match mode {
                    Consensus::Pow => ConsensusMode::Pow,
                    Consensus::Pos => ConsensusMode::Pos,
                };
            }
            if let Some(bits) = difficulty {
                cfg.consensus.difficulty_bits = bits;
            }
            if let Some(p) = profile {
                cfg.simulation.network_profile = p;
            }
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad host/port")?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(cfg, addr, chain_file))
        }
        Command::Simulate {
            rounds,
            teams,
            seed,
            agents: Agents::Scripted,
            export_dir,
            config,
            consensus,
            difficulty,
            profile,
        } => {
            let mut cfg = match config {
                Some(path) => ServiceConfig::load(&path)?,
                None => ServiceConfig::default(),
            };
            cfg.simulation.total_rounds = rounds;
            cfg.simulation.team_count = teams;
            cfg.simulation.seed = seed;
            if let Some(p) = profile {
                cfg.simulation.network_profile = p;
            }
            simulate(&cfg, consensus_config(consensus, difficulty), &export_dir)
        }
        Command::Bench {
            mode,
            txs,
            shards,
            difficulty,
            export_dir,
        } => bench(mode, txs, shards, difficulty, &export_dir),
        Command::Verify { chain_file } => verify(&chain_file),
    }
}

pub fn simulate(cfg: &ServiceConfig, consensus: ConsensusConfig, export_dir: &Path) -> anyhow::Result<()> {
    let options = SimOptions {
        config: cfg.simulation.clone(),
        consensus,
        gas_schedule: cfg.gas_schedule,
        profiles: cfg.network_profiles.clone(),
        clock: Arc::new(LogicalClock::default()),
    };
    let sim = Simulation::run_scripted(options)?;
    let paths = export::export_simulation(&sim, export_dir)?;
    println!("rounds committed: {}", sim.committed_rounds());
    println!("reports on chain: {}", sim.report_records().count());
    println!("finality samples: {}", sim.finality().len());
    println!("blocks: {}", sim.chain().ledger().len());
    println!("head: {}", sim.chain().head().block_hash);
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn bench(mode: BenchMode, txs: usize, shards: u32, difficulty: u8, export_dir: &Path) -> anyhow::Result<()> {
    if txs == 0 {
        bail!("--txs must be at least 1");
    }
    match mode {
        BenchMode::Tps => {
            let report = tps_benchmark(
                txs,
                TpsConfig {
                    consensus: ConsensusConfig::pow(difficulty),
                    ..TpsConfig::default()
                },
            )?;
            println!(
                "{} txs at difficulty {}: {} ms, {} tx/s (bitcoin {}, visa {})",
                report.tx_count,
                report.difficulty_bits,
                report.elapsed_ms,
                report.tps,
                report.reference.bitcoin,
                report.reference.visa
            );
            let path = export::write_tps(export_dir, &[report])?;
            println!("wrote {}", path.display());
        }
        BenchMode::Shards => {
            let registry = HandlerRegistry::default();
            let schedule = GasSchedule::default();
            let mut rows = Vec::new();
            for count in if shards == 1 { vec![1] } else { vec![1, shards] } {
                let b = sharded_throughput_bench(txs, count, &registry, &schedule)?;
                println!(
                    "{} shards, {} txs: {} ms, {} tx/s, occupancy {:?}, digest {}",
                    b.shard_count, b.tx_count, b.elapsed_ms, b.tps, b.occupancy, b.state_digest
                );
                rows.push(b);
            }
            // same workload applied one tx at a time, shard-major
            let workload = ShardWorkload::build(txs, shards, &registry, &schedule)?;
            let seq = apply_sequential(
                &workload.genesis,
                &workload.transactions,
                shards,
                &workload.producer,
                &registry,
                &schedule,
            )?;
            let sharded = rows.last().expect("at least one run");
            if seq.digest() != sharded.state_digest {
                bail!(
                    "sharded state {} differs from sequential {}",
                    sharded.state_digest,
                    seq.digest()
                );
            }
            println!("sequential replay matches: {}", seq.digest());
            let path = export::write_shards(export_dir, &rows)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn verify(path: &Path) -> anyhow::Result<()> {
    let ledger = chain::load(path)?;
    let replay = verify_chain(&ledger, &HandlerRegistry::default(), &GasSchedule::default())?;
    let head = ledger.head().expect("verified ledger is non-empty");
    println!(
        "ok: {} blocks, head {}, state {}",
        ledger.len(),
        head.block_hash,
        replay.state.digest()
    );
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        if let Ok(mut s) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            s.recv().await;
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

pub async fn serve(cfg: ServiceConfig, addr: SocketAddr, chain_file: Option<PathBuf>) -> anyhow::Result<()> {
    cfg.consensus.validate()?;
    let options = SimOptions {
        config: cfg.simulation.clone(),
        consensus: cfg.consensus,
        gas_schedule: cfg.gas_schedule,
        profiles: cfg.network_profiles.clone(),
        clock: Arc::new(SystemClock),
    };
    let state = AppState::new(options.clone(), cfg.principals(), chain_file.clone());
    if let Some(path) = chain_file.as_ref().filter(|p| p.exists()) {
        let ledger = chain::load(path)?;
        if !ledger.is_empty() {
            let sim = Simulation::resume(options, ledger)?;
            info!(
                round = sim.current_round(),
                height = sim.chain().height(),
                "resumed from {}",
                path.display()
            );
            state.restore(sim)?;
        }
    }

    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    state.persist()?;
    info!("ledger persisted, bye");
    Ok(())
}
