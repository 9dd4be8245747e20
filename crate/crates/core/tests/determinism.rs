use std::fs;

use classchain_core::consensus::ConsensusConfig;
use classchain_core::export::export_simulation;
use classchain_core::sim::{SimOptions, Simulation, SimulationConfig};

fn exported(seed: u64) -> Vec<(String, Vec<u8>)> {
    let sim = Simulation::run_scripted(SimOptions {
        config: SimulationConfig {
            seed,
            ..SimulationConfig::default()
        },
        consensus: ConsensusConfig::pow(8),
        ..SimOptions::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_simulation(&sim, dir.path())
        .unwrap()
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn identical_seeds_give_identical_files() {
    let a = exported(42);
    let b = exported(42);
    assert_eq!(a.len(), 4);
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn different_seeds_diverge() {
    let a = exported(1);
    let b = exported(2);
    let reports = |v: &[(String, Vec<u8>)]| v.iter().find(|(n, _)| n == "reports.csv").unwrap().1.clone();
    assert_ne!(reports(&a), reports(&b));
}
