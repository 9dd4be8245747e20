use classchain_core::scaling::{apply_sequential, apply_sharded, partition, shard_of, ShardWorkload};
use classchain_core::vm::{GasSchedule, HandlerRegistry};
use classchain_core::Address;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn four_shards_match_shard_major_sequential() {
    let registry = HandlerRegistry::default();
    let schedule = GasSchedule::default();
    let w = ShardWorkload::build(10_000, 4, &registry, &schedule).unwrap();
    let parallel = apply_sharded(&w.genesis, &w.transactions, 4, &w.producer, &registry, &schedule).unwrap();
    let sequential = apply_sequential(&w.genesis, &w.transactions, 4, &w.producer, &registry, &schedule).unwrap();
    assert_eq!(parallel.digest(), sequential.digest());
    assert!(parallel.receipts.iter().all(|r| r.is_success()));

    let groups = partition(&w.transactions, 4).unwrap();
    for g in &groups {
        assert!((2_375..=2_625).contains(&g.len()), "occupancy {}", g.len());
    }
}

#[test]
fn random_addresses_balance_across_four_shards() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = [0usize; 4];
    for _ in 0..10_000 {
        let addr = Address::new(rng.random());
        counts[shard_of(&addr, 4).unwrap() as usize] += 1;
    }
    for c in counts {
        assert!((2_375..=2_625).contains(&c), "{counts:?}");
    }
}
