use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

use tuplewise::hierarchy::SamplerConfig;
use tuplewise::process::{audit_block_contents, covering_of, decompose_blocks, sample_path, Block};
use tuplewise::stats::chi_square_homogeneity;

fn config(seed: u64) -> SamplerConfig {
    SamplerConfig { min_depth: 3, ..SamplerConfig::fast(seed) }
}

/// Every block of `D_0..D_{n-1}` and `E_n` that meets `set`, read off the
/// full decomposition rather than located position by position.
fn brute_force_covering(blocks: &[Block], set: &BTreeSet<i64>) -> Vec<(i64, i64, Vec<i64>)> {
    let mut picked: Vec<(i64, i64, Vec<i64>)> = blocks
        .iter()
        .filter(|q| q.members.iter().any(|k| set.contains(k)))
        .map(|q| (q.start, q.end, q.members.clone()))
        .collect();
    picked.sort();
    picked
}

#[test]
fn covering_matches_brute_force() {
    let window = (0, 60_000);
    let path = sample_path(window, &config(31)).unwrap();
    let h = &path.hierarchy;
    let decomposition = decompose_blocks(h);
    let mut rng = StdRng::seed_from_u64(5);
    for trial in 0..100 {
        let n = 1 + trial % 2;
        let family: Vec<Block> = (0..n as usize)
            .flat_map(|m| decomposition.d[m].iter().cloned())
            .chain(decomposition.e[n as usize].iter().cloned())
            .collect();
        // Keep the set well inside the window so every relevant bracket is complete.
        let size = rng.random_range(1..=6);
        let centre = rng.random_range(20_000..40_000);
        let set: BTreeSet<i64> = (0..size).map(|_| centre + rng.random_range(-300..300)).collect();
        let covering = covering_of(&set, n, h).unwrap();
        assert!(covering.verify(&set), "trial {trial}");
        let found: Vec<(i64, i64, Vec<i64>)> =
            covering.members.iter().map(|q| (q.start, q.end, q.members.clone())).collect();
        assert_eq!(found, brute_force_covering(&family, &set), "trial {trial}");
    }
}

#[test]
fn block_contents_on_several_seeds() {
    for seed in [1u64, 2, 3, 4] {
        let path = sample_path((0, 40_000), &config(seed)).unwrap();
        let audit = audit_block_contents(&path, &decompose_blocks(&path.hierarchy));
        assert!(audit.pass, "seed {seed}: {:?}", audit.failures.first());
        assert!(audit.blocks.iter().any(|r| r.m == 1));
    }
}

#[test]
fn marginal_and_lag_statistics_do_not_depend_on_offset() {
    // Pairwise and 4-wise independence make these counts binomial, so a
    // homogeneity test across offsets is valid on a single path.
    let len = 200_000i64;
    let cfg = SamplerConfig::fast(77);
    let mut tables: Vec<Vec<u64>> = Vec::new();
    for a in [-1_000_000i64, 0, 3_000_000] {
        let path = sample_path((a, a + len - 1), &cfg).unwrap();
        let mut counts = vec![0u64; 4];
        for w in path.x.windows(2) {
            let cell = usize::from(w[0] == 1) * 2 + usize::from(w[1] == 1);
            counts[cell] += 1;
        }
        tables.push(counts);
    }
    for other in &tables[1..] {
        let report = chi_square_homogeneity(&tables[0], other, 1e-3).unwrap();
        assert!(report.pass, "{report:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn path_values_are_signs_and_reproducible(seed in any::<u64>(), a in -50_000i64..50_000, len in 1i64..3_000, shift in 0i64..5_000) {
        let cfg = SamplerConfig::fast(seed);
        let small = sample_path((a, a + len - 1), &cfg).unwrap();
        let big = sample_path((a - shift, a + len - 1 + shift), &cfg).unwrap();
        for k in a..a + len {
            prop_assert!(small.x_at(k) == 1 || small.x_at(k) == -1);
            prop_assert_eq!(small.x_at(k), big.x_at(k));
            let (r, q) = (small.record_at(k), big.record_at(k));
            prop_assert_eq!((r.n, r.j, r.block), (q.n, q.j, q.block));
            // Without lookback a narrow window may leave the anchor unplaced.
            if let (Some(x), Some(y)) = (r.anchor, q.anchor) {
                prop_assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn complete_blocks_sum_to_zero(seed in any::<u64>()) {
        let path = sample_path((0, 20_000), &config(seed)).unwrap();
        let blocks = decompose_blocks(&path.hierarchy);
        for m in 1..blocks.d.len() {
            for q in &blocks.d[m] {
                let s: i64 = q.members.iter().map(|&k| i64::from(path.x_at(k))).sum();
                prop_assert_eq!(s, 0);
                prop_assert_eq!(q.members.len() as u128, 6u128.pow(m as u32));
            }
        }
        for m in 1..blocks.e.len() {
            for q in &blocks.e[m] {
                prop_assert_eq!(q.members.len() as u128, 6u128.pow(m as u32));
            }
        }
    }
}
