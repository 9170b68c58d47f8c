//! The ±1 sequence read off the hierarchy, and its block families.
//!
//! A position with `N = 0` carries a fair coin. A position with `N = l >= 1`
//! carries coordinate `J` of a centered level-`l` vector attached to its block;
//! the vector is keyed by the ordinal of the block's level-`l` 1-position.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hierarchy::{build_keyed, HierarchyWindow, PositionRecord, SamplerConfig};
use crate::measures::{pow6, LazyLevelVector, MeasureKind};
use crate::rng::{tag, Key};

/// The centered vector shared by every position of a level-`level` block.
pub fn block_vector(seed: Key, level: u32, block: i64) -> LazyLevelVector {
    LazyLevelVector::new(level, MeasureKind::Cen, seed.child(tag::CEN).child(level as u64).child_i(block))
        .expect("block levels are bounded by the level guard")
}

pub fn value_at(seed: Key, r: &PositionRecord) -> i8 {
    if r.n == 0 {
        if seed.child(tag::X0).coin(r.k) {
            -1
        } else {
            1
        }
    } else {
        // J < 6^N by construction, so the padding branch is never reached.
        debug_assert!(r.j < pow6(r.n));
        block_vector(seed, r.n, r.block).entry(r.j)
    }
}

/// X over a window of an already built hierarchy.
pub fn values(h: &HierarchyWindow, seed: Key) -> Vec<i8> {
    h.records().map(|r| value_at(seed, &r)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct PathSample {
    pub window: (i64, i64),
    pub seed: u64,
    pub x: Vec<i8>,
    pub records: Vec<PositionRecord>,
    #[serde(skip)]
    pub hierarchy: HierarchyWindow,
    #[serde(skip)]
    key: Key,
}

impl PathSample {
    pub fn key(&self) -> Key {
        self.key
    }

    pub fn x_at(&self, k: i64) -> i8 {
        self.x[(k - self.window.0) as usize]
    }

    pub fn record_at(&self, k: i64) -> &PositionRecord {
        &self.records[(k - self.window.0) as usize]
    }

    /// Path dump: `k, X, N, anchor, J`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.x.len() * 16 + 16);
        out.push_str("k,X,N,anchor,J\n");
        for (r, x) in self.records.iter().zip(&self.x) {
            let anchor = r.anchor.map(|a| a.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{}\n", r.k, x, r.n, anchor, r.j));
        }
        out
    }
}

pub fn sample_path(window: (i64, i64), config: &SamplerConfig) -> Result<PathSample> {
    sample_path_keyed(window, config, Key::from_seed(config.seed))
}

pub fn sample_path_keyed(window: (i64, i64), config: &SamplerConfig, key: Key) -> Result<PathSample> {
    let hierarchy = build_keyed(window, config, key)?;
    Ok(path_from(hierarchy, config.seed, key))
}

pub fn path_from(hierarchy: HierarchyWindow, seed: u64, key: Key) -> PathSample {
    let records: Vec<PositionRecord> = hierarchy.records().collect();
    let x = records.iter().map(|r| value_at(key, r)).collect();
    PathSample { window: hierarchy.window, seed, x, records, hierarchy, key }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Family {
    /// All positions of one level-`m` bracket with `N >= m`.
    E,
    /// A bracket whose positions all have `N = m` (singletons at `m = 0`).
    D,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub family: Family,
    pub level: u32,
    /// Left end of the defining bracket (the block's first member).
    pub start: i64,
    /// Right end of the bracket, the next level-`m` 1-position; excluded.
    pub end: i64,
    pub members: Vec<i64>,
}

impl Block {
    pub fn min(&self) -> i64 {
        self.members[0]
    }

    pub fn max(&self) -> i64 {
        *self.members.last().expect("blocks are nonempty")
    }
}

/// Complete blocks of each family inside a window.
#[derive(Clone, Debug, Default, Serialize)]
pub struct BlockDecomposition {
    pub window: (i64, i64),
    /// `d[m]`: complete D-blocks of level `m`, ordered.
    pub d: Vec<Vec<Block>>,
    /// `e[m]`: complete E-blocks of level `m`, ordered; `e[0]` is empty.
    pub e: Vec<Vec<Block>>,
    /// Brackets that meet the window but are cut off by it, per level.
    pub incomplete: Vec<usize>,
}

impl BlockDecomposition {
    pub fn top(&self) -> u32 {
        self.e.len().saturating_sub(1) as u32
    }
}

fn bracket_members(h: &HierarchyWindow, level: u32, start: i64, end: i64) -> Vec<i64> {
    (start..end).filter(|&k| h.n_at(k) >= level).collect()
}

/// Block families over the window. A bracket is complete when both of its
/// 1-positions are resolved and its members lie in the window.
pub fn decompose_blocks(h: &HierarchyWindow) -> BlockDecomposition {
    let (a, b) = h.window;
    let top = h.depth();
    let mut d = vec![Vec::new(); top as usize + 1];
    let mut e = vec![Vec::new(); top as usize + 1];
    let mut incomplete = vec![0usize; top as usize + 1];
    d[0] = (a..=b)
        .filter(|&k| h.n_at(k) == 0)
        .map(|k| Block { family: Family::D, level: 0, start: k, end: k + 1, members: vec![k] })
        .collect();
    for m in 1..=top {
        let ones = &h.ones(m).positions;
        for pair in ones.windows(2) {
            let (start, end) = (pair[0], pair[1]);
            if end <= a || start > b {
                continue;
            }
            if start < a || end - 1 > b {
                incomplete[m as usize] += 1;
                continue;
            }
            let members = bracket_members(h, m, start, end);
            let exact = members.iter().all(|&k| h.n_at(k) == m);
            let block = Block { family: Family::E, level: m, start, end, members };
            if exact {
                d[m as usize].push(Block { family: Family::D, ..block.clone() });
            }
            e[m as usize].push(block);
        }
    }
    BlockDecomposition { window: (a, b), d, e, incomplete }
}

/// The block of `D_0..D_{n-1}` or `E_n` containing `k`.
pub fn covering_block(h: &HierarchyWindow, n: u32, k: i64) -> Result<Block> {
    let depth = h.n_at(k);
    if depth == 0 {
        return Ok(Block { family: Family::D, level: 0, start: k, end: k + 1, members: vec![k] });
    }
    let m = depth.min(n);
    let ones = &h.ones(m).positions;
    let c = ones.partition_point(|&p| p <= k);
    if c == 0 || c == ones.len() {
        return Err(Error::IncompleteBlock(k));
    }
    let (start, end) = (ones[c - 1], ones[c]);
    let family = if depth < n { Family::D } else { Family::E };
    Ok(Block { family, level: m, start, end, members: bracket_members(h, m, start, end) })
}

#[derive(Clone, Debug, Serialize)]
pub struct Covering {
    pub level: u32,
    pub members: Vec<Block>,
}

impl Covering {
    /// Properties (i)-(iv): sizes `6^j`, disjointness, covers `set`, each member meets `set`.
    pub fn verify(&self, set: &BTreeSet<i64>) -> bool {
        let sizes_ok = self
            .members
            .iter()
            .all(|q| (0..=self.level).any(|j| q.members.len() as u128 == pow6(j)));
        let mut seen = BTreeSet::new();
        let disjoint = self.members.iter().flat_map(|q| &q.members).all(|k| seen.insert(*k));
        let covers = set.iter().all(|k| seen.contains(k));
        let meets = self.members.iter().all(|q| q.members.iter().any(|k| set.contains(k)));
        sizes_ok && disjoint && covers && meets
    }
}

/// The unique covering of `set` by `D_0..D_{n-1}` and `E_n` members meeting it.
pub fn covering_of(set: &BTreeSet<i64>, n: u32, h: &HierarchyWindow) -> Result<Covering> {
    if set.is_empty() || n == 0 {
        return Err(Error::invalid("covering needs a nonempty set and a positive level"));
    }
    let (lo, hi) = h.range;
    if let Some(k) = set.iter().find(|&&k| k < lo || k > hi) {
        return Err(Error::invalid(format!("position {k} outside resolved range")));
    }
    let mut members: Vec<Block> = Vec::new();
    for &k in set {
        if members.iter().any(|q| q.members.binary_search(&k).is_ok()) {
            continue;
        }
        members.push(covering_block(h, n, k)?);
    }
    members.sort_by_key(|q| q.start);
    Ok(Covering { level: n, members })
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockAuditRow {
    pub m: u32,
    pub min: i64,
    pub max: i64,
    pub sum: i64,
    pub product: i8,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockAudit {
    pub blocks: Vec<BlockAuditRow>,
    pub failures: Vec<String>,
    pub pass: bool,
}

impl BlockAudit {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.blocks).expect("audit rows serialize")
    }
}

/// Checks the content of every complete `D_m` block (m >= 1) and the shape of every `E_m` block.
pub fn audit_block_contents(path: &PathSample, blocks: &BlockDecomposition) -> BlockAudit {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let h = &path.hierarchy;
    for (m, family) in blocks.d.iter().enumerate().skip(1) {
        let m = m as u32;
        for blk in family {
            let xs: Vec<i8> = blk.members.iter().map(|&k| path.x_at(k)).collect();
            let sum: i64 = xs.iter().map(|&x| x as i64).sum();
            let product = xs.iter().product::<i8>();
            let expected_product = if m == 1 { -1 } else { 1 };
            let mut pass = sum == 0 && product == expected_product && xs.len() as u128 == pow6(m);
            let ordinal = h.ones(m).ordinal_of(blk.start).expect("block start is a 1-position");
            let vector = block_vector(path.key(), m, ordinal);
            for (v, &k) in blk.members.iter().enumerate() {
                let r = path.record_at(k);
                if r.j != v as u128 || r.anchor != Some(blk.start) || vector.entry(v as u128) != xs[v] {
                    pass = false;
                }
            }
            if !pass {
                failures.push(format!("D_{m} block at {}..{} (sum {sum}, product {product})", blk.min(), blk.max()));
            }
            rows.push(BlockAuditRow { m, min: blk.min(), max: blk.max(), sum, product, pass });
        }
    }
    for (m, family) in blocks.e.iter().enumerate().skip(1) {
        let m = m as u32;
        for blk in family {
            if blk.members.len() as u128 != pow6(m) {
                failures.push(format!("E_{m} block at {} has {} members", blk.start, blk.members.len()));
            }
            if blk.members.iter().enumerate().any(|(v, &k)| h.j_at(k) % pow6(m) != v as u128) {
                failures.push(format!("E_{m} block at {} is not ranked 0..6^{m}", blk.start));
            }
            if m >= 2 {
                let children: Vec<&Block> = blocks.e[m as usize - 1]
                    .iter()
                    .filter(|c| c.start >= blk.start && c.start < blk.end && h.n_at(c.start) >= m)
                    .collect();
                let ok = children.len() == 6
                    && children[0].start == blk.start
                    && children.iter().flat_map(|c| c.members.iter().copied()).eq(blk.members.iter().copied());
                if !ok {
                    failures.push(format!("E_{m} block at {} is not six E_{} blocks", blk.start, m - 1));
                }
            }
        }
    }
    for (m, family) in blocks.d.iter().enumerate() {
        for pair in family.windows(2) {
            if pair[0].max() >= pair[1].min() {
                failures.push(format!("D_{m} blocks at {} and {} overlap", pair[0].start, pair[1].start));
            }
        }
    }
    let pass = failures.is_empty();
    BlockAudit { blocks: rows, failures, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(seed: u64) -> PathSample {
        sample_path((0, 20_000), &SamplerConfig::fast(seed)).unwrap()
    }

    #[test]
    fn values_are_signs_and_deterministic() {
        let p = sample(4);
        assert!(p.x.iter().all(|&x| x == 1 || x == -1));
        let q = sample(4);
        assert_eq!(p.x, q.x);
        assert_eq!(p.to_csv(), q.to_csv());
    }

    #[test]
    fn blocks_pass_audit() {
        for seed in 0..4 {
            let p = sample(seed);
            let blocks = decompose_blocks(&p.hierarchy);
            assert!(!blocks.d[1].is_empty());
            let audit = audit_block_contents(&p, &blocks);
            assert!(audit.pass, "{:?}", audit.failures);
        }
    }

    #[test]
    fn d_blocks_partition_depth_sets() {
        let p = sample(11);
        let blocks = decompose_blocks(&p.hierarchy);
        for (m, family) in blocks.d.iter().enumerate() {
            for blk in family {
                assert!(blk.members.iter().all(|&k| p.hierarchy.n_at(k) == m as u32));
            }
        }
        // Interior positions belong to exactly one member of D_0, D_1, E_2.
        let interior: Vec<i64> = blocks.e[2].iter().flat_map(|b| b.members.clone()).collect();
        assert!(!interior.is_empty());
    }

    #[test]
    fn singleton_covering() {
        let p = sample(2);
        let k = (0..=20_000).find(|&k| p.hierarchy.n_at(k) == 0).unwrap();
        let c = covering_of(&BTreeSet::from([k]), 3, &p.hierarchy).unwrap();
        assert_eq!(c.members.len(), 1);
        assert_eq!(c.members[0].members, vec![k]);
    }

    #[test]
    fn covering_inside_d1_block() {
        let p = sample(3);
        let blocks = decompose_blocks(&p.hierarchy);
        let blk = &blocks.d[1][3];
        let set: BTreeSet<i64> = blk.members[1..4].iter().copied().collect();
        let c = covering_of(&set, 2, &p.hierarchy).unwrap();
        assert_eq!(c.members.len(), 1);
        assert_eq!(c.members[0].members, blk.members);
        assert!(c.verify(&set));
    }

    #[test]
    fn covering_reports_straddling_block() {
        let p = sample_path((0, 50), &SamplerConfig::fast(1)).unwrap();
        let h = &p.hierarchy;
        let k = (0..=50).find(|&k| h.n_at(k) >= 1 && h.ones(1).position_at(k).is_none());
        if let Some(k) = k {
            assert_eq!(covering_of(&BTreeSet::from([k]), 1, h).unwrap_err(), Error::IncompleteBlock(k));
        }
    }
}
