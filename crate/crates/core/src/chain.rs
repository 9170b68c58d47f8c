//! The six-state cyclic chain driven by keyed `{0,1}^6` columns, its spaced
//! process, exact samplers (uniform start, coupling from the past, literal
//! regeneration scan) and return-time collection.
//!
//! Indices are abstract: level 1 runs over integer positions, higher levels
//! run over anchor ordinals. Only the column key changes.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::coding::{chain_step, check_condition_s, Bit6, BasicCoder, IDENTITY_PATTERN};
use crate::error::{Error, Result};
use crate::measures::{ratio, Rational};
use crate::rng::{tag, Key};

/// Per-bit probability of a one.
pub fn bit_one_probability() -> Rational {
    ratio(3, 8)
}

/// Column at `index` under `key`. Each bit is one exactly when its three-bit
/// slice of the hash word is below 3, which gives probability 3/8 exactly.
#[inline]
pub fn column(key: Key, index: i64) -> Bit6 {
    let w = key.word(index);
    let mut m = 0u8;
    for i in 0..6 {
        if (w >> (3 * i)) & 7 < 3 {
            m |= 1 << i;
        }
    }
    Bit6::from_mask(m)
}

/// Column key for a level's chain.
pub fn level_key(seed: Key, level: u32) -> Key {
    seed.child(tag::XI).child(level as u64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMatrix {
    pub p: Vec<Vec<Rational>>,
}

impl TransitionMatrix {
    pub fn entry(&self, i: u8, j: u8) -> &Rational {
        &self.p[i as usize - 1][j as usize - 1]
    }

    pub fn rows_sum_to_one(&self) -> bool {
        self.p.iter().all(|row| row.iter().fold(Rational::zero(), |a, x| a + x) == Rational::one())
    }

    /// `pi * P` for a row vector `pi`.
    pub fn left_multiply(&self, pi: &[Rational]) -> Vec<Rational> {
        (0..6)
            .map(|j| (0..6).fold(Rational::zero(), |a, i| a + &pi[i] * &self.p[i][j]))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<String>> = self.p.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
        serde_json::to_string_pretty(&rows).expect("strings serialize")
    }
}

/// Exact transition law: every column value weighted by its probability,
/// pushed through `chain_step` from each state.
pub fn derive_transition_matrix() -> TransitionMatrix {
    let one = bit_one_probability();
    let zero = Rational::one() - &one;
    let mut p = vec![vec![Rational::zero(); 6]; 6];
    for mask in 0u8..64 {
        let beta = Bit6::from_mask(mask);
        let weight = (1..=6).fold(Rational::one(), |w, i| if beta.get(i) { w * &one } else { w * &zero });
        for s in 1..=6u8 {
            let t = chain_step(s, beta);
            p[s as usize - 1][t as usize - 1] += &weight;
        }
    }
    TransitionMatrix { p }
}

/// Probability that six given consecutive columns form the identity pattern.
pub fn pattern_probability() -> BigRational {
    let one = bit_one_probability();
    let zero = Rational::one() - &one;
    IDENTITY_PATTERN.iter().fold(Rational::one(), |acc, col| {
        (1..=6).fold(acc, |a, i| if col.get(i) { a * &one } else { a * &zero })
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainPath {
    /// Index of `states[0]`; the spaced symbols start one index later.
    pub start_index: i64,
    pub states: Vec<u8>,
    pub spaced: Vec<u8>,
}

impl ChainPath {
    pub fn from_states(start_index: i64, states: Vec<u8>) -> Self {
        let spaced = states.windows(2).map(|w| if w[1] != w[0] { w[1] } else { 0 }).collect();
        ChainPath { start_index, states, spaced }
    }

    pub fn first(&self) -> i64 {
        self.start_index + 1
    }

    pub fn last(&self) -> i64 {
        self.start_index + self.spaced.len() as i64
    }

    pub fn state_at(&self, k: i64) -> u8 {
        self.states[(k - self.start_index) as usize]
    }

    pub fn spaced_at(&self, k: i64) -> u8 {
        self.spaced[(k - self.start_index - 1) as usize]
    }

    /// Consecutive states differ by 0 or 1 modulo 6.
    pub fn increments_valid(&self) -> bool {
        self.states.windows(2).all(|w| (w[1] + 6 - w[0]) % 6 <= 1)
    }

    pub fn satisfies_condition_s(&self) -> bool {
        check_condition_s(&self.spaced).pass
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,U,W\n");
        for (i, &w) in self.spaced.iter().enumerate() {
            let k = self.first() + i as i64;
            out.push_str(&format!("{},{},{}\n", k, self.states[i + 1], w));
        }
        out
    }
}

fn check_window(a: i64, b: i64) -> Result<()> {
    if a > b {
        Err(Error::invalid(format!("empty window {a}:{b}")))
    } else {
        Ok(())
    }
}

/// States at `start+1 ..= end` reached from `state` at `start`.
pub fn fold_states(key: Key, start: i64, state: u8, end: i64) -> Vec<u8> {
    let mut out = Vec::with_capacity((end - start).max(0) as usize + 1);
    out.push(state);
    let mut s = state;
    for k in start + 1..=end {
        s = chain_step(s, column(key, k));
        out.push(s);
    }
    out
}

/// Uniform start at `a-1`, then the chain forward. Exact in law but keyed by
/// `a`, so extending the window changes the draw.
pub fn sample_stationary_path(a: i64, b: i64, seed: Key) -> Result<ChainPath> {
    check_window(a, b)?;
    let start: u8 = seed.child(tag::CHAIN_START).child_i(a).stream().random_range(1..=6);
    let key = level_key(seed, 1);
    Ok(ChainPath::from_states(a - 1, fold_states(key, a - 1, start, b)))
}

/// Advances the set of occupied states (bit `s-1` for state `s`) by one column.
#[inline]
fn step_set(set: u8, beta: Bit6) -> u8 {
    let b = beta.mask();
    // Bit i of `movers` is set when state i+1 is occupied and its successor's bit is one.
    let succ_bits = ((b >> 1) | (b << 5)) & 0x3f;
    let movers = set & succ_bits;
    let stay = set & !movers;
    let moved = ((movers << 1) | (movers >> 5)) & 0x3f;
    stay | moved
}

/// Coupling from the past: the common state at `target` of six chain copies
/// started in every state at `target - t`, doubling `t` until they agree.
pub fn cftp_state(key: Key, target: i64, budget: u64) -> Result<u8> {
    let mut span: u64 = 64.min(budget).max(1);
    loop {
        let mut set = 0x3fu8;
        for k in target - span as i64 + 1..=target {
            set = step_set(set, column(key, k));
        }
        if set.count_ones() == 1 {
            return Ok(set.trailing_zeros() as u8 + 1);
        }
        if span >= budget {
            return Err(Error::BudgetExceeded { what: "backward coalescence".into(), level: 0, limit: budget });
        }
        span = (span * 2).min(budget.max(64));
    }
}

/// The coalesced stationary path on `[a-1, b]`; values are a function of the
/// keyed columns alone, so overlapping windows agree exactly.
pub fn sample_stationary_path_cftp(a: i64, b: i64, seed: Key, budget: u64) -> Result<ChainPath> {
    check_window(a, b)?;
    let key = level_key(seed, 1);
    let start = cftp_state(key, a - 1, budget)?;
    Ok(ChainPath::from_states(a - 1, fold_states(key, a - 1, start, b)))
}

/// Greatest index `p <= before` at which an identity pattern ends.
pub fn find_pattern_end(key: Key, before: i64, budget: u64) -> Result<i64> {
    let last = IDENTITY_PATTERN[5];
    for p in (before - budget as i64 + 1..=before).rev() {
        if column(key, p) != last {
            continue;
        }
        if (1..6).all(|d| column(key, p - d) == IDENTITY_PATTERN[5 - d as usize]) {
            return Ok(p);
        }
    }
    Err(Error::BudgetExceeded { what: "identity-pattern scan".into(), level: 0, limit: budget })
}

/// Literal evaluation on `[from-1, to]`: locate the most recent pattern before
/// `from`, then run the anchored coder forward.
pub fn literal_states(key: Key, from: i64, to: i64, budget: u64) -> Result<Vec<u8>> {
    let anchor = find_pattern_end(key, from - 1, budget)?;
    let mut coder = BasicCoder::new();
    let mut out = Vec::with_capacity((to - from + 2) as usize);
    if anchor == from - 1 {
        out.push(coder.state());
    }
    for k in anchor + 1..=to {
        let (s, _) = coder.push(column(key, k));
        if k >= from - 1 {
            out.push(s);
        }
    }
    Ok(out)
}

pub fn literal_level1_sampler(a: i64, b: i64, scan_budget: u64, seed: Key) -> Result<ChainPath> {
    check_window(a, b)?;
    let states = literal_states(level_key(seed, 1), a, b, scan_budget)?;
    Ok(ChainPath::from_states(a - 1, states))
}

/// Gaps between consecutive positions where the spaced symbol is 1.
pub fn gaps_between_ones(spaced: &[u8]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut last: Option<usize> = None;
    for (i, &w) in spaced.iter().enumerate() {
        if w == 1 {
            if let Some(l) = last {
                out.push((i - l) as u64);
            }
            last = Some(i);
        }
    }
    out
}

/// Return times to symbol 1 along one stationary path of the given length.
pub fn return_time_samples(path_length: u64, seed: Key, budget: u64) -> Result<Vec<u64>> {
    let path = sample_stationary_path_cftp(1, path_length as i64, seed, budget)?;
    Ok(gaps_between_ones(&path.spaced))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PatternScan {
    pub positions: u64,
    /// `prefix_hits[m-1]`: positions where the last `m` columns equal the first
    /// `m` pattern columns.
    pub prefix_hits: [u64; 6],
}

impl PatternScan {
    pub fn full_matches(&self) -> u64 {
        self.prefix_hits[5]
    }
}

/// Sliding detector over `[first, first + count)`.
pub fn scan_patterns(key: Key, first: i64, count: u64) -> PatternScan {
    let mut scan = PatternScan { positions: count, ..Default::default() };
    let mut run = 0usize;
    for k in first..first + count as i64 {
        let c = column(key, k);
        run = if run < 6 && c == IDENTITY_PATTERN[run] {
            run + 1
        } else if c == IDENTITY_PATTERN[0] {
            1
        } else {
            0
        };
        if run > 0 {
            scan.prefix_hits[run - 1] += 1;
        }
    }
    scan
}
