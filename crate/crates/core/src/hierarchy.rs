//! The level structure over a window.
//!
//! Level 1 is the spaced chain over integer positions. Level `u+1` runs its own
//! chain along the level-`u` 1-positions ("anchors"), numbered by ordinal with
//! the convention that ordinal 0 is the last anchor at or before position 0.
//! Columns of level `u+1` are keyed by that ordinal, so a level can be
//! evaluated at any anchor without touching the positions in between, and the
//! values never depend on the window that asked for them.
//!
//! Per position the builder climbs the levels: `delta(1) = W1(k)`, and
//! `delta(u)` is the level-`u` symbol at the most recent level-`(u-1)` anchor.
//! `N(k)` is the number of leading nonzero deltas and `J` packs them in base 6.

use serde::Serialize;

use crate::chain::{cftp_state, fold_states, level_key, literal_states};
use crate::coding::check_condition_s;
use crate::error::{Error, Result};
use crate::measures::pow6;
use crate::rng::{tag, Key};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Largest backward span tried by coupling from the past.
    pub backward_budget: u64,
    /// Deepest level that may be built; `N(k)` must stay below it.
    pub level_guard: u32,
    /// Largest resolved range, in positions.
    pub memory_guard: u64,
    /// Growth factor of the resolved range when anchors lie further left.
    pub extension_factor: u64,
    /// How far left of the window the builder may reach to place anchors.
    pub anchor_lookback: u64,
    /// Levels materialized even when no position needs them.
    pub min_depth: u32,
    /// Longest backward identity-pattern scan of the literal mode.
    pub scan_budget: u64,
    /// Levels evaluated by literal regeneration in `literal_build`.
    pub literal_depth: u32,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            backward_budget: 1 << 24,
            level_guard: 40,
            memory_guard: 1 << 27,
            extension_factor: 2,
            anchor_lookback: 1 << 20,
            min_depth: 1,
            scan_budget: 1 << 34,
            literal_depth: 2,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        SamplerConfig { seed, ..Default::default() }
    }

    /// Settings for bulk statistics: no anchor placement outside the window.
    pub fn fast(seed: u64) -> Self {
        SamplerConfig { seed, anchor_lookback: 0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.backward_budget == 0 || self.level_guard == 0 || self.memory_guard == 0 || self.scan_budget == 0 {
            return Err(Error::invalid("guards must be positive"));
        }
        if self.level_guard > 48 {
            return Err(Error::invalid("level guard above 48 overflows block coordinates"));
        }
        if self.extension_factor < 2 {
            return Err(Error::invalid("extension factor must be at least 2"));
        }
        if self.min_depth > self.level_guard {
            return Err(Error::invalid("depth exceeds the level guard"));
        }
        Ok(())
    }
}

/// 1-positions of one level inside the resolved range, with their ordinals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Anchors {
    pub positions: Vec<i64>,
    /// Ordinal of `positions[0]`.
    pub first_ordinal: i64,
}

impl Anchors {
    fn new(positions: Vec<i64>) -> Self {
        let at_or_before_zero = positions.partition_point(|&p| p <= 0) as i64;
        Anchors { positions, first_ordinal: 1 - at_or_before_zero }
    }

    /// Ordinal of the most recent anchor at or before `k` (for `k` in range).
    pub fn ordinal_at(&self, k: i64) -> i64 {
        self.first_ordinal - 1 + self.positions.partition_point(|&p| p <= k) as i64
    }

    /// Position of the most recent anchor at or before `k`, if it lies in range.
    pub fn position_at(&self, k: i64) -> Option<i64> {
        let c = self.positions.partition_point(|&p| p <= k);
        (c > 0).then(|| self.positions[c - 1])
    }

    pub fn ordinal_of(&self, position: i64) -> Option<i64> {
        self.positions.binary_search(&position).ok().map(|i| self.first_ordinal + i as i64)
    }

    pub fn count_in(&self, a: i64, b: i64) -> usize {
        self.positions.partition_point(|&p| p <= b) - self.positions.partition_point(|&p| p < a)
    }
}

/// Symbols of level `level` along the ordinals of the level below.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelState {
    pub level: u32,
    /// Ordinal of `symbols[0]`; for level 1 ordinals are positions.
    pub first_ordinal: i64,
    pub symbols: Vec<u8>,
    /// This level's 1-positions inside the resolved range.
    pub ones: Anchors,
}

impl LevelState {
    pub fn symbol_at_ordinal(&self, o: i64) -> u8 {
        self.symbols[(o - self.first_ordinal) as usize]
    }

    pub fn satisfies_condition_s(&self) -> bool {
        check_condition_s(&self.symbols).pass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PositionRecord {
    pub k: i64,
    pub n: u32,
    /// Most recent level-`n` 1-position, when it lies in the resolved range.
    pub anchor: Option<i64>,
    pub j: u128,
    /// Ordinal of the anchor among level-`n` 1-positions; identifies the block.
    pub block: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HierarchyWindow {
    pub window: (i64, i64),
    /// Resolved range; always contains the window and position 0.
    pub range: (i64, i64),
    pub levels: Vec<LevelState>,
    n: Vec<u8>,
    j: Vec<u128>,
    block: Vec<i64>,
}

#[derive(Clone, Copy, Debug)]
enum Evaluator {
    Chain,
    Literal,
}

impl HierarchyWindow {
    fn idx(&self, k: i64) -> usize {
        assert!(k >= self.range.0 && k <= self.range.1, "position {k} outside resolved range");
        (k - self.range.0) as usize
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn level(&self, u: u32) -> &LevelState {
        &self.levels[u as usize - 1]
    }

    /// 1-positions of level `u` (all positions for `u = 0` are not listed).
    pub fn ones(&self, u: u32) -> &Anchors {
        &self.level(u).ones
    }

    pub fn n_at(&self, k: i64) -> u32 {
        self.n[self.idx(k)] as u32
    }

    pub fn j_at(&self, k: i64) -> u128 {
        self.j[self.idx(k)]
    }

    /// `W(u)` at position `k`; zero above the built levels.
    pub fn symbol(&self, u: u32, k: i64) -> u8 {
        if u == 0 {
            return 1;
        }
        if u as usize > self.levels.len() {
            return 0;
        }
        let lv = self.level(u);
        if u == 1 {
            return lv.symbol_at_ordinal(k);
        }
        match self.ones(u - 1).ordinal_of(k) {
            Some(o) => lv.symbol_at_ordinal(o),
            None => 0,
        }
    }

    /// `delta(u)` at `k`: the level-`u` symbol at the most recent level-`(u-1)` anchor.
    pub fn delta(&self, u: u32, k: i64) -> u8 {
        if u == 1 {
            return self.symbol(1, k);
        }
        if u as usize > self.levels.len() {
            return 0;
        }
        let o = self.ones(u - 1).ordinal_at(k);
        self.level(u).symbol_at_ordinal(o)
    }

    /// Distance back to the most recent level-`u` 1-position, if it is in range.
    pub fn psi0(&self, u: u32, k: i64) -> Option<i64> {
        if u == 0 {
            return Some(0);
        }
        if u as usize > self.levels.len() {
            return None;
        }
        self.ones(u).position_at(k).map(|p| k - p)
    }

    pub fn resolve_position(&self, k: i64) -> Result<PositionRecord> {
        if k < self.window.0 || k > self.window.1 {
            return Err(Error::invalid(format!("position {k} outside window {}:{}", self.window.0, self.window.1)));
        }
        let i = self.idx(k);
        let n = self.n[i] as u32;
        let anchor = if n == 0 { Some(k) } else { self.ones(n).position_at(k) };
        Ok(PositionRecord { k, n, anchor, j: self.j[i], block: self.block[i] })
    }

    pub fn records(&self) -> impl Iterator<Item = PositionRecord> + '_ {
        (self.window.0..=self.window.1).map(|k| self.resolve_position(k).expect("window position"))
    }

    /// Levels whose chain is undetermined at `k` because all deltas so far are nonzero.
    pub fn deltas(&self, k: i64) -> Vec<u8> {
        (1..=self.n_at(k) + 1).map(|u| self.delta(u, k)).collect()
    }

    /// Window dump: `k, W1..Wd, N, anchor, J`.
    pub fn to_csv(&self, depth: u32) -> String {
        let mut out = String::from("k");
        for u in 1..=depth {
            out.push_str(&format!(",W{u}"));
        }
        out.push_str(",N,anchor,J\n");
        for r in self.records() {
            out.push_str(&r.k.to_string());
            for u in 1..=depth {
                out.push_str(&format!(",{}", self.symbol(u, r.k)));
            }
            let anchor = r.anchor.map(|a| a.to_string()).unwrap_or_default();
            out.push_str(&format!(",{},{},{}\n", r.n, anchor, r.j));
        }
        out
    }

    /// Checks the deterministic level invariants; returns the violations found.
    pub fn audit(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let (lo, hi) = self.range;
        for lv in &self.levels {
            if !lv.satisfies_condition_s() {
                bad.push(format!("level {} violates condition S along its carriers", lv.level));
            }
        }
        for u in 1..self.depth() {
            let lower = self.ones(u).positions.len();
            let upper = self.ones(u + 1).positions.len();
            if 6 * upper > 6 + lower {
                bad.push(format!("level {} has {upper} ones over {lower} level-{u} ones", u + 1));
            }
            // Higher-level ones must be lower-level ones.
            if let Some(p) = self.ones(u + 1).positions.iter().find(|p| self.ones(u).ordinal_of(**p).is_none()) {
                bad.push(format!("level {} one at {p} is not a level-{u} one", u + 1));
            }
        }
        for k in lo..=hi {
            let shape: Vec<u8> = (1..=self.depth() + 1).map(|u| self.symbol(u, k)).collect();
            if !valid_shape(&shape) {
                bad.push(format!("position {k} has level shape {shape:?}"));
            }
            let n = self.n_at(k);
            for u in 1..=n {
                if self.delta(u, k) == 0 {
                    bad.push(format!("position {k}: N = {n} but delta({u}) = 0"));
                }
            }
            if self.delta(n + 1, k) != 0 {
                bad.push(format!("position {k}: N = {n} but delta({}) != 0", n + 1));
            }
            if self.j_at(k) >= pow6(n) {
                bad.push(format!("position {k}: J = {} outside 0..6^{n}", self.j_at(k)));
            }
            for m in 1..=self.depth() {
                if self.symbol(m, k) == 1 && n < m {
                    bad.push(format!("position {k}: level-{m} one with N = {n}"));
                }
            }
        }
        bad
    }
}

/// `1^r`, then optionally one symbol in 2..=6 (or 1..=6 when r = 0 is covered by the run), then zeros.
pub fn valid_shape(seq: &[u8]) -> bool {
    let mut i = 0;
    while i < seq.len() && seq[i] == 1 {
        i += 1;
    }
    if i < seq.len() && (2..=6).contains(&seq[i]) {
        i += 1;
    }
    seq[i..].iter().all(|&w| w == 0)
}

fn level_states(eval: Evaluator, key: Key, level: u32, from: i64, to: i64, cfg: &SamplerConfig) -> Result<Vec<u8>> {
    let tag_level = |e: Error| match e {
        Error::BudgetExceeded { what, limit, .. } => Error::BudgetExceeded { what, level, limit },
        other => other,
    };
    match eval {
        Evaluator::Literal if level <= cfg.literal_depth => literal_states(key, from, to, cfg.scan_budget).map_err(tag_level),
        _ => {
            let start = cftp_state(key, from - 1, cfg.backward_budget).map_err(tag_level)?;
            Ok(fold_states(key, from - 1, start, to))
        }
    }
}

fn spaced(states: &[u8]) -> Vec<u8> {
    states.windows(2).map(|w| if w[1] != w[0] { w[1] } else { 0 }).collect()
}

fn build_range(window: (i64, i64), lo: i64, hi: i64, cfg: &SamplerConfig, seed: Key, eval: Evaluator) -> Result<HierarchyWindow> {
    let len = (hi - lo + 1) as usize;
    if len as u64 > cfg.memory_guard {
        return Err(Error::BudgetExceeded { what: "resolved range".into(), level: 0, limit: cfg.memory_guard });
    }
    let mut n = vec![0u8; len];
    let mut j = vec![0u128; len];

    // Level 1 over positions.
    let states = level_states(eval, level_key(seed, 1), 1, lo, hi, cfg)?;
    let w1 = spaced(&states);
    let ones1 = Anchors::new((lo..=hi).filter(|&k| w1[(k - lo) as usize] == 1).collect());
    let mut alive: Vec<i64> = Vec::new();
    for (i, &w) in w1.iter().enumerate() {
        if w != 0 {
            j[i] = (w - 1) as u128;
            alive.push(lo + i as i64);
        }
    }
    let mut levels = vec![LevelState { level: 1, first_ordinal: lo, symbols: w1, ones: ones1 }];

    let mut u = 2u32;
    while !alive.is_empty() || u <= cfg.min_depth {
        if u > cfg.level_guard {
            return Err(Error::BudgetExceeded { what: "level guard".into(), level: u, limit: cfg.level_guard as u64 });
        }
        let carriers = &levels.last().expect("level 1 exists").ones;
        let o_lo = carriers.ordinal_at(lo);
        let o_hi = carriers.ordinal_at(hi);
        let states = level_states(eval, level_key(seed, u), u, o_lo, o_hi, cfg)?;
        let symbols = spaced(&states);
        let ones = Anchors::new(
            carriers
                .positions
                .iter()
                .enumerate()
                .filter(|(i, _)| symbols[(carriers.first_ordinal + *i as i64 - o_lo) as usize] == 1)
                .map(|(_, &p)| p)
                .collect(),
        );
        let weight = pow6(u - 1);
        let mut still = Vec::with_capacity(alive.len() / 2);
        for &k in &alive {
            let i = (k - lo) as usize;
            let d = symbols[(carriers.ordinal_at(k) - o_lo) as usize];
            if d == 0 {
                n[i] = (u - 1) as u8;
            } else {
                j[i] += weight * (d - 1) as u128;
                still.push(k);
            }
        }
        alive = still;
        levels.push(LevelState { level: u, first_ordinal: o_lo, symbols, ones });
        u += 1;
    }

    let mut block = vec![0i64; len];
    for (i, b) in block.iter_mut().enumerate() {
        let m = n[i] as u32;
        *b = if m == 0 { lo + i as i64 } else { levels[m as usize - 1].ones.ordinal_at(lo + i as i64) };
    }
    Ok(HierarchyWindow { window, range: (lo, hi), levels, n, j, block })
}

fn unplaced_anchors(h: &HierarchyWindow) -> bool {
    (h.window.0..=h.window.1).any(|k| {
        let n = h.n_at(k);
        n > 0 && h.ones(n).position_at(k).is_none()
    })
}

fn build_impl(window: (i64, i64), cfg: &SamplerConfig, seed: Key, eval: Evaluator) -> Result<HierarchyWindow> {
    cfg.validate()?;
    let (a, b) = window;
    if a > b {
        return Err(Error::invalid(format!("empty window {a}:{b}")));
    }
    let hi = b.max(0);
    let floor = a.min(0);
    let mut lo = floor;
    loop {
        let h = build_range(window, lo, hi, cfg, seed, eval)?;
        let reach = (floor - lo) as u64;
        if reach >= cfg.anchor_lookback || !unplaced_anchors(&h) {
            return Ok(h);
        }
        let grow = ((hi - lo + 1) as u64 * (cfg.extension_factor - 1)).max(64);
        let reach = (reach + grow).min(cfg.anchor_lookback);
        if (hi - floor) as u64 + reach + 1 > cfg.memory_guard {
            return Ok(h);
        }
        lo = floor - reach as i64;
    }
}

/// Builds the hierarchy with every level evaluated by coupling from the past.
pub fn build(window: (i64, i64), config: &SamplerConfig) -> Result<HierarchyWindow> {
    build_impl(window, config, Key::from_seed(config.seed), Evaluator::Chain)
}

pub fn build_keyed(window: (i64, i64), config: &SamplerConfig, seed: Key) -> Result<HierarchyWindow> {
    build_impl(window, config, seed, Evaluator::Chain)
}

/// Same structure, but levels up to `literal_depth` are evaluated by scanning
/// back to the last identity pattern and coding forward from it.
pub fn literal_build(window: (i64, i64), config: &SamplerConfig) -> Result<HierarchyWindow> {
    build_impl(window, config, Key::from_seed(config.seed), Evaluator::Literal)
}

pub fn literal_build_keyed(window: (i64, i64), config: &SamplerConfig, seed: Key) -> Result<HierarchyWindow> {
    build_impl(window, config, seed, Evaluator::Literal)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProportionEstimate {
    pub value: f64,
    pub stderr: f64,
    pub replicates: u64,
}

pub fn replicate_key(seed: u64, r: u64) -> Key {
    Key::from_seed(seed).child(tag::REPLICATE).child(r)
}

/// Fraction of replicate windows `[1, 6*16^n]` holding at least two level-`n` ones.
pub fn double_one_probability(n: u32, replicates: u64, seed: u64) -> Result<ProportionEstimate> {
    if n == 0 || n > 3 {
        return Err(Error::invalid("double-one probability is supported for levels 1..=3"));
    }
    let width = 6 * 16i64.pow(n);
    double_one_in(n, (1, width), replicates, seed)
}

pub fn double_one_in(n: u32, window: (i64, i64), replicates: u64, seed: u64) -> Result<ProportionEstimate> {
    let cfg = SamplerConfig { min_depth: n, ..SamplerConfig::fast(seed) };
    let mut hits = 0u64;
    for r in 0..replicates {
        let h = build_keyed(window, &cfg, replicate_key(seed, r))?;
        if h.ones(n).count_in(window.0, window.1) >= 2 {
            hits += 1;
        }
    }
    let p = hits as f64 / replicates as f64;
    Ok(ProportionEstimate { value: p, stderr: (p * (1.0 - p) / replicates as f64).sqrt(), replicates })
}
