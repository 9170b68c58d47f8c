//! Deterministic coding layer: the cyclic chain update, the identity-pattern
//! anchored coding functions, the `psi` index selector and Condition S checks.

use serde::Serialize;

use crate::error::{Error, Result};

/// Six bits indexed 1..=6; bit `i` is stored at mask bit `i - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Bit6(u8);

impl Bit6 {
    pub const ZERO: Bit6 = Bit6(0);

    pub fn from_mask(mask: u8) -> Self {
        Bit6(mask & 0x3f)
    }

    pub fn from_bits(bits: [u8; 6]) -> Result<Self> {
        let mut m = 0;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => m |= 1 << i,
                _ => return Err(Error::invalid(format!("bit {} is {b}", i + 1))),
            }
        }
        Ok(Bit6(m))
    }

    /// Unit column `e_t`, `t` in 1..=6.
    pub fn unit(t: u8) -> Self {
        assert!((1..=6).contains(&t));
        Bit6(1 << (t - 1))
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn get(self, i: u8) -> bool {
        debug_assert!((1..=6).contains(&i));
        self.0 >> (i - 1) & 1 == 1
    }
}

/// The 6x6 identity matrix read as six consecutive columns.
pub const IDENTITY_PATTERN: [Bit6; 6] = [Bit6(1), Bit6(2), Bit6(4), Bit6(8), Bit6(16), Bit6(32)];

#[inline]
pub fn successor(state: u8) -> u8 {
    if state == 6 {
        1
    } else {
        state + 1
    }
}

/// One step of the cyclic chain: advance to the successor state exactly when
/// the successor's bit is set.
#[inline]
pub fn chain_step(state: u8, beta: Bit6) -> u8 {
    debug_assert!((1..=6).contains(&state));
    let next = successor(state);
    if beta.get(next) {
        next
    } else {
        state
    }
}

pub fn is_identity_pattern(cols: &[Bit6]) -> bool {
    cols == IDENTITY_PATTERN
}

/// Indices `p` (into `cols`) at which an identity pattern ends.
pub fn pattern_ends(cols: &[Bit6]) -> Vec<usize> {
    (5..cols.len()).filter(|&p| is_identity_pattern(&cols[p - 5..=p])).collect()
}

/// Columns following the end of an identity pattern, most recent last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnchoredHistory {
    suffix: Vec<Bit6>,
}

impl AnchoredHistory {
    pub fn after_pattern(suffix: Vec<Bit6>) -> Self {
        AnchoredHistory { suffix }
    }

    /// `cols` must begin with the identity pattern; the rest becomes the suffix.
    pub fn from_columns(cols: &[Bit6]) -> Result<Self> {
        if cols.len() < 6 || !is_identity_pattern(&cols[..6]) {
            return Err(Error::invalid("history must start with the identity pattern"));
        }
        Ok(AnchoredHistory { suffix: cols[6..].to_vec() })
    }

    pub fn anchor_offset(&self) -> usize {
        self.suffix.len()
    }

    pub fn suffix(&self) -> &[Bit6] {
        &self.suffix
    }

    pub fn push(&mut self, beta: Bit6) {
        self.suffix.push(beta);
    }

    fn truncated(&self, len: usize) -> AnchoredHistory {
        AnchoredHistory { suffix: self.suffix[..len].to_vec() }
    }

    fn columns(&self) -> Vec<Bit6> {
        IDENTITY_PATTERN.iter().chain(self.suffix.iter()).copied().collect()
    }
}

/// Literal evaluation: find the most recent pattern end and fold the chain
/// from state 6 over everything after it.
pub fn g_basic_anchored(history: &AnchoredHistory) -> u8 {
    let cols = history.columns();
    let last = *pattern_ends(&cols).last().expect("the anchor pattern is always present");
    cols[last + 1..].iter().fold(6, |s, &b| chain_step(s, b))
}

pub fn g_spaced_anchored(history: &AnchoredHistory) -> Result<u8> {
    let n = history.suffix.len();
    if n == 0 {
        return Err(Error::invalid("spaced symbol needs at least one column after the anchor"));
    }
    let now = g_basic_anchored(history);
    let before = g_basic_anchored(&history.truncated(n - 1));
    Ok(if now != before { now } else { 0 })
}

/// Streaming form of the anchored coding: resets to 6 whenever an identity
/// pattern completes and otherwise applies `chain_step`.
#[derive(Clone, Debug)]
pub struct BasicCoder {
    state: u8,
    recent: [Bit6; 6],
    filled: usize,
}

impl Default for BasicCoder {
    fn default() -> Self {
        Self::new()
    }
}

impl BasicCoder {
    /// A coder positioned at the end of an identity pattern.
    pub fn new() -> Self {
        BasicCoder { state: 6, recent: IDENTITY_PATTERN, filled: 6 }
    }

    pub fn state(&self) -> u8 {
        self.state
    }

    /// Feeds one column; returns `(g_basic, g_spaced)` at the new position.
    pub fn push(&mut self, beta: Bit6) -> (u8, u8) {
        self.recent.rotate_left(1);
        self.recent[5] = beta;
        self.filled = (self.filled + 1).min(6);
        let prev = self.state;
        self.state = if self.filled == 6 && is_identity_pattern(&self.recent) { 6 } else { chain_step(prev, beta) };
        (self.state, if self.state != prev { self.state } else { 0 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    pub g_basic: u8,
    pub g_spaced: u8,
}

/// `(g_basic, g_spaced)` at every suffix position, `k = 1..=len`.
pub fn trace(history: &AnchoredHistory) -> Vec<TraceRow> {
    let mut coder = BasicCoder::new();
    history
        .suffix
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let (g_basic, g_spaced) = coder.push(b);
            TraceRow { k: i + 1, g_basic, g_spaced }
        })
        .collect()
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("k,g_basic,g_spaced\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.k, r.g_basic, r.g_spaced));
    }
    out
}

/// Index of the `(j+1)`-th mark, counting back from index 0.
pub fn psi(j: usize, marks: &[u8]) -> Result<usize> {
    let mut seen = 0;
    for (k, &m) in marks.iter().enumerate() {
        if m == 1 {
            if seen == j {
                return Ok(k);
            }
            seen += 1;
        }
    }
    Err(Error::InsufficientMarks { needed: j + 1, found: seen })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionSReport {
    pub pass: bool,
    pub first_violation: Option<usize>,
}

/// Successor rule between consecutive nonzero symbols of a finite window.
pub fn check_condition_s(window: &[u8]) -> ConditionSReport {
    let mut last: Option<u8> = None;
    for (i, &w) in window.iter().enumerate() {
        if w > 6 {
            return ConditionSReport { pass: false, first_violation: Some(i) };
        }
        if w == 0 {
            continue;
        }
        if let Some(prev) = last {
            if w != successor(prev) {
                return ConditionSReport { pass: false, first_violation: Some(i) };
            }
        }
        last = Some(w);
    }
    ConditionSReport { pass: true, first_violation: None }
}
