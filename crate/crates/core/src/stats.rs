//! Estimators, χ² tests and the campaign report format.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rng::Key;

pub const DEFAULT_SIGNIFICANCE: f64 = 1e-3;
/// Width of the moment and frequency brackets, in standard errors.
pub const SIGMAS: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareReport {
    pub counts: Vec<u64>,
    pub expected: Vec<f64>,
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    pub significance: f64,
    pub pass: bool,
}

/// Upper tail of the χ² law.
pub fn chi_square_sf(statistic: f64, dof: u32) -> f64 {
    if !statistic.is_finite() {
        return 0.0;
    }
    if dof == 0 {
        return if statistic > 0.0 { 0.0 } else { 1.0 };
    }
    ChiSquared::new(dof as f64).expect("positive dof").sf(statistic)
}

/// Pearson goodness of fit. A count in a zero-probability cell rejects outright.
pub fn chi_square_gof(counts: &[u64], probs: &[f64], significance: f64) -> Result<ChiSquareReport> {
    if counts.len() != probs.len() || counts.is_empty() {
        return Err(Error::invalid("counts and probabilities differ in length"));
    }
    if probs.iter().any(|&p| p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("expected probabilities must be nonnegative and sum to 1"));
    }
    let total: u64 = counts.iter().sum();
    let mut statistic = 0.0;
    let mut cells = 0u32;
    for (&c, &p) in counts.iter().zip(probs) {
        if p == 0.0 {
            if c > 0 {
                statistic = f64::INFINITY;
            }
            continue;
        }
        cells += 1;
        let e = p * total as f64;
        statistic += (c as f64 - e).powi(2) / e;
    }
    let dof = cells.saturating_sub(1);
    let p_value = chi_square_sf(statistic, dof);
    Ok(ChiSquareReport {
        counts: counts.to_vec(),
        expected: probs.to_vec(),
        statistic,
        dof,
        p_value,
        significance,
        pass: p_value >= significance,
    })
}

/// Two-sample homogeneity test on a 2×c table; empty columns are dropped.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], significance: f64) -> Result<ChiSquareReport> {
    if a.len() != b.len() {
        return Err(Error::invalid("samples have different cell counts"));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("empty sample"));
    }
    let n = na + nb;
    let mut statistic = 0.0;
    let mut cols = 0u32;
    let mut pooled = Vec::with_capacity(a.len());
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        pooled.push(col / n);
        if col == 0.0 {
            continue;
        }
        cols += 1;
        let (ea, eb) = (na * col / n, nb * col / n);
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let dof = cols.saturating_sub(1);
    let p_value = chi_square_sf(statistic, dof);
    let mut counts = a.to_vec();
    counts.extend_from_slice(b);
    Ok(ChiSquareReport { counts, expected: pooled, statistic, dof, p_value, significance, pass: p_value >= significance })
}

/// Cell index of a ±1 tuple: bit `i` set when entry `i` is -1.
pub fn tuple_cell(values: &[i8]) -> usize {
    values.iter().enumerate().fold(0, |acc, (i, &x)| acc | (((x < 0) as usize) << i))
}

/// Tests a table of ±1 `k`-tuple counts against the uniform law on `2^k` cells.
pub fn uniform_tuple_test(counts: &[u64], significance: f64) -> Result<ChiSquareReport> {
    let cells = counts.len();
    chi_square_gof(counts, &vec![1.0 / cells as f64; cells], significance)
}

/// Joint-law test for each index set. `source(r, positions)` returns the path
/// values at `positions` (sorted, distinct) for replicate `r`; each set is
/// tested at `significance / sets` (Bonferroni).
pub fn ktuple_independence_test<F>(
    k: usize,
    index_sets: &[Vec<i64>],
    replicates: u64,
    significance: f64,
    source: F,
) -> Result<Vec<ChiSquareReport>>
where
    F: Fn(u64, &[i64]) -> Result<Vec<i8>> + Sync,
{
    if k == 0 || k > 6 {
        return Err(Error::invalid("tuple size must be in 1..=6"));
    }
    let mut union: Vec<i64> = Vec::new();
    for set in index_sets {
        let mut s = set.clone();
        s.sort_unstable();
        s.dedup();
        if set.len() != k || s.len() != k {
            return Err(Error::invalid("index sets must hold k distinct positions"));
        }
        union.extend_from_slice(set);
    }
    union.sort_unstable();
    union.dedup();
    let slots: Vec<Vec<usize>> = index_sets
        .iter()
        .map(|set| set.iter().map(|p| union.binary_search(p).expect("in union")).collect())
        .collect();
    let cells = 1usize << k;
    let chunk = replicates.div_ceil(256).max(1);
    let starts: Vec<u64> = (0..replicates).step_by(chunk as usize).collect();
    let partial: Vec<Vec<u64>> = starts
        .par_iter()
        .map(|&start| -> Result<Vec<u64>> {
            let mut counts = vec![0u64; cells * index_sets.len()];
            let mut tuple = vec![0i8; k];
            for r in start..(start + chunk).min(replicates) {
                let values = source(r, &union)?;
                for (s, slot) in slots.iter().enumerate() {
                    for (t, &i) in slot.iter().enumerate() {
                        tuple[t] = values[i];
                    }
                    counts[s * cells + tuple_cell(&tuple)] += 1;
                }
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut totals = vec![0u64; cells * index_sets.len()];
    for counts in partial {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let per_test = significance / index_sets.len() as f64;
    totals.chunks(cells).map(|c| uniform_tuple_test(c, per_test)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub order: u32,
    pub value: f64,
    pub stderr: f64,
    pub replicates: u64,
}

/// Mean and standard error of `f` over independent replicate values.
pub fn mean_with_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, u64) {
    let n = values.clone().count() as u64;
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    (mean, (var / n as f64).sqrt(), n)
}

/// Moments of `S_M / sqrt(M)` from one partial sum per independent replicate.
pub fn moments_from_sums(sums: &[i64], block: u64, orders: &[u32]) -> Result<Vec<MomentEstimate>> {
    if sums.len() < 2 {
        return Err(Error::invalid("need at least two replicates"));
    }
    let scale = (block as f64).sqrt();
    Ok(orders
        .iter()
        .map(|&order| {
            let (value, stderr, replicates) = mean_with_stderr(sums.iter().map(|&s| (s as f64 / scale).powi(order as i32)));
            MomentEstimate { order, value, stderr, replicates }
        })
        .collect())
}

/// Orders 2, 4, 6 of `S_M / sqrt(M)`; `source(r)` returns `S_M` of replicate `r`.
pub fn partial_sum_moment_suite<F>(block: u64, replicates: u64, source: F) -> Result<Vec<MomentEstimate>>
where
    F: Fn(u64) -> Result<i64> + Sync,
{
    if block == 0 {
        return Err(Error::invalid("block length must be positive"));
    }
    let sums: Vec<i64> = (0..replicates).into_par_iter().map(&source).collect::<Result<_>>()?;
    moments_from_sums(&sums, block, &[2, 4, 6])
}

/// Sum of `len` fair signs drawn from `key`.
pub fn rademacher_sum(key: Key, len: u64) -> i64 {
    (0..len as i64).map(|i| if key.coin(i) { -1 } else { 1 }).sum()
}

/// Exact `E(S_M / sqrt(M))^r` for i.i.d. fair signs, `r` in {2, 4, 6}.
pub fn rademacher_moment(block: u64, order: u32) -> f64 {
    let m = block as f64;
    match order {
        2 => 1.0,
        4 => 3.0 - 2.0 / m,
        6 => 15.0 - 30.0 / m + 16.0 / (m * m),
        _ => panic!("order {order} not tabulated"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    pub n: u32,
    pub value: f64,
    pub stderr: f64,
    pub target: f64,
    pub pass: bool,
}

/// `P(N >= n)` for `n <= n_max`. `source(r)` returns the depths of replicate
/// window `r`; errors are batched by window since depths cluster in blocks.
pub fn tail_suite<F>(n_max: u32, replicates: u64, source: F) -> Result<Vec<TailEstimate>>
where
    F: Fn(u64) -> Result<Vec<u32>> + Sync,
{
    if replicates < 2 {
        return Err(Error::invalid("need at least two replicate windows"));
    }
    let fractions: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let depths = source(r)?;
            let len = depths.len() as f64;
            Ok((0..=n_max).map(|n| depths.iter().filter(|&&d| d >= n).count() as f64 / len).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..=n_max)
        .map(|n| {
            let (value, stderr, _) = mean_with_stderr(fractions.iter().map(|f| f[n as usize]));
            let target = 0.375f64.powi(n as i32);
            let pass = if n == 0 { value == 1.0 } else { (value - target).abs() <= SIGMAS * stderr.max(f64::MIN_POSITIVE) };
            TailEstimate { n, value, stderr, target, pass }
        })
        .collect())
}

/// `P(T = t)` for the number of trials until the `r`-th success.
pub fn negbin_pmf(t: u64, r: u64, p: f64) -> f64 {
    if t < r {
        return 0.0;
    }
    let ln_choose = ln_gamma((t) as f64) - ln_gamma(r as f64) - ln_gamma((t - r + 1) as f64);
    (ln_choose + r as f64 * p.ln() + (t - r) as f64 * (1.0 - p).ln()).exp()
}

fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Bins gaps as `<r`, `r`, `r+1`, …, pooling the upper tail once expected counts drop below 5.
pub fn negbin_goodness_of_fit(gaps: &[u64], r: u64, p: f64, significance: f64) -> Result<ChiSquareReport> {
    if gaps.is_empty() {
        return Err(Error::invalid("no gaps"));
    }
    let total = gaps.len() as f64;
    let mut last = r;
    let mut mass = 0.0;
    while total * (1.0 - mass - negbin_pmf(last, r, p)) >= 5.0 {
        mass += negbin_pmf(last, r, p);
        last += 1;
    }
    // Cells: [below r] [r] … [last-1] [>= last].
    let width = (last - r) as usize + 2;
    let mut counts = vec![0u64; width];
    for &g in gaps {
        let cell = if g < r { 0 } else if g >= last { width - 1 } else { (g - r) as usize + 1 };
        counts[cell] += 1;
    }
    let mut probs = vec![0.0; width];
    for t in r..last {
        probs[(t - r) as usize + 1] = negbin_pmf(t, r, p);
    }
    probs[width - 1] = 1.0 - probs.iter().sum::<f64>();
    chi_square_gof(&counts, &probs, significance)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub target: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignReport {
    pub campaign: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub seed: u64,
    pub estimates: Vec<Estimate>,
    pub pass: bool,
}

impl CampaignReport {
    pub fn new(campaign: &str, seed: u64) -> Self {
        CampaignReport { campaign: campaign.into(), params: Default::default(), seed, estimates: Vec::new(), pass: true }
    }

    pub fn param(&mut self, name: &str, value: impl Into<serde_json::Value>) -> &mut Self {
        self.params.insert(name.into(), value.into());
        self
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64, stderr: f64, target: f64, ok: bool) {
        self.pass &= ok;
        self.estimates.push(Estimate { name: name.into(), value, stderr, target, verdict: Verdict::from_bool(ok) });
    }

    /// Records `|value - target| <= 4 stderr`.
    pub fn bracket(&mut self, name: impl Into<String>, value: f64, stderr: f64, target: f64) -> bool {
        let ok = (value - target).abs() <= SIGMAS * stderr;
        self.push(name, value, stderr, target, ok);
        ok
    }

    /// Records `value - 4 stderr <= bound`.
    pub fn upper(&mut self, name: impl Into<String>, value: f64, stderr: f64, bound: f64) -> bool {
        let ok = value - SIGMAS * stderr <= bound;
        self.push(name, value, stderr, bound, ok);
        ok
    }

    /// Records `value + 4 stderr >= bound`.
    pub fn lower(&mut self, name: impl Into<String>, value: f64, stderr: f64, bound: f64) -> bool {
        let ok = value + SIGMAS * stderr >= bound;
        self.push(name, value, stderr, bound, ok);
        ok
    }

    /// Records an exact check; value and target are 1/0 flags or exact numbers.
    pub fn exact(&mut self, name: impl Into<String>, value: f64, target: f64, ok: bool) -> bool {
        self.push(name, value, 0.0, target, ok);
        ok
    }

    /// Records a χ² test as its p-value against the significance level.
    pub fn chi_square(&mut self, name: impl Into<String>, report: &ChiSquareReport) -> bool {
        self.push(name, report.p_value, 0.0, report.significance, report.pass);
        report.pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
