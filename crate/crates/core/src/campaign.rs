//! The verification catalog. Each check returns a [`CampaignReport`]; the
//! named campaigns group them.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;

use crate::chain::{
    derive_transition_matrix, level_key, literal_level1_sampler, pattern_probability,
    return_time_samples, sample_stationary_path_cftp, scan_patterns,
};
use crate::error::{Error, Result};
use crate::hierarchy::{build_keyed, literal_build_keyed, replicate_key, double_one_probability, HierarchyWindow, SamplerConfig};
use crate::measures::{
    enumerate_upsilon, exact_distribution, ord_sixth_moment_bruteforce, rademacher_sixth_moment_bruteforce, ratio,
    rational_to_f64, sixth_moment_gap, sum_distribution, MeasureKind, Rational,
};
use crate::process::{audit_block_contents, decompose_blocks, path_from, value_at};
use crate::rng::{tag, Key};
use crate::stats::{
    chi_square_homogeneity, ktuple_independence_test, mean_with_stderr, negbin_goodness_of_fit, partial_sum_moment_suite,
    rademacher_moment, rademacher_sum, tuple_cell, uniform_tuple_test, CampaignReport,
};

#[derive(Clone, Debug)]
pub struct CampaignParams {
    pub seed: u64,
    pub significance: f64,
    /// Budgets and guards; its `seed` field is ignored in favor of `seed` above.
    pub sampler: SamplerConfig,
    pub positions: Option<u64>,
    pub replicates: Option<u64>,
    pub nmax: u32,
}

impl CampaignParams {
    pub fn new(seed: u64) -> Self {
        CampaignParams {
            seed,
            significance: crate::stats::DEFAULT_SIGNIFICANCE,
            sampler: SamplerConfig::fast(seed),
            positions: None,
            replicates: None,
            nmax: 6,
        }
    }

    fn config(&self) -> SamplerConfig {
        SamplerConfig { seed: self.seed, ..self.sampler.clone() }
    }

    fn positions_or(&self, default: u64) -> u64 {
        self.positions.unwrap_or(default)
    }

    fn replicates_or(&self, default: u64) -> u64 {
        self.replicates.unwrap_or(default)
    }

    fn root(&self) -> Key {
        Key::from_seed(self.seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Campaign {
    Measures,
    Chain,
    Hierarchy,
    Independence,
    Moments,
    Tails,
    Blocks,
    DoubleOne,
    CrossMode,
}

impl Campaign {
    pub const ALL: [Campaign; 9] = [
        Campaign::Measures,
        Campaign::Chain,
        Campaign::Hierarchy,
        Campaign::Independence,
        Campaign::Moments,
        Campaign::Tails,
        Campaign::Blocks,
        Campaign::DoubleOne,
        Campaign::CrossMode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Campaign::Measures => "measures",
            Campaign::Chain => "chain",
            Campaign::Hierarchy => "hierarchy",
            Campaign::Independence => "independence",
            Campaign::Moments => "moments",
            Campaign::Tails => "tails",
            Campaign::Blocks => "blocks",
            Campaign::DoubleOne => "double-one",
            Campaign::CrossMode => "cross-mode",
        }
    }

    pub fn from_name(name: &str) -> Option<Campaign> {
        Campaign::ALL.into_iter().find(|c| c.name() == name)
    }
}

fn merge(name: &str, seed: u64, parts: Vec<CampaignReport>) -> CampaignReport {
    let mut out = CampaignReport::new(name, seed);
    for part in parts {
        for (k, v) in part.params {
            out.params.insert(format!("{}.{}", part.campaign, k), v);
        }
        for e in part.estimates {
            out.pass &= e.verdict == crate::stats::Verdict::Pass;
            out.estimates.push(crate::stats::Estimate { name: format!("{}/{}", part.campaign, e.name), ..e });
        }
    }
    out
}

pub fn run_campaign(campaign: Campaign, params: &CampaignParams) -> Result<CampaignReport> {
    let seed = params.seed;
    Ok(match campaign {
        Campaign::Measures => merge("measures", seed, vec![exact_measures_report(), gap_identity_report()]),
        Campaign::Chain => merge(
            "chain",
            seed,
            vec![transition_report(), pattern_report(params)?, return_times_report(params)?],
        ),
        Campaign::Hierarchy => merge("hierarchy", seed, vec![marginals_report(params)?, level_gaps_report(params)?]),
        Campaign::Independence => independence_report(params)?,
        Campaign::Moments => merge("moments", seed, vec![moments_report(params)?, self_oracle_report(params)?]),
        Campaign::Tails => tails_report(params)?,
        Campaign::Blocks => invariants_report(params)?,
        Campaign::DoubleOne => double_one_report(params)?,
        Campaign::CrossMode => cross_mode_report(params)?,
    })
}

/// Runs every campaign and folds them into one verdict.
pub fn run_all(params: &CampaignParams) -> Result<CampaignReport> {
    let parts = Campaign::ALL.iter().map(|&c| run_campaign(c, params)).collect::<Result<Vec<_>>>()?;
    Ok(merge("all", params.seed, parts))
}

fn flag(ok: bool) -> f64 {
    if ok {
        1.0
    } else {
        0.0
    }
}

fn rational_eq(report: &mut CampaignReport, name: &str, value: &Rational, target: &Rational) -> bool {
    report.exact(name, rational_to_f64(value), rational_to_f64(target), value == target)
}

/// Transition matrix entries, row sums and stationarity of the uniform law.
pub fn transition_report() -> CampaignReport {
    let mut r = CampaignReport::new("transition", 0);
    let p = derive_transition_matrix();
    for i in 1..=6u8 {
        for j in 1..=6u8 {
            let target = if i == j {
                ratio(5, 8)
            } else if j == i % 6 + 1 {
                ratio(3, 8)
            } else {
                Rational::zero()
            };
            rational_eq(&mut r, &format!("p[{i}][{j}]"), p.entry(i, j), &target);
        }
    }
    r.exact("rows_sum_to_one", flag(p.rows_sum_to_one()), 1.0, p.rows_sum_to_one());
    let uniform = vec![ratio(1, 6); 6];
    let stationary = p.left_multiply(&uniform) == uniform;
    r.exact("uniform_is_stationary", flag(stationary), 1.0, stationary);
    r
}

/// Key law, the level-1 laws, the mixture identity and the sum laws.
pub fn exact_measures_report() -> CampaignReport {
    let mut r = CampaignReport::new("measures", 0);
    let keys = enumerate_upsilon();
    r.exact("key_atoms", keys.len() as f64, 32.0, keys.len() == 32);
    let ord = exact_distribution(1, MeasureKind::Ord).expect("level 1");
    let key_law = ord.support().len() == 32
        && ord.support().iter().all(|(_, p)| *p == ratio(1, 32))
        && keys.iter().all(|k| ord.prob(&k.to_sign_vector()) == ratio(1, 32));
    r.exact("ord1_equals_key_law", flag(key_law), 1.0, key_law);
    for (kind, atoms) in [(MeasureKind::Cen, 20), (MeasureKind::Fri, 12), (MeasureKind::Pos, 6)] {
        let law = exact_distribution(1, kind).expect("level 1");
        let uniform = law.support().len() == atoms && law.support().iter().all(|(_, p)| *p == ratio(1, atoms as i64));
        r.exact(format!("{}1_uniform_on_{atoms}", kind.name()), law.support().len() as f64, atoms as f64, uniform);
    }
    let cen = exact_distribution(1, MeasureKind::Cen).expect("level 1");
    let fri = exact_distribution(1, MeasureKind::Fri).expect("level 1");
    let mixture = ord
        .support()
        .iter()
        .all(|(v, p)| *p == ratio(5, 8) * cen.prob(v) + ratio(3, 8) * fri.prob(v));
    r.exact("mixture_identity", flag(mixture), 1.0, mixture);
    for n in 1..=3u32 {
        let law = sum_distribution(n, MeasureKind::Ord).expect("level >= 1");
        let scale = BigInt::from(4).pow(n);
        rational_eq(&mut r, &format!("ord{n}_sum_P(0)"), &law.prob(&BigInt::zero()), &ratio(5, 8));
        rational_eq(&mut r, &format!("ord{n}_sum_P(+4^n)"), &law.prob(&scale), &ratio(3, 16));
        rational_eq(&mut r, &format!("ord{n}_sum_P(-4^n)"), &law.prob(&-scale), &ratio(3, 16));
    }
    r
}

/// `2256 = 1536 + 720` by enumeration, and the closed form on full blocks.
pub fn gap_identity_report() -> CampaignReport {
    let mut r = CampaignReport::new("gap-identity", 0);
    let rademacher = rademacher_sixth_moment_bruteforce();
    let ord = ord_sixth_moment_bruteforce();
    rational_eq(&mut r, "rademacher_sixth_moment", &rademacher, &ratio(2256, 1));
    rational_eq(&mut r, "ord_sixth_moment", &ord, &ratio(1536, 1));
    let gap0 = sixth_moment_gap(0, [1; 6]).expect("valid counts");
    rational_eq(&mut r, "gap_level0", &(&rademacher - &ord), &gap0);
    for n in 0..=3u32 {
        let full = 6u64.pow(n);
        let gap = sixth_moment_gap(n, [full; 6]).expect("valid counts");
        let target = Rational::from_integer(BigInt::from(720) * BigInt::from(4).pow(6 * n));
        rational_eq(&mut r, &format!("gap_full_blocks_level{n}"), &gap, &target);
    }
    r
}

/// Exact pattern probability and detector rates along the level-1 columns.
pub fn pattern_report(params: &CampaignParams) -> Result<CampaignReport> {
    let positions = params.positions_or(100_000_000);
    let mut r = CampaignReport::new("pattern", params.seed);
    r.param("positions", positions);
    let exact = pattern_probability();
    let expected = Rational::from_integer(BigInt::from(5).pow(30) * BigInt::from(3).pow(6))
        / Rational::from_integer(BigInt::from(8).pow(36));
    rational_eq(&mut r, "pattern_probability", &exact, &expected);

    let key = level_key(params.root(), 1);
    let chunk = 1u64 << 22;
    let scans: Vec<_> = (0..positions.div_ceil(chunk))
        .into_par_iter()
        .map(|c| scan_patterns(key, 1 + (c * chunk) as i64, chunk.min(positions - c * chunk)))
        .collect();
    let mut hits = [0u64; 6];
    for s in &scans {
        for (h, x) in hits.iter_mut().zip(s.prefix_hits) {
            *h += x;
        }
    }
    // Column e_i has probability (3/8)(5/8)^5, so an m-prefix matches with its m-th power.
    let single = 0.375 * 0.625f64.powi(5);
    for (m, &h) in hits.iter().enumerate() {
        let q = single.powi(m as i32 + 1);
        let mean = positions as f64 * q;
        let sd = (positions as f64 * q * (1.0 - q)).sqrt();
        r.bracket(format!("prefix{}_matches", m + 1), h as f64, sd, mean);
    }
    // The literal sampler's scan lands on a genuine pattern end.
    let window = literal_level1_sampler(1, 16, params.sampler.scan_budget, params.root());
    match window {
        Ok(path) => {
            let cftp = sample_stationary_path_cftp(1, 16, params.root(), params.sampler.backward_budget)?;
            let same = path.states == cftp.states;
            r.exact("literal_matches_coalesced", flag(same), 1.0, same);
        }
        Err(e) if e.is_budget() => {
            r.exact("literal_matches_coalesced", 0.0, 1.0, false);
        }
        Err(e) => return Err(e),
    }
    Ok(r)
}

/// Level-1 gaps against NB(6, 3/8) and level-2 gap scaling.
pub fn return_times_report(params: &CampaignParams) -> Result<CampaignReport> {
    let positions = params.positions_or(3_000_000);
    let mut r = CampaignReport::new("return-times", params.seed);
    r.param("positions", positions);
    let gaps = return_time_samples(positions, params.root(), params.sampler.backward_budget)?;
    r.exact("gap_count", gaps.len() as f64, 100_000.0, gaps.len() >= 100_000 || params.positions.is_some());
    let (mean, mean_se, n) = mean_with_stderr(gaps.iter().map(|&g| g as f64));
    r.bracket("mean_gap", mean, mean_se, 16.0);
    let var = gaps.iter().map(|&g| (g as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let m4 = gaps.iter().map(|&g| (g as f64 - mean).powi(4)).sum::<f64>() / n as f64;
    let var_se = ((m4 - var * var) / n as f64).sqrt();
    r.bracket("gap_variance", var, var_se, 80.0 / 3.0);
    let fit = negbin_goodness_of_fit(&gaps, 6, 0.375, params.significance)?;
    r.chi_square("negbin_6_3/8_fit", &fit);
    let shifted: Vec<u64> = gaps.iter().map(|&g| g - 1).collect();
    let wrong = negbin_goodness_of_fit(&shifted, 6, 0.375, params.significance)?;
    r.exact("shifted_gaps_rejected", flag(!wrong.pass), 1.0, !wrong.pass);

    let h = build_keyed((1, positions as i64), &SamplerConfig { min_depth: 2, ..params.config() }, params.root())?;
    let level2 = gaps_of(&h.ones(2).positions);
    r.exact("level2_gap_count", level2.len() as f64, 10_000.0, level2.len() >= 10_000 || params.positions.is_some());
    let (m2, se2, _) = mean_with_stderr(level2.iter().map(|&g| g as f64));
    r.bracket("level2_mean_gap", m2, se2, 256.0);
    Ok(r)
}

fn gaps_of(ones: &[i64]) -> Vec<u64> {
    ones.windows(2).map(|w| (w[1] - w[0]) as u64).collect()
}

/// Per-replicate observations at the origin of an independent hierarchy.
struct OriginSample {
    symbols: [u8; 3],
    depth: u32,
}

fn origin_samples(params: &CampaignParams, count: u64, min_depth: u32) -> Result<Vec<OriginSample>> {
    let cfg = SamplerConfig { min_depth, ..params.config() };
    (0..count)
        .into_par_iter()
        .map(|r| {
            let h = build_keyed((0, 0), &cfg, replicate_key(params.seed, r))?;
            Ok(OriginSample { symbols: [h.symbol(1, 0), h.symbol(2, 0), h.symbol(3, 0)], depth: h.n_at(0) })
        })
        .collect()
}

/// `P(W(n) = i) = 16^-n` and the conditional refresh law `1/16`.
pub fn marginals_report(params: &CampaignParams) -> Result<CampaignReport> {
    let count = params.positions_or(10_000_000);
    let mut r = CampaignReport::new("marginals", params.seed);
    r.param("positions", count);
    let samples = origin_samples(params, count, 3)?;
    for n in 1..=3usize {
        let target = 16f64.powi(-(n as i32));
        for i in 1..=6u8 {
            let hits = samples.iter().filter(|s| s.symbols[n - 1] == i).count() as f64;
            let sd = (target * (1.0 - target) / count as f64).sqrt();
            r.bracket(format!("P(W{n}={i})"), hits / count as f64, sd, target);
        }
    }
    for n in 1..=2usize {
        let given: Vec<&OriginSample> = samples.iter().filter(|s| s.symbols[n - 1] == 1).collect();
        let m = given.len() as f64;
        for i in 1..=6u8 {
            let hits = given.iter().filter(|s| s.symbols[n] == i).count() as f64;
            let sd = (1.0 / 16.0 * 15.0 / 16.0 / m).sqrt();
            r.bracket(format!("P(W{}={i}|W{n}=1)", n + 1), hits / m, sd, 1.0 / 16.0);
        }
    }
    Ok(r)
}

/// Level-`n` gap mean `16^n` and second moment below `2 * 16^(2n)`, with structural checks.
pub fn level_gaps_report(params: &CampaignParams) -> Result<CampaignReport> {
    let positions = params.positions_or(3_000_000);
    let mut r = CampaignReport::new("level-gaps", params.seed);
    r.param("positions", positions);
    let h = build_keyed((1, positions as i64), &SamplerConfig { min_depth: 2, ..params.config() }, params.root())?;
    for n in 1..=2u32 {
        let gaps = gaps_of(&h.ones(n).positions);
        let target = 16f64.powi(n as i32);
        let (mean, se, _) = mean_with_stderr(gaps.iter().map(|&g| g as f64));
        r.bracket(format!("level{n}_mean_gap"), mean, se, target);
        let (second, se2, _) = mean_with_stderr(gaps.iter().map(|&g| (g as f64).powi(2)));
        r.upper(format!("level{n}_gap_second_moment"), second, se2, 2.0 * target * target);
    }
    let nesting = (1..h.depth()).all(|u| {
        let (lo, hi) = h.range;
        // Check the bound on a ladder of subwindows.
        (0..64).all(|s| {
            let a = lo + s * (hi - lo) / 64;
            let b = hi;
            6 * h.ones(u + 1).count_in(a, b) <= 6 + h.ones(u).count_in(a, b)
        })
    });
    r.exact("nesting_bound", flag(nesting), 1.0, nesting);
    let nested = (1..h.depth()).all(|u| h.ones(u + 1).positions.iter().all(|&p| h.ones(u).ordinal_of(p).is_some()));
    r.exact("higher_ones_are_lower_ones", flag(nested), 1.0, nested);
    Ok(r)
}

/// `P(N >= n) = (3/8)^n` at independent origins.
pub fn tails_report(params: &CampaignParams) -> Result<CampaignReport> {
    let count = params.positions_or(10_000_000);
    let n_max = params.nmax;
    if n_max >= params.sampler.level_guard {
        return Err(Error::invalid("nmax must stay below the level guard"));
    }
    let mut r = CampaignReport::new("tails", params.seed);
    r.param("positions", count).param("nmax", n_max);
    let samples = origin_samples(params, count, 1)?;
    for n in 0..=n_max {
        let hits = samples.iter().filter(|s| s.depth >= n).count() as f64;
        let p = hits / count as f64;
        if n == 0 {
            r.exact("P(N>=0)", p, 1.0, p == 1.0);
            continue;
        }
        let target = 0.375f64.powi(n as i32);
        let sd = (target * (1.0 - target) / count as f64).sqrt();
        r.bracket(format!("P(N>={n})"), p, sd, target);
    }
    Ok(r)
}

/// Lower bound `p_n >= 1/2` for two level-`n` ones in `[1, 6 * 16^n]`.
pub fn double_one_report(params: &CampaignParams) -> Result<CampaignReport> {
    let reps = params.replicates_or(10_000);
    let mut r = CampaignReport::new("double-one", params.seed);
    r.param("replicates_level1", reps).param("replicates_level2", (reps / 10).max(2));
    for (n, count) in [(1u32, reps), (2, (reps / 10).max(2))] {
        let est = double_one_probability(n, count, params.seed)?;
        r.lower(format!("p{n}"), est.value, est.stderr, 0.5);
    }
    Ok(r)
}

/// Deterministic invariants on sampled windows; zero tolerance.
pub fn invariants_report(params: &CampaignParams) -> Result<CampaignReport> {
    let windows = params.replicates_or(12);
    let len = params.positions_or(200_000) as i64;
    let mut r = CampaignReport::new("blocks", params.seed);
    r.param("windows", windows).param("positions", len);
    let results: Vec<(usize, usize, usize, [usize; 4])> = (0..windows)
        .into_par_iter()
        .map(|w| {
            let key = replicate_key(params.seed, w);
            // Windows start at varied offsets, some left of the origin.
            let a = (w as i64 - windows as i64 / 2) * len / 3;
            let h = build_keyed((a, a + len - 1), &params.config(), key)?;
            let hierarchy_violations = h.audit().len();
            let path = path_from(h, params.seed, key);
            let blocks = decompose_blocks(&path.hierarchy);
            let audit = audit_block_contents(&path, &blocks);
            let audited = [1usize, 2, 3].map(|m| blocks.d.get(m).map_or(0, Vec::len));
            let e2 = blocks.e.get(2).map_or(0, Vec::len);
            Ok((hierarchy_violations, audit.failures.len(), audit.blocks.len(), [audited[0], audited[1], audited[2], e2]))
        })
        .collect::<Result<_>>()?;
    let hierarchy_bad: usize = results.iter().map(|x| x.0).sum();
    let block_bad: usize = results.iter().map(|x| x.1).sum();
    let audited: usize = results.iter().map(|x| x.2).sum();
    r.exact("hierarchy_violations", hierarchy_bad as f64, 0.0, hierarchy_bad == 0);
    r.exact("block_violations", block_bad as f64, 0.0, block_bad == 0);
    for (i, name) in ["d1_blocks_audited", "d2_blocks_audited", "d3_blocks_audited", "e2_blocks_checked"].iter().enumerate() {
        let c: usize = results.iter().map(|x| x.3[i]).sum();
        r.exact(*name, c as f64, 1.0, c >= 1 || i == 2);
    }
    r.exact("blocks_audited", audited as f64, 1.0, audited > 0);
    Ok(r)
}

/// Values at `positions` of an independent replicate path on `[0, span)`.
fn replicate_values(params: &CampaignParams, span: i64, rep: u64, positions: &[i64]) -> Result<Vec<i8>> {
    let key = replicate_key(params.seed, rep);
    let h = build_keyed((0, span - 1), &params.config(), key)?;
    positions.iter().map(|&k| Ok(value_at(key, &h.resolve_position(k)?))).collect()
}

/// The 50 random 5-index sets within `[0, span)`.
pub fn random_index_sets(seed: u64, count: usize, k: usize, span: usize) -> Vec<Vec<i64>> {
    let mut rng = Key::from_seed(seed).child(tag::INDEX_SETS).stream();
    (0..count)
        .map(|_| {
            let mut set: Vec<i64> = sample_indices(&mut rng, span, k).into_iter().map(|i| i as i64).collect();
            set.sort_unstable();
            set
        })
        .collect()
}

/// 5-tuple uniformity on random index sets, pair independence at lag 1, and
/// rejection of 6-tuple uniformity on level-1 blocks.
pub fn independence_report(params: &CampaignParams) -> Result<CampaignReport> {
    let reps = params.replicates_or(200_000);
    let span = 200i64;
    let sets = random_index_sets(params.seed, 50, 5, span as usize);
    let mut r = CampaignReport::new("independence", params.seed);
    r.param("replicates", reps).param("index_sets", sets.len()).param("span", span);
    let reports = ktuple_independence_test(5, &sets, reps, params.significance, |rep, pos| {
        replicate_values(params, span, rep, pos)
    })?;
    for (set, rep) in sets.iter().zip(&reports) {
        r.chi_square(format!("k5{set:?}"), rep);
    }
    let pair = ktuple_independence_test(2, &[vec![0, 1]], reps, params.significance, |rep, pos| {
        replicate_values(params, 2, rep, pos)
    })?;
    r.chi_square("k2_lag1", &pair[0]);

    // Sextuples read inside complete level-1 D-blocks.
    let windows = (reps / 1000).max(4);
    let tables: Vec<Vec<u64>> = (0..windows)
        .into_par_iter()
        .map(|w| {
            let key = replicate_key(params.seed, w).child(tag::MEASURE);
            let h = build_keyed((0, 9_999), &params.config(), key)?;
            let path = path_from(h, params.seed, key);
            let blocks = decompose_blocks(&path.hierarchy);
            let mut counts = vec![0u64; 64];
            for blk in &blocks.d[1] {
                let xs: Vec<i8> = blk.members.iter().map(|&k| path.x_at(k)).collect();
                counts[tuple_cell(&xs)] += 1;
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0u64; 64];
    for t in tables {
        for (c, x) in counts.iter_mut().zip(t) {
            *c += x;
        }
    }
    let six = uniform_tuple_test(&counts, params.significance)?;
    r.exact("k6_on_d1_blocks_rejected", six.p_value, params.significance, !six.pass);
    let odd = counts.iter().enumerate().all(|(cell, &c)| c == 0 || cell.count_ones() % 2 == 1);
    r.exact("d1_block_product_is_minus_one", flag(odd), 1.0, odd);
    Ok(r)
}

fn path_sum(params: &CampaignParams, block: u64, rep: u64) -> Result<i64> {
    let key = replicate_key(params.seed, rep);
    let h = build_keyed((1, block as i64), &params.config(), key)?;
    Ok(h.records().map(|rec| value_at(key, &rec) as i64).sum())
}

/// Moment brackets for `S_M / sqrt(M)` along the sampled process.
pub fn moments_report(params: &CampaignParams) -> Result<CampaignReport> {
    let reps = params.replicates_or(100_000);
    let mut r = CampaignReport::new("moments", params.seed);
    r.param("replicates", reps).param("block_lengths", vec![96, 1000]);
    for m in [96u64, 1000] {
        let est = partial_sum_moment_suite(m, reps, |rep| path_sum(params, m, rep))?;
        r.bracket(format!("M{m}_order2"), est[0].value, est[0].stderr, 1.0);
        r.upper(format!("M{m}_order4"), est[1].value, est[1].stderr, 3.0);
        r.upper(format!("M{m}_order6"), est[2].value, est[2].stderr, 15.0);
    }
    Ok(r)
}

/// The moment suite on i.i.d. fair signs recovers the exact moments.
pub fn self_oracle_report(params: &CampaignParams) -> Result<CampaignReport> {
    let reps = params.replicates_or(100_000);
    let mut r = CampaignReport::new("self-oracle", params.seed);
    r.param("replicates", reps);
    let root = params.root().child(tag::MEASURE);
    for m in [96u64, 1000] {
        let est = partial_sum_moment_suite(m, reps, |rep| Ok(rademacher_sum(root.child(m).child(rep), m)))?;
        for e in est {
            r.bracket(format!("M{m}_order{}", e.order), e.value, e.stderr, rademacher_moment(m, e.order));
        }
    }
    Ok(r)
}

fn symbol_histograms(h: &HierarchyWindow) -> [Vec<u64>; 2] {
    let level1 = &h.level(1).symbols;
    let level2 = &h.level(2).symbols;
    let hist = |s: &[u8]| {
        let mut c = vec![0u64; 7];
        for &x in s {
            c[x as usize] += 1;
        }
        c
    };
    [hist(level1), hist(level2)]
}

/// Literal regeneration against coupling from the past.
pub fn cross_mode_report(params: &CampaignParams) -> Result<CampaignReport> {
    let positions = params.positions_or(1_700_000) as i64;
    let pairs = params.replicates_or(100);
    let mut r = CampaignReport::new("cross-mode", params.seed);
    r.param("positions", positions).param("nested_pairs", pairs);
    let cfg = SamplerConfig { min_depth: 2, literal_depth: 2, ..params.config() };
    let root = params.root();
    let chain = build_keyed((0, positions - 1), &cfg, root)?;
    let literal_same = literal_build_keyed((0, positions - 1), &cfg, root)?;
    let identical = (1..=2).all(|u| chain.level(u) == literal_same.level(u));
    r.exact("same_seed_levels_identical", flag(identical), 1.0, identical);
    let literal_other = literal_build_keyed((0, positions - 1), &cfg, root.child(tag::MEASURE))?;
    let a = symbol_histograms(&chain);
    let b = symbol_histograms(&literal_other);
    for level in 0..2 {
        let samples = b[level].iter().sum::<u64>();
        r.exact(format!("level{}_literal_samples", level + 1), samples as f64, 100_000.0, samples >= 100_000 || params.positions.is_some());
        let test = chi_square_homogeneity(&a[level], &b[level], params.significance)?;
        r.chi_square(format!("level{}_histogram_homogeneity", level + 1), &test);
    }
    let consumed = chain.level(2).symbols.len() as i64 - 1 == chain.ones(1).ordinal_at(positions - 1) - chain.ones(1).ordinal_at(0);
    r.exact("level2_reads_level1_ones", flag(consumed), 1.0, consumed);
    let s_ok = literal_other.levels.iter().all(|l| l.satisfies_condition_s());
    r.exact("literal_condition_s", flag(s_ok), 1.0, s_ok);

    let mut rng = root.child(tag::INDEX_SETS).stream();
    let mut overlap_ok = true;
    let fast = params.config();
    for p in 0..pairs {
        use rand::Rng;
        let a = rng.random_range(-50_000i64..50_000);
        let b = a + rng.random_range(0i64..20_000);
        let (c, d) = (a + rng.random_range(0..=(b - a)), b);
        let c = c.min(d);
        let key = root.child(tag::REPLICATE).child(p);
        let outer = build_keyed((a - 5_000, b + 5_000), &fast, key)?;
        let inner = build_keyed((c, d), &fast, key)?;
        let level1 = sample_stationary_path_cftp(c, d, key, fast.backward_budget)?;
        overlap_ok &= (c..=d).all(|k| {
            outer.n_at(k) == inner.n_at(k)
                && outer.j_at(k) == inner.j_at(k)
                && (1..=3).all(|u| outer.symbol(u, k) == inner.symbol(u, k))
                && level1.spaced_at(k) == outer.symbol(1, k)
        });
    }
    r.exact("nested_windows_agree", flag(overlap_ok), 1.0, overlap_ok);
    Ok(r)
}

/// Summary of exact values printed by the `exact` command.
pub fn exact_summary() -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    out.insert("pattern_probability".into(), pattern_probability().to_string());
    out.insert("rademacher_sixth_moment".into(), rademacher_sixth_moment_bruteforce().to_string());
    out.insert("ord_sixth_moment".into(), ord_sixth_moment_bruteforce().to_string());
    out.insert("gap_level0".into(), sixth_moment_gap(0, [1; 6]).expect("valid").to_string());
    out
}
