//! The key measure on six-tuples of odd parity and the recursive
//! ord/cen/fri/pos family built from it.
//!
//! A level-`n` vector has `6^n` coordinates. Its top base-6 digit selects a
//! coordinate of the level's key vector, the remaining digits index one of six
//! independent level-`n-1` "pos" vectors. Unrolled, a coordinate is the product
//! of one key-vector entry per tree node on the root-to-leaf path, so single
//! coordinates can be drawn without materializing the whole vector.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::Key;

pub type Rational = BigRational;

pub(crate) fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn pow6(n: u32) -> u128 {
    6u128.pow(n)
}

/// Element of {-1,+1}^(6^level), bit-packed (set bit = -1).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector {
    level: u32,
    len: usize,
    minus: Vec<u64>,
}

impl SignVector {
    pub fn from_signs(level: u32, signs: &[i8]) -> Result<Self> {
        let len = pow6(level) as usize;
        if signs.len() != len {
            return Err(Error::invalid(format!("level {level} needs {len} entries, got {}", signs.len())));
        }
        let mut minus = vec![0u64; len.div_ceil(64)];
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => minus[i / 64] |= 1 << (i % 64),
                _ => return Err(Error::invalid(format!("entry {i} is {s}, not +/-1"))),
            }
        }
        Ok(SignVector { level, len, minus })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> i8 {
        assert!(i < self.len, "coordinate {i} out of range");
        if self.minus[i / 64] >> (i % 64) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn to_signs(&self) -> Vec<i8> {
        self.iter().collect()
    }

    pub fn minus_count(&self) -> usize {
        self.minus.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn sum(&self) -> i64 {
        self.len as i64 - 2 * self.minus_count() as i64
    }

    pub fn product(&self) -> i8 {
        if self.minus_count() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn negated(&self) -> SignVector {
        let signs: Vec<i8> = self.iter().map(|s| -s).collect();
        SignVector::from_signs(self.level, &signs).expect("negation keeps shape")
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.iter() {
            f.write_str(if s == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignVector({}:{})", self.level, self)
    }
}

/// Six signs with product -1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeyVector([i8; 6]);

impl KeyVector {
    pub fn new(entries: [i8; 6]) -> Result<Self> {
        if entries.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::invalid("key vector entries must be +/-1"));
        }
        if entries.iter().map(|&e| e as i32).product::<i32>() != -1 {
            return Err(Error::invalid("key vector must have an odd number of -1 entries"));
        }
        Ok(KeyVector(entries))
    }

    pub fn entries(&self) -> [i8; 6] {
        self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn sum(&self) -> i32 {
        self.0.iter().map(|&e| e as i32).sum()
    }

    pub fn to_sign_vector(&self) -> SignVector {
        SignVector::from_signs(1, &self.0).expect("six entries")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Ord,
    Cen,
    Fri,
    Pos,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 4] = [MeasureKind::Ord, MeasureKind::Cen, MeasureKind::Fri, MeasureKind::Pos];

    pub fn min_level(self) -> u32 {
        match self {
            MeasureKind::Ord | MeasureKind::Cen => 1,
            MeasureKind::Fri | MeasureKind::Pos => 0,
        }
    }

    /// The constraint on the top key vector that realizes this kind's conditioning.
    pub fn constraint(self) -> SumConstraint {
        match self {
            MeasureKind::Ord => SumConstraint::None,
            MeasureKind::Cen => SumConstraint::Sum0,
            MeasureKind::Fri => SumConstraint::Abs4,
            MeasureKind::Pos => SumConstraint::Sum4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Ord => "ord",
            MeasureKind::Cen => "cen",
            MeasureKind::Fri => "fri",
            MeasureKind::Pos => "pos",
        }
    }

    fn check_level(self, n: u32) -> Result<()> {
        if n < self.min_level() {
            Err(Error::invalid(format!("{} requires level >= {}", self.name(), self.min_level())))
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SumConstraint {
    None,
    Sum0,
    Abs4,
    Sum4,
}

impl SumConstraint {
    pub fn admits(self, sum: i32) -> bool {
        match self {
            SumConstraint::None => true,
            SumConstraint::Sum0 => sum == 0,
            SumConstraint::Abs4 => sum.abs() == 4,
            SumConstraint::Sum4 => sum == 4,
        }
    }

    fn slot(self) -> usize {
        match self {
            SumConstraint::None => 0,
            SumConstraint::Sum0 => 1,
            SumConstraint::Abs4 => 2,
            SumConstraint::Sum4 => 3,
        }
    }
}

/// All 32 odd-parity six-tuples, in canonical order ('+' before '-', first
/// coordinate most significant).
pub fn enumerate_upsilon() -> Vec<KeyVector> {
    (0u32..64)
        .filter(|m| m.count_ones() % 2 == 1)
        .map(|m| {
            let mut e = [1i8; 6];
            for (i, x) in e.iter_mut().enumerate() {
                if m >> (5 - i) & 1 == 1 {
                    *x = -1;
                }
            }
            KeyVector(e)
        })
        .collect()
}

fn subsets() -> &'static [Vec<KeyVector>; 4] {
    static TABLE: OnceLock<[Vec<KeyVector>; 4]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let all = enumerate_upsilon();
        let pick = |c: SumConstraint| all.iter().copied().filter(|v| c.admits(v.sum())).collect::<Vec<_>>();
        [
            pick(SumConstraint::None),
            pick(SumConstraint::Sum0),
            pick(SumConstraint::Abs4),
            pick(SumConstraint::Sum4),
        ]
    })
}

/// The elements of the key set admitted by `constraint`.
pub fn upsilon_subset(constraint: SumConstraint) -> &'static [KeyVector] {
    &subsets()[constraint.slot()]
}

/// Uniform draw from the constrained subset of the key set, which is the
/// conditional key law because the key law is uniform.
pub fn sample_key<R: Rng + ?Sized>(constraint: SumConstraint, rng: &mut R) -> KeyVector {
    let set = upsilon_subset(constraint);
    set[rng.random_range(0..set.len())]
}

/// A level vector addressed lazily by coordinate. Each tree node draws its key
/// vector from a sub-key derived from its position in the tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LazyLevelVector {
    key: Key,
    level: u32,
    kind: MeasureKind,
}

impl LazyLevelVector {
    pub fn new(level: u32, kind: MeasureKind, key: Key) -> Result<Self> {
        kind.check_level(level)?;
        if level > 48 {
            return Err(Error::invalid("levels above 48 overflow the coordinate type"));
        }
        Ok(LazyLevelVector { key, level, kind })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> u128 {
        pow6(self.level)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn node_key(&self, depth: u32, prefix: u128) -> Key {
        self.key.child(depth as u64).child(prefix as u64).child((prefix >> 64) as u64)
    }

    /// Key vector at the node reached by the top `depth` digits `prefix`.
    pub fn node(&self, depth: u32, prefix: u128) -> KeyVector {
        let constraint = if depth == 0 { self.kind.constraint() } else { SumConstraint::Sum4 };
        sample_key(constraint, &mut self.node_key(depth, prefix).stream())
    }

    pub fn entry(&self, j: u128) -> i8 {
        assert!(j < self.len(), "coordinate {j} outside 0..6^{}", self.level);
        if self.level == 0 {
            return match self.kind {
                MeasureKind::Fri => {
                    if self.key.coin(0) {
                        -1
                    } else {
                        1
                    }
                }
                _ => 1,
            };
        }
        let mut sign = 1i8;
        for depth in 0..self.level {
            let below = pow6(self.level - depth - 1);
            let prefix = j / (below * 6);
            let digit = (j / below) % 6;
            sign *= self.node(depth, prefix).get(digit as usize);
        }
        sign
    }

    pub fn materialize(&self) -> SignVector {
        let signs: Vec<i8> = (0..self.len()).map(|j| self.entry(j)).collect();
        SignVector::from_signs(self.level, &signs).expect("length matches level")
    }
}

/// A draw from the level-`n` measure of the given kind.
pub fn sample_level(n: u32, kind: MeasureKind, key: Key) -> Result<SignVector> {
    if n > 8 {
        return Err(Error::invalid("materialized vectors are limited to level 8; use LazyLevelVector"));
    }
    Ok(LazyLevelVector::new(n, kind, key)?.materialize())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    support: Vec<(SignVector, Rational)>,
}

#[derive(Serialize)]
struct AtomJson {
    vector: String,
    prob_num: String,
    prob_den: String,
}

impl ExactDistribution {
    fn from_map(map: BTreeMap<String, (SignVector, Rational)>) -> Self {
        let support = map.into_values().filter(|(_, p)| !p.is_zero()).collect();
        ExactDistribution { support }
    }

    pub fn support(&self) -> &[(SignVector, Rational)] {
        &self.support
    }

    pub fn total_mass(&self) -> Rational {
        self.support.iter().fold(Rational::zero(), |acc, (_, p)| acc + p)
    }

    pub fn prob(&self, v: &SignVector) -> Rational {
        self.support
            .iter()
            .find(|(x, _)| x == v)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn to_json(&self) -> String {
        let atoms: Vec<AtomJson> = self
            .support
            .iter()
            .map(|(v, p)| AtomJson { vector: v.to_string(), prob_num: p.numer().to_string(), prob_den: p.denom().to_string() })
            .collect();
        serde_json::to_string_pretty(&atoms).expect("plain data serializes")
    }
}

fn condition(law: &BTreeMap<String, (SignVector, Rational)>, keep: impl Fn(&SignVector) -> bool) -> ExactDistribution {
    let mass = law.values().filter(|(v, _)| keep(v)).fold(Rational::zero(), |a, (_, p)| a + p);
    let map = law
        .iter()
        .filter(|(_, (v, _))| keep(v))
        .map(|(s, (v, p))| (s.clone(), (v.clone(), p / &mass)))
        .collect();
    ExactDistribution::from_map(map)
}

/// Fully enumerated law at level 0 or 1, built from the definition: the
/// unconstrained vector is enumerated and then conditioned on its sum.
pub fn exact_distribution(n: u32, kind: MeasureKind) -> Result<ExactDistribution> {
    kind.check_level(n)?;
    match n {
        0 => {
            let plus = SignVector::from_signs(0, &[1])?;
            let minus = SignVector::from_signs(0, &[-1])?;
            let mut map = BTreeMap::new();
            match kind {
                MeasureKind::Fri => {
                    map.insert(plus.to_string(), (plus, ratio(1, 2)));
                    map.insert(minus.to_string(), (minus, ratio(1, 2)));
                }
                _ => {
                    map.insert(plus.to_string(), (plus, Rational::one()));
                }
            }
            Ok(ExactDistribution::from_map(map))
        }
        1 => {
            // Z = V * W where each level-0 pos block is the point mass +1.
            let mut ord = BTreeMap::new();
            let weight = ratio(1, 32);
            for v in enumerate_upsilon() {
                let z = v.to_sign_vector();
                let entry = ord.entry(z.to_string()).or_insert((z, Rational::zero()));
                entry.1 += &weight;
            }
            let dist = match kind {
                MeasureKind::Ord => ExactDistribution::from_map(ord),
                MeasureKind::Cen => condition(&ord, |v| v.sum() == 0),
                MeasureKind::Fri => condition(&ord, |v| v.sum().abs() == 4),
                MeasureKind::Pos => condition(&ord, |v| v.sum() == 4),
            };
            Ok(dist)
        }
        _ => Err(Error::invalid("exact enumeration is limited to levels 0 and 1; use sum_distribution")),
    }
}

/// Exact law of a scalar, as (value, probability) pairs in increasing value order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarDistribution {
    pub atoms: Vec<(BigInt, Rational)>,
}

impl ScalarDistribution {
    pub fn prob(&self, value: &BigInt) -> Rational {
        self.atoms.iter().find(|(v, _)| v == value).map(|(_, p)| p.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn moment(&self, order: u32) -> Rational {
        self.atoms.iter().fold(Rational::zero(), |acc, (v, p)| acc + Rational::from_integer(num_traits::pow(v.clone(), order as usize)) * p)
    }
}

/// Exact law of the coordinate sum at level `n >= 1`, derived from the key
/// sum law scaled by the `4^(n-1)` contributed by the pos blocks.
pub fn sum_distribution(n: u32, kind: MeasureKind) -> Result<ScalarDistribution> {
    if n == 0 {
        return Err(Error::invalid("sum_distribution requires level >= 1"));
    }
    let scale = num_traits::pow(BigInt::from(4), (n - 1) as usize);
    let mut key_law: BTreeMap<i32, Rational> = BTreeMap::new();
    for v in enumerate_upsilon() {
        *key_law.entry(v.sum()).or_insert_with(Rational::zero) += ratio(1, 32);
    }
    let admitted: Vec<(i32, Rational)> = key_law.into_iter().filter(|(s, _)| kind.constraint().admits(*s)).collect();
    let mass = admitted.iter().fold(Rational::zero(), |a, (_, p)| a + p);
    let atoms = admitted
        .into_iter()
        .map(|(s, p)| (BigInt::from(s) * &scale, p / &mass))
        .collect();
    Ok(ScalarDistribution { atoms })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactMoments {
    pub level: u32,
    pub coordinate_mean_pos: Rational,
    /// Undefined at level 0, where ord does not exist.
    pub sixth_moment_sum_ord: Option<Rational>,
    /// Almost-sure value of the coordinate product; `None` where it is not constant.
    pub product_parity: Vec<(MeasureKind, Option<i8>)>,
}

fn product_parity(n: u32, kind: MeasureKind) -> Option<i8> {
    if n == 0 {
        return match kind {
            MeasureKind::Pos => Some(1),
            _ => None,
        };
    }
    // prod(Z) = prod(V)^(6^(n-1)) * prod over the six pos sub-blocks.
    let key_parity: i8 = -1;
    let key_part = if pow6(n - 1) % 2 == 0 { 1 } else { key_parity };
    let sub = product_parity(n - 1, MeasureKind::Pos)?;
    Some(key_part * sub.pow(6))
}

pub fn exact_moments(n: u32) -> ExactMoments {
    let pos_keys = upsilon_subset(SumConstraint::Sum4);
    let key_mean = pos_keys.iter().fold(Rational::zero(), |a, v| a + ratio(v.get(0) as i64, 1)) / ratio(pos_keys.len() as i64, 1);
    let coordinate_mean_pos = num_traits::pow(key_mean, n as usize);
    let sixth_moment_sum_ord = if n >= 1 {
        Some(sum_distribution(n, MeasureKind::Ord).expect("level >= 1").moment(6))
    } else {
        None
    };
    let product_parity = MeasureKind::ALL
        .iter()
        .filter(|k| n >= k.min_level())
        .map(|&k| (k, product_parity(n, k)))
        .collect();
    ExactMoments { level: n, coordinate_mean_pos, sixth_moment_sum_ord, product_parity }
}

/// `(2/3)^(6n) * 6! * prod(counts)`: the excess sixth moment of a sum over a
/// set meeting the six level-`n` sub-blocks in `counts` positions each.
pub fn sixth_moment_gap(n: u32, counts: [u64; 6]) -> Result<Rational> {
    let cap = pow6(n);
    if let Some(c) = counts.iter().find(|&&c| c as u128 > cap) {
        return Err(Error::invalid(format!("count {c} exceeds 6^{n} = {cap}")));
    }
    let base = num_traits::pow(ratio(2, 3), 6 * n as usize);
    let prod = counts.iter().fold(BigInt::one(), |a, &c| a * BigInt::from(c));
    Ok(base * Rational::from_integer(BigInt::from(720) * prod))
}

/// `E S^6` for a sum of six independent fair signs, by enumerating all 64 outcomes.
pub fn rademacher_sixth_moment_bruteforce() -> Rational {
    let total: i64 = (0u32..64).map(|m| (6 - 2 * m.count_ones() as i64).pow(6)).sum();
    ratio(total, 64)
}

/// `E S^6` of the coordinate sum under the enumerated level-1 ord law.
pub fn ord_sixth_moment_bruteforce() -> Rational {
    let law = exact_distribution(1, MeasureKind::Ord).expect("level 1");
    law.support().iter().fold(Rational::zero(), |a, (v, p)| a + ratio(v.sum().pow(6), 1) * p)
}

pub fn is_symmetric(dist: &ExactDistribution) -> bool {
    dist.support().iter().all(|(v, p)| dist.prob(&v.negated()) == *p)
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let (n, d) = (r.numer().abs(), r.denom().clone());
    // Scale down very large operands before converting.
    let shift = n.bits().max(d.bits()).saturating_sub(1000);
    let nf = (n >> shift as usize).to_f64().unwrap_or(f64::INFINITY);
    let df = (d >> shift as usize).to_f64().unwrap_or(f64::INFINITY);
    sign * nf / df
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::tag;

    #[test]
    fn upsilon_has_32_odd_tuples() {
        let u = enumerate_upsilon();
        assert_eq!(u.len(), 32);
        assert!(u.contains(&KeyVector([-1, 1, 1, 1, 1, 1])));
        assert!(!u.iter().any(|v| v.entries() == [1; 6]));
        let mut sorted = u.clone();
        sorted.sort_by_key(|v| v.to_sign_vector().to_string());
        assert_eq!(sorted, u);
    }

    #[test]
    fn subset_sizes() {
        assert_eq!(upsilon_subset(SumConstraint::Sum0).len(), 20);
        assert_eq!(upsilon_subset(SumConstraint::Abs4).len(), 12);
        assert_eq!(upsilon_subset(SumConstraint::Sum4).len(), 6);
        assert!(upsilon_subset(SumConstraint::Sum4).iter().all(|v| v.0.iter().filter(|&&e| e == -1).count() == 1));
        assert!(upsilon_subset(SumConstraint::Sum0).iter().all(|v| v.0.iter().filter(|&&e| e == -1).count() == 3));
        assert!(upsilon_subset(SumConstraint::None).iter().all(|v| [-4, 0, 4].contains(&v.sum())));
    }

    #[test]
    fn key_vector_rejects_even_parity() {
        assert!(KeyVector::new([1; 6]).is_err());
        assert!(KeyVector::new([-1, 1, 1, 1, 1, 1]).is_ok());
    }

    #[test]
    fn pos_level0_is_plus_one() {
        for s in 0..20 {
            let v = sample_level(0, MeasureKind::Pos, Key::from_seed(s)).unwrap();
            assert_eq!(v.to_signs(), vec![1]);
        }
    }

    #[test]
    fn ord_level1_is_a_key_vector() {
        let v = sample_level(1, MeasureKind::Ord, Key::from_seed(5)).unwrap();
        assert_eq!(v.product(), -1);
    }

    #[test]
    fn ord_and_cen_reject_level0() {
        assert!(sample_level(0, MeasureKind::Ord, Key::from_seed(1)).is_err());
        assert!(sample_level(0, MeasureKind::Cen, Key::from_seed(1)).is_err());
        assert!(exact_distribution(0, MeasureKind::Cen).is_err());
        assert!(exact_distribution(2, MeasureKind::Ord).is_err());
    }

    #[test]
    fn lazy_entries_match_materialized() {
        let lazy = LazyLevelVector::new(3, MeasureKind::Cen, Key::from_seed(77)).unwrap();
        let full = lazy.materialize();
        for j in [0u128, 1, 35, 100, 215] {
            assert_eq!(lazy.entry(j), full.get(j as usize));
        }
        assert_eq!(full.sum(), 0);
    }

    #[test]
    fn pos_sums_are_powers_of_four() {
        let base = Key::from_seed(11).child(tag::MEASURE);
        for n in 0..=4u32 {
            for r in 0..200 {
                let v = sample_level(n, MeasureKind::Pos, base.child(r)).unwrap();
                assert_eq!(v.sum(), 4i64.pow(n));
            }
        }
    }

    #[test]
    fn exact_level1_laws() {
        let ord = exact_distribution(1, MeasureKind::Ord).unwrap();
        assert_eq!(ord.support().len(), 32);
        assert!(ord.support().iter().all(|(_, p)| *p == ratio(1, 32)));
        let cen = exact_distribution(1, MeasureKind::Cen).unwrap();
        assert_eq!(cen.support().len(), 20);
        assert!(cen.support().iter().all(|(_, p)| *p == ratio(1, 20)));
        let fri0 = exact_distribution(0, MeasureKind::Fri).unwrap();
        assert_eq!(fri0.support().len(), 2);
        assert!(fri0.support().iter().all(|(_, p)| *p == ratio(1, 2)));
        for k in MeasureKind::ALL {
            assert_eq!(exact_distribution(1, k).unwrap().total_mass(), Rational::one());
        }
    }

    #[test]
    fn mixture_identity_atomwise() {
        let ord = exact_distribution(1, MeasureKind::Ord).unwrap();
        let cen = exact_distribution(1, MeasureKind::Cen).unwrap();
        let fri = exact_distribution(1, MeasureKind::Fri).unwrap();
        for (v, p) in ord.support() {
            assert_eq!(*p, ratio(5, 8) * cen.prob(v) + ratio(3, 8) * fri.prob(v));
        }
    }

    #[test]
    fn symmetry() {
        for n in 0..=1 {
            for k in [MeasureKind::Ord, MeasureKind::Cen, MeasureKind::Fri] {
                if n >= k.min_level() {
                    assert!(is_symmetric(&exact_distribution(n, k).unwrap()), "{k:?} level {n}");
                }
            }
        }
    }

    #[test]
    fn five_coordinate_marginals_are_uniform() {
        let ord = exact_distribution(1, MeasureKind::Ord).unwrap();
        for drop in 0..6 {
            let mut marg: BTreeMap<Vec<i8>, Rational> = BTreeMap::new();
            for (v, p) in ord.support() {
                let mut s = v.to_signs();
                s.remove(drop);
                *marg.entry(s).or_insert_with(Rational::zero) += p;
            }
            assert_eq!(marg.len(), 32);
            assert!(marg.values().all(|p| *p == ratio(1, 32)));
        }
    }

    #[test]
    fn sum_laws() {
        let ord2 = sum_distribution(2, MeasureKind::Ord).unwrap();
        assert_eq!(ord2.prob(&BigInt::from(0)), ratio(5, 8));
        assert_eq!(ord2.prob(&BigInt::from(16)), ratio(3, 16));
        assert_eq!(ord2.prob(&BigInt::from(-16)), ratio(3, 16));
        let pos3 = sum_distribution(3, MeasureKind::Pos).unwrap();
        assert_eq!(pos3.atoms, vec![(BigInt::from(64), Rational::one())]);
        let fri1 = sum_distribution(1, MeasureKind::Fri).unwrap();
        assert_eq!(fri1.prob(&BigInt::from(-4)), ratio(1, 2));
        assert_eq!(fri1.prob(&BigInt::from(4)), ratio(1, 2));
        let cen = sum_distribution(4, MeasureKind::Cen).unwrap();
        assert_eq!(cen.atoms, vec![(BigInt::from(0), Rational::one())]);
        assert!(sum_distribution(0, MeasureKind::Pos).is_err());
    }

    #[test]
    fn moments_table() {
        assert_eq!(exact_moments(2).coordinate_mean_pos, ratio(4, 9));
        assert_eq!(exact_moments(1).sixth_moment_sum_ord, Some(ratio(1536, 1)));
        for n in 1..=4u32 {
            let expect = ratio(3, 8) * ratio(4i64.pow(6 * n), 1);
            assert_eq!(exact_moments(n).sixth_moment_sum_ord, Some(expect));
        }
        let m1 = exact_moments(1);
        assert!(m1.product_parity.iter().all(|(_, p)| *p == Some(-1)));
        let m3 = exact_moments(3);
        assert!(m3.product_parity.iter().all(|(_, p)| *p == Some(1)));
    }

    #[test]
    fn parity_matches_enumeration_at_level1() {
        for k in MeasureKind::ALL {
            let d = exact_distribution(1, k).unwrap();
            assert!(d.support().iter().all(|(v, _)| v.product() == -1));
        }
    }

    #[test]
    fn parity_matches_sampling_at_level2() {
        for r in 0..200 {
            let v = sample_level(2, MeasureKind::Cen, Key::from_seed(r)).unwrap();
            assert_eq!(v.product(), 1);
            assert_eq!(v.sum(), 0);
        }
    }

    #[test]
    fn gap_values() {
        assert_eq!(sixth_moment_gap(0, [1; 6]).unwrap(), ratio(720, 1));
        assert_eq!(sixth_moment_gap(2, [3, 0, 5, 1, 1, 1]).unwrap(), Rational::zero());
        assert_eq!(sixth_moment_gap(1, [6; 6]).unwrap(), ratio(2_949_120, 1));
        assert!(sixth_moment_gap(1, [7, 1, 1, 1, 1, 1]).is_err());
    }

    #[test]
    fn brute_force_gap_identity() {
        assert_eq!(rademacher_sixth_moment_bruteforce(), ratio(2256, 1));
        assert_eq!(ord_sixth_moment_bruteforce(), ratio(1536, 1));
    }

    #[test]
    fn json_is_sorted_and_exact() {
        let j = exact_distribution(1, MeasureKind::Pos).unwrap().to_json();
        let parsed: serde_json::Value = serde_json::from_str(&j).unwrap();
        let arr = parsed.as_array().unwrap();
        assert_eq!(arr.len(), 6);
        assert_eq!(arr[0]["vector"], "+++++-");
        assert_eq!(arr[0]["prob_num"], "1");
        assert_eq!(arr[0]["prob_den"], "6");
    }
}
