//! Z/NZ, its characters, dense sets as bitsets, and rational measures.
//!
//! Dense sets are stored as packed 64-bit words. The two kernels everything
//! else leans on are cyclic rotation (for translates) and
//! rotate-intersect-popcount (for convolutions of indicators with uniform
//! cutoffs, computed as exact integer counts rather than floats).

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational scalar used for radii, densities, and thresholds.
pub type Rat = Ratio<i128>;

pub fn rat_f64(r: Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Serialize a `Rat` as the string "p/q" (and parse either "p/q" or "p").
pub mod rat_serde {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let text = String::deserialize(d)?;
        parse_rat(&text).map_err(D::Error::custom)
    }
}

pub fn parse_rat(text: &str) -> std::result::Result<Rat, String> {
    let mut parts = text.splitn(2, '/');
    let p: i128 = parts
        .next()
        .unwrap()
        .trim()
        .parse()
        .map_err(|e| format!("bad numerator in {text:?}: {e}"))?;
    let q: i128 = match parts.next() {
        Some(q) => q
            .trim()
            .parse()
            .map_err(|e| format!("bad denominator in {text:?}: {e}"))?,
        None => 1,
    };
    if q == 0 {
        return Err(format!("zero denominator in {text:?}"));
    }
    Ok(Rat::new(p, q))
}

/// The ambient group Z/NZ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicGroup {
    n: u64,
}

impl CyclicGroup {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("group order must be positive".into()));
        }
        Ok(CyclicGroup { n })
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn reduce_i128(&self, v: i128) -> u64 {
        let n = self.n as i128;
        (((v % n) + n) % n) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        (s % self.n as u128) as u64
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.n - a
        }
    }

    #[inline]
    pub fn mul_mod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.n as u128) as u64
    }

    /// Integer norm n*||t x / n||: the distance of t*x to 0 around the cycle,
    /// in units of 1/n. Always in [0, n/2].
    #[inline]
    pub fn norm_int(&self, t: u64, x: u64) -> u64 {
        let k = self.mul_mod(t, x);
        k.min(self.n - k)
    }

    pub fn same(&self, other: &CyclicGroup) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GroupMismatch { left: self.n, right: other.n })
        }
    }
}

/// ||k/n||: the distance of the residue k/n to the nearest integer, as an
/// exact rational in [0, 1/2].
pub fn valuation(group: &CyclicGroup, k: u64) -> Rat {
    let n = group.n();
    let k = k % n;
    Rat::new(k.min(n - k) as i128, n as i128)
}

/// A character of Z/NZ, identified by its frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Character {
    pub freq: u64,
}

impl Character {
    pub fn new(group: &CyclicGroup, freq: u64) -> Self {
        Character { freq: freq % group.n() }
    }
}

/// gamma_t(x) = e^(2 pi i t x / n). The angle is reduced mod n first so the
/// evaluation stays accurate for huge t*x.
pub fn char_eval(group: &CyclicGroup, chi: Character, x: u64) -> Complex64 {
    let k = group.mul_mod(chi.freq, x);
    let angle = 2.0 * std::f64::consts::PI * (k as f64) / (group.n() as f64);
    Complex64::new(angle.cos(), angle.sin())
}

/// |1 - gamma_t(x)| = 2 |sin(pi t x / n)|, computed from the reduced angle.
pub fn one_minus_char_abs(group: &CyclicGroup, t: u64, x: u64) -> f64 {
    let k = group.norm_int(t, x);
    2.0 * (std::f64::consts::PI * (k as f64) / (group.n() as f64)).sin().abs()
}

// --- bit-level helpers -----------------------------------------------------

#[inline]
fn word_count(n: u64) -> usize {
    ((n + 63) / 64) as usize
}

/// Read `width <= 64` bits of `src` starting at linear bit offset `off`.
/// Bits past the end of `src` read as zero.
#[inline]
fn read_bits(src: &[u64], off: u64, width: u64) -> u64 {
    debug_assert!(width >= 1 && width <= 64);
    let w = (off >> 6) as usize;
    let b = off & 63;
    let lo = src.get(w).copied().unwrap_or(0) >> b;
    let hi = if b == 0 { 0 } else { src.get(w + 1).copied().unwrap_or(0) << (64 - b) };
    let v = lo | hi;
    if width == 64 {
        v
    } else {
        v & ((1u64 << width) - 1)
    }
}

/// OR the linear bit range [s0, s0+len) of `src` into [d0, d0+len) of `dst`.
fn or_bits(src: &[u64], s0: u64, dst: &mut [u64], d0: u64, len: u64) {
    let mut done = 0u64;
    while done < len {
        let dp = d0 + done;
        let take = (64 - (dp & 63)).min(len - done);
        let bits = read_bits(src, s0 + done, take);
        dst[(dp >> 6) as usize] |= bits << (dp & 63);
        done += take;
    }
}

/// dst |= rotate(src, s) where bit x of src lands at bit (x+s) mod n of dst.
fn or_rotated(src: &[u64], dst: &mut [u64], s: u64, n: u64) {
    let s = s % n;
    if s == 0 {
        for (d, &w) in dst.iter_mut().zip(src) {
            *d |= w;
        }
        return;
    }
    or_bits(src, 0, dst, s, n - s);
    or_bits(src, n - s, dst, 0, s);
}

// --- DenseSet ---------------------------------------------------------------

/// A subset of Z/NZ stored as a packed bitset. Bits at positions >= n are
/// kept zero as an invariant.
#[derive(Clone, PartialEq, Eq)]
pub struct DenseSet {
    n: u64,
    words: Vec<u64>,
}

impl fmt::Debug for DenseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseSet(n={}, |A|={})", self.n, self.len())
    }
}

impl DenseSet {
    pub fn empty(group: &CyclicGroup) -> Self {
        DenseSet { n: group.n(), words: vec![0; word_count(group.n())] }
    }

    pub fn full(group: &CyclicGroup) -> Self {
        let mut s = Self::empty(group);
        for x in 0..group.n() {
            s.insert(x);
        }
        s
    }

    pub fn from_members(group: &CyclicGroup, members: &[u64]) -> Result<Self> {
        let mut s = Self::empty(group);
        for &m in members {
            if m >= group.n() {
                return Err(Error::InvalidParameter(format!(
                    "member {m} out of range for Z/{}",
                    group.n()
                )));
            }
            s.insert(m);
        }
        Ok(s)
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn group(&self) -> CyclicGroup {
        CyclicGroup { n: self.n }
    }

    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        debug_assert!(x < self.n);
        self.words[(x >> 6) as usize] >> (x & 63) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, x: u64) {
        debug_assert!(x < self.n);
        self.words[(x >> 6) as usize] |= 1u64 << (x & 63);
    }

    #[inline]
    pub fn remove(&mut self, x: u64) {
        debug_assert!(x < self.n);
        self.words[(x >> 6) as usize] &= !(1u64 << (x & 63));
    }

    pub fn len(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn density(&self) -> Rat {
        Rat::new(self.len() as i128, self.n as i128)
    }

    pub fn members(&self) -> Vec<u64> {
        self.iter_members().collect()
    }

    pub fn iter_members(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(move |(i, &w)| {
            let base = (i as u64) << 6;
            BitIter { word: w }.map(move |b| base + b)
        })
    }

    /// x + A (the translate of the set by x).
    pub fn translate(&self, s: u64) -> Self {
        let mut out = DenseSet { n: self.n, words: vec![0; self.words.len()] };
        or_rotated(&self.words, &mut out.words, s % self.n, self.n);
        out
    }

    /// -A (the reflection of the set through 0).
    pub fn reflect(&self) -> Self {
        let g = self.group();
        let mut out = DenseSet::empty(&g);
        for x in self.iter_members() {
            out.insert(g.neg(x));
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.reflect()
    }

    pub fn union(&self, other: &Self) -> Self {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        DenseSet { n: self.n, words }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        DenseSet { n: self.n, words }
    }

    pub fn difference(&self, other: &Self) -> Self {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect();
        DenseSet { n: self.n, words }
    }

    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        mask_tail(&mut words, self.n);
        DenseSet { n: self.n, words }
    }

    pub fn intersect_count(&self, other: &Self) -> u64 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    /// |A intersect (s + B)| as an exact count.
    pub fn count_intersect_translated(&self, other: &Self, s: u64) -> u64 {
        let mut scratch = vec![0u64; self.words.len()];
        or_rotated(&other.words, &mut scratch, s % self.n, self.n);
        self.words
            .iter()
            .zip(&scratch)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    /// c[x] = |A intersect (x + B)| for every x, with B typically a symmetric
    /// cutoff. This is the integer form of the convolution indicator_A * beta_B
    /// (up to the 1/|B| normalization) and is the workhorse of the drivers.
    pub fn correlation_counts(&self, other: &Self) -> Vec<u64> {
        let n = self.n;
        let mut out = vec![0u64; n as usize];
        let mut scratch = vec![0u64; self.words.len()];
        for x in 0..n {
            for w in scratch.iter_mut() {
                *w = 0;
            }
            or_rotated(&other.words, &mut scratch, x, n);
            let mut c = 0u64;
            for (a, b) in self.words.iter().zip(&scratch) {
                c += (a & b).count_ones() as u64;
            }
            out[x as usize] = c;
        }
        out
    }

    /// A + B by iterating the smaller set and OR-ing rotations of the larger.
    pub fn sumset(&self, other: &Self) -> Self {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let mut out = DenseSet { n: self.n, words: vec![0; self.words.len()] };
        for a in small.iter_members() {
            or_rotated(&large.words, &mut out.words, a, self.n);
        }
        out
    }

    pub fn indicator_f64(&self) -> Vec<f64> {
        (0..self.n).map(|x| if self.contains(x) { 1.0 } else { 0.0 }).collect()
    }
}

fn mask_tail(words: &mut [u64], n: u64) {
    let rem = n & 63;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
}

struct BitIter {
    word: u64,
}

impl Iterator for BitIter {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        if self.word == 0 {
            None
        } else {
            let b = self.word.trailing_zeros() as u64;
            self.word &= self.word - 1;
            Some(b)
        }
    }
}

/// x + A as a free function, matching the rest of the set algebra.
pub fn translate_set(set: &DenseSet, x: u64) -> DenseSet {
    set.translate(x)
}

impl Serialize for DenseSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            n: u64,
            members: &'a [u64],
        }
        Wire { n: self.n, members: &self.members() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DenseSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            n: u64,
            members: Vec<u64>,
        }
        let wire = Wire::deserialize(d)?;
        let group = CyclicGroup::new(wire.n).map_err(D::Error::custom)?;
        DenseSet::from_members(&group, &wire.members).map_err(D::Error::custom)
    }
}

// --- Measure ----------------------------------------------------------------

/// A finitely supported signed measure on Z/NZ with exact rational weights.
///
/// Uniform cutoffs on Bohr sets, their convolutions, and total-variation
/// distances all stay in exact arithmetic; floating point enters only when a
/// measure is handed to the Fourier layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    n: u64,
    weights: BTreeMap<u64, BigRational>,
}

impl Measure {
    pub fn zero(group: &CyclicGroup) -> Self {
        Measure { n: group.n(), weights: BTreeMap::new() }
    }

    pub fn point_mass(group: &CyclicGroup, x: u64) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(x % group.n(), BigRational::one());
        Measure { n: group.n(), weights }
    }

    /// The uniform probability measure on a nonempty set.
    pub fn uniform_on(set: &DenseSet) -> Result<Self> {
        let size = set.len();
        if size == 0 {
            return Err(Error::InvalidParameter("uniform measure on the empty set".into()));
        }
        let w = BigRational::new(BigInt::from(1), BigInt::from(size));
        let weights = set.iter_members().map(|x| (x, w.clone())).collect();
        Ok(Measure { n: set.n(), weights })
    }

    pub fn from_weights(group: &CyclicGroup, entries: Vec<(u64, BigRational)>) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (x, w) in entries {
            if x >= group.n() {
                return Err(Error::InvalidParameter(format!(
                    "support point {x} out of range for Z/{}",
                    group.n()
                )));
            }
            if !w.is_zero() {
                let slot = weights.entry(x).or_insert_with(BigRational::zero);
                *slot += w;
            }
        }
        weights.retain(|_, w: &mut BigRational| !w.is_zero());
        Ok(Measure { n: group.n(), weights })
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn group(&self) -> CyclicGroup {
        CyclicGroup { n: self.n }
    }

    pub fn weight(&self, x: u64) -> BigRational {
        self.weights.get(&x).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = (&u64, &BigRational)> {
        self.weights.iter()
    }

    pub fn support_set(&self) -> DenseSet {
        let group = self.group();
        let mut s = DenseSet::empty(&group);
        for (&x, _) in &self.weights {
            s.insert(x);
        }
        s
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn mass(&self) -> BigRational {
        self.weights.values().fold(BigRational::zero(), |acc, w| acc + w)
    }

    /// Total-variation style l1 norm: sum of |weights|.
    pub fn l1_norm(&self) -> BigRational {
        self.weights.values().fold(BigRational::zero(), |acc, w| acc + w.abs())
    }

    pub fn translate(&self, s: u64) -> Self {
        let group = self.group();
        let weights = self.weights.iter().map(|(&x, w)| (group.add(x, s), w.clone())).collect();
        Measure { n: self.n, weights }
    }

    pub fn reflect(&self) -> Self {
        let group = self.group();
        let weights = self.weights.iter().map(|(&x, w)| (group.neg(x), w.clone())).collect();
        Measure { n: self.n, weights }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Measure { n: self.n, weights: BTreeMap::new() };
        }
        let weights = self.weights.iter().map(|(&x, w)| (x, w * c)).collect();
        Measure { n: self.n, weights }
    }

    pub fn signed_sum(&self, other: &Self, other_sign: i32) -> Result<Self> {
        self.group().same(&other.group())?;
        let mut weights = self.weights.clone();
        for (&x, w) in &other.weights {
            let slot = weights.entry(x).or_insert_with(BigRational::zero);
            if other_sign >= 0 {
                *slot += w;
            } else {
                *slot -= w;
            }
        }
        weights.retain(|_, w: &mut BigRational| !w.is_zero());
        Ok(Measure { n: self.n, weights })
    }

    /// (mu * nu)(x) = sum_y mu(y) nu(x - y), exact.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.group().same(&other.group())?;
        let group = self.group();
        let mut weights: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (&a, wa) in &self.weights {
            for (&b, wb) in &other.weights {
                let x = group.add(a, b);
                let slot = weights.entry(x).or_insert_with(BigRational::zero);
                *slot += wa * wb;
            }
        }
        weights.retain(|_, w: &mut BigRational| !w.is_zero());
        Ok(Measure { n: self.n, weights })
    }

    pub fn to_f64_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n as usize];
        for (&x, w) in &self.weights {
            out[x as usize] = w.to_f64().unwrap_or(f64::NAN);
        }
        out
    }
}

/// l1 distance between two measures, exact. For probability measures this is
/// the usual total-variation distance up to the conventional factor: two
/// disjoint point masses are at distance 2.
pub fn tv_distance(a: &Measure, b: &Measure) -> Result<BigRational> {
    a.group().same(&b.group())?;
    Ok(a.signed_sum(b, -1)?.l1_norm())
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            n: u64,
            support: Vec<u64>,
            weights: Vec<String>,
        }
        let support: Vec<u64> = self.weights.keys().copied().collect();
        let weights = self.weights.values().map(|w| w.to_string()).collect();
        Wire { n: self.n, support, weights }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            n: u64,
            support: Vec<u64>,
            weights: Vec<String>,
        }
        let wire = Wire::deserialize(d)?;
        if wire.support.len() != wire.weights.len() {
            return Err(D::Error::custom("support and weights length mismatch"));
        }
        let group = CyclicGroup::new(wire.n).map_err(D::Error::custom)?;
        let mut entries = Vec::with_capacity(wire.support.len());
        for (x, w) in wire.support.into_iter().zip(wire.weights) {
            let w: BigRational = w.parse().map_err(|e| D::Error::custom(format!("{e}")))?;
            entries.push((x, w));
        }
        Measure::from_weights(&group, entries).map_err(D::Error::custom)
    }
}
