//! Exact sandbox over F2 vector spaces: Walsh transforms, subspace
//! pigeonhole, and the two model iteration drivers.
//!
//! Addition is XOR, characters are parity functionals indexed by vectors,
//! and Bohr sets collapse to genuine subspaces. Counting convolutions run
//! through an integer Walsh transform so supports are exact at every
//! dimension this module allows; the f64 transform (with 1/2^n averaging,
//! matching the cyclic convention) is reserved for spectra.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::group::Rat;

pub const MAX_DIM: u32 = 20;

/// The ambient space F2^dim with points encoded as bit patterns in 0..2^dim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanSpace {
    dim: u32,
}

impl BooleanSpace {
    pub fn new(dim: u32) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        Ok(BooleanSpace { dim })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn size(&self) -> usize {
        1usize << self.dim
    }
}

/// A subset of F2^dim as a bit array over the 2^dim points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct F2Set {
    dim: u32,
    words: Vec<u64>,
}

impl F2Set {
    pub fn empty(space: &BooleanSpace) -> Self {
        let words = vec![0u64; space.size().div_ceil(64)];
        F2Set { dim: space.dim, words }
    }

    pub fn full(space: &BooleanSpace) -> Self {
        let mut s = Self::empty(space);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.mask_tail();
        s
    }

    pub fn from_members(space: &BooleanSpace, members: &[u32]) -> Result<Self> {
        let mut s = Self::empty(space);
        for &m in members {
            if m as usize >= space.size() {
                return Err(Error::InvalidParameter(format!(
                    "point {m} outside F2^{}",
                    space.dim
                )));
            }
            s.insert(m);
        }
        Ok(s)
    }

    fn mask_tail(&mut self) {
        let n = self.size();
        let last_bits = n % 64;
        if last_bits != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << last_bits) - 1;
        }
    }

    pub fn space(&self) -> BooleanSpace {
        BooleanSpace { dim: self.dim }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn size(&self) -> usize {
        1usize << self.dim
    }

    pub fn contains(&self, x: u32) -> bool {
        let i = x as usize;
        i < self.size() && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, x: u32) {
        let i = x as usize;
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub fn remove(&mut self, x: u32) {
        let i = x as usize;
        self.words[i / 64] &= !(1u64 << (i % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn density(&self) -> Rat {
        Rat::new(self.len() as i128, self.size() as i128)
    }

    pub fn members(&self) -> Vec<u32> {
        self.iter_members().collect()
    }

    pub fn iter_members(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros();
                    bits &= bits - 1;
                    Some(wi as u32 * 64 + b)
                }
            })
        })
    }

    pub fn union(&self, other: &F2Set) -> F2Set {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        F2Set { dim: self.dim, words }
    }

    pub fn intersection(&self, other: &F2Set) -> F2Set {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        F2Set { dim: self.dim, words }
    }

    pub fn complement(&self) -> F2Set {
        let mut out = F2Set {
            dim: self.dim,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.mask_tail();
        out
    }

    pub fn intersect_count(&self, other: &F2Set) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// The set {x ^ t : x in self}.
    pub fn xor_translate(&self, t: u32) -> F2Set {
        let mut out = F2Set {
            dim: self.dim,
            words: vec![0; self.words.len()],
        };
        for m in self.iter_members() {
            out.insert(m ^ t);
        }
        out
    }

    pub fn indicator_f64(&self) -> Vec<f64> {
        (0..self.size() as u32)
            .map(|x| if self.contains(x) { 1.0 } else { 0.0 })
            .collect()
    }

    fn indicator_i64(&self) -> Vec<i64> {
        (0..self.size() as u32)
            .map(|x| if self.contains(x) { 1 } else { 0 })
            .collect()
    }
}

impl Serialize for F2Set {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut bytes = Vec::with_capacity(self.size().div_ceil(8));
        for i in 0..self.size().div_ceil(8) {
            let w = self.words[i / 8];
            bytes.push((w >> (8 * (i % 8))) as u8);
        }
        let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        #[derive(Serialize)]
        struct Repr<'a> {
            dim: u32,
            bits: &'a str,
        }
        Repr { dim: self.dim, bits: &hex }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for F2Set {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            dim: u32,
            bits: String,
        }
        let r = Repr::deserialize(de)?;
        let space = BooleanSpace::new(r.dim).map_err(D::Error::custom)?;
        let expect = space.size().div_ceil(8) * 2;
        if r.bits.len() != expect {
            return Err(D::Error::custom(format!(
                "bit string has {} hex digits, expected {expect}",
                r.bits.len()
            )));
        }
        let mut out = F2Set::empty(&space);
        for (i, chunk) in r.bits.as_bytes().chunks(2).enumerate() {
            let txt = std::str::from_utf8(chunk).map_err(D::Error::custom)?;
            let byte = u8::from_str_radix(txt, 16).map_err(D::Error::custom)?;
            out.words[i / 8] |= (byte as u64) << (8 * (i % 8));
        }
        let raw_tail = out.words.last().copied();
        out.mask_tail();
        if out.words.last().copied() != raw_tail {
            return Err(D::Error::custom("padding bits set beyond the space"));
        }
        Ok(out)
    }
}

/// In-place unscaled Walsh butterfly; applying it twice multiplies by 2^dim.
fn wht_in_place<T>(buf: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let n = buf.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (buf[i], buf[i + h]);
                buf[i] = a + b;
                buf[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Averaged Walsh spectrum: w(gamma) = 2^-dim sum_x f(x) (-1)^(gamma.x).
pub fn walsh_spectrum(f: &[f64]) -> Vec<f64> {
    let mut buf = f.to_vec();
    wht_in_place(&mut buf);
    let scale = 1.0 / f.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    buf
}

/// Exact XOR counting convolution: out[x] = #{(a, b) : a in A, b in B, a ^ b = x}.
pub fn xor_convolve_counting(a: &F2Set, b: &F2Set) -> Vec<i64> {
    let mut fa = a.indicator_i64();
    let mut fb = b.indicator_i64();
    wht_in_place(&mut fa);
    wht_in_place(&mut fb);
    let mut prod: Vec<i64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    wht_in_place(&mut prod);
    let n = prod.len() as i64;
    prod.iter_mut().for_each(|v| {
        debug_assert!(*v % n == 0, "counting convolution not divisible by 2^dim");
        *v /= n;
    });
    prod
}

/// The sumset A + B computed in the transform domain.
pub fn f2_sumset(a: &F2Set, b: &F2Set) -> F2Set {
    let counts = xor_convolve_counting(a, b);
    let mut out = F2Set::empty(&a.space());
    for (x, &c) in counts.iter().enumerate() {
        if c > 0 {
            out.insert(x as u32);
        }
    }
    out
}

/// Row-reduced span of vectors over F2, used for independence tests and as
/// the greedy maximal independent set builder.
#[derive(Debug, Clone, Default)]
pub struct F2Span {
    rows: Vec<u32>,
}

impl F2Span {
    pub fn new() -> Self {
        F2Span { rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn reduce(&self, mut v: u32) -> u32 {
        for &r in &self.rows {
            let pivot = 31 - r.leading_zeros();
            if v >> pivot & 1 == 1 {
                v ^= r;
            }
        }
        v
    }

    pub fn contains(&self, v: u32) -> bool {
        self.reduce(v) == 0
    }

    /// Adds v if it is independent of the rows; reports whether it was added.
    pub fn try_add(&mut self, v: u32) -> bool {
        let reduced = self.reduce(v);
        if reduced == 0 {
            return false;
        }
        self.rows.push(reduced);
        self.rows.sort_by_key(|r| std::cmp::Reverse(*r));
        true
    }
}

/// A basis of {x : row.x = 0 for every row}, with deterministic free-column
/// ordering. Dot products are parities of bitwise ANDs.
pub fn kernel_basis(dim: u32, rows: &[u32]) -> Vec<u32> {
    // Bring the functional matrix to row echelon form.
    let mut echelon: Vec<u32> = Vec::new();
    for &r in rows {
        let mut v = r;
        for &e in &echelon {
            let pivot = 31 - e.leading_zeros();
            if v >> pivot & 1 == 1 {
                v ^= e;
            }
        }
        if v != 0 {
            echelon.push(v);
            echelon.sort_by_key(|x| std::cmp::Reverse(*x));
        }
    }
    // Back substitution to reduced form.
    let reduced = {
        let mut rs = echelon.clone();
        for i in (0..rs.len()).rev() {
            let pivot = 31 - rs[i].leading_zeros();
            for j in 0..i {
                if rs[j] >> pivot & 1 == 1 {
                    rs[j] ^= rs[i];
                }
            }
        }
        rs
    };
    let pivots: Vec<u32> = reduced.iter().map(|r| 31 - r.leading_zeros()).collect();
    let mut basis = Vec::new();
    for col in 0..dim {
        if pivots.contains(&col) {
            continue;
        }
        let mut v = 1u32 << col;
        for (row, &p) in reduced.iter().zip(&pivots) {
            if row >> col & 1 == 1 {
                v |= 1 << p;
            }
        }
        basis.push(v);
    }
    basis
}

fn parity_dot(a: u32, b: u32) -> u32 {
    (a & b).count_ones() & 1
}

/// An affine subspace given by an independent basis and a coset
/// representative; the claimed container inclusion is always re-verified by
/// enumerating the full coset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceWitness {
    pub basis: Vec<u32>,
    #[serde(rename = "coset")]
    pub coset_rep: u32,
}

impl SubspaceWitness {
    pub fn dim(&self) -> u32 {
        self.basis.len() as u32
    }

    pub fn coset_points(&self) -> Vec<u32> {
        let k = self.basis.len();
        (0..1u32 << k)
            .map(|mask| {
                let mut p = self.coset_rep;
                for (i, &b) in self.basis.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        p ^= b;
                    }
                }
                p
            })
            .collect()
    }
}

/// Checks basis independence and enumerates the whole coset against the
/// container.
pub fn verify_subspace(witness: &SubspaceWitness, container: &F2Set) -> Result<()> {
    let mut span = F2Span::new();
    for &b in &witness.basis {
        if !span.try_add(b) {
            return Err(Error::PreconditionViolated(format!(
                "witness basis vector {b} is dependent on the others"
            )));
        }
    }
    for p in witness.coset_points() {
        if !container.contains(p) {
            return Err(Error::PreconditionViolated(format!(
                "witness point {p} escapes the container"
            )));
        }
    }
    Ok(())
}

/// Largest k with 2^k <= 1/sigma.
fn log2_floor_inverse(sigma: Rat) -> u32 {
    let mut k = 0u32;
    while k < 63 {
        let next = Rat::new(1, 1i128 << (k + 1));
        if next >= sigma {
            k += 1;
        } else {
            break;
        }
    }
    k
}

/// Finds a coset of dimension floor(log2(1/sigma)) inside a set of density
/// at least 1 - sigma, by greedy halving: each chosen direction y maximizes
/// the XOR autocorrelation of the current survivor set, keeping its density
/// loss to at most a factor of two per step.
pub fn f2_pigeonhole_subspace(a: &F2Set, sigma: Rat) -> Result<SubspaceWitness> {
    if sigma <= Rat::new(0, 1) || sigma > Rat::new(1, 1) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} outside (0, 1]")));
    }
    let n = a.size() as i128;
    if Rat::new(a.len() as i128, n) < Rat::new(1, 1) - sigma {
        return Err(Error::PreconditionViolated(format!(
            "density {}/{n} below 1 - sigma",
            a.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::PreconditionViolated("empty set".into()));
    }
    let target = log2_floor_inverse(sigma).min(a.dim());

    let mut survivors = a.clone();
    let mut span = F2Span::new();
    let mut basis: Vec<u32> = Vec::new();
    while (basis.len() as u32) < target {
        let corr = xor_convolve_counting(&survivors, &survivors);
        let mut best: Option<(i64, u32)> = None;
        for y in 1..survivors.size() as u32 {
            if span.contains(y) {
                continue;
            }
            let c = corr[y as usize];
            if best.map_or(true, |(bc, _)| c > bc) {
                best = Some((c, y));
            }
        }
        let (count, y) = best.ok_or_else(|| {
            Error::SubspaceNotFound("no independent direction remains".into())
        })?;
        if count == 0 {
            return Err(Error::SubspaceNotFound(format!(
                "survivor set dried up at dimension {} of {target}",
                basis.len()
            )));
        }
        span.try_add(y);
        basis.push(y);
        survivors = survivors.intersection(&survivors.xor_translate(y));
    }
    let rep = survivors
        .iter_members()
        .next()
        .ok_or_else(|| Error::SubspaceNotFound("survivor set empty at full depth".into()))?;
    let witness = SubspaceWitness { basis, coset_rep: rep };
    verify_subspace(&witness, a)?;
    Ok(witness)
}

/// Composition of coset restrictions, mapping current local coordinates
/// into the original space. Pair sumsets travel through the linear part
/// only (offsets cancel in pairs); triple sums keep the offset.
#[derive(Debug, Clone)]
struct Embedding {
    basis: Vec<u32>,
    offset: u32,
}

impl Embedding {
    fn identity(dim: u32) -> Self {
        Embedding {
            basis: (0..dim).map(|i| 1u32 << i).collect(),
            offset: 0,
        }
    }

    fn linear(&self, y: u32) -> u32 {
        let mut out = 0;
        for (i, &b) in self.basis.iter().enumerate() {
            if y >> i & 1 == 1 {
                out ^= b;
            }
        }
        out
    }

    fn point(&self, y: u32) -> u32 {
        self.offset ^ self.linear(y)
    }

    fn restrict(&self, local_basis: &[u32], local_rep: u32) -> Embedding {
        Embedding {
            basis: local_basis.iter().map(|&b| self.linear(b)).collect(),
            offset: self.point(local_rep),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct F2Step {
    pub dim: u32,
    #[serde(with = "crate::group::rat_serde")]
    pub density: Rat,
    pub action: String,
    pub codim_added: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct F2Trace {
    pub steps: Vec<F2Step>,
    pub witness: SubspaceWitness,
    pub witness_dim: u32,
    /// The dimension (pair driver) or codimension bound (triple driver) the
    /// model analysis predicts, for side-by-side reporting only.
    pub bound_formula: f64,
    pub measured: f64,
}

fn restrict_set(embedding: &Embedding, ambient: &F2Set) -> F2Set {
    let dim = embedding.basis.len() as u32;
    let space = BooleanSpace { dim };
    let mut out = F2Set::empty(&space);
    for y in 0..space.size() as u32 {
        if ambient.contains(embedding.point(y)) {
            out.insert(y);
        }
    }
    out
}

/// Character level set and greedy independent pruning for the pair driver:
/// returns functionals whose kernel carries a guaranteed density increment.
fn increment_functionals(
    local: &F2Set,
    complement_of_sumset: &F2Set,
) -> Result<Vec<u32>> {
    let n = local.size() as f64;
    let alpha = local.len() as f64 / n;
    let sigma = complement_of_sumset.len() as f64 / n;
    let s_hat = walsh_spectrum(&complement_of_sumset.indicator_f64());
    let threshold = alpha * sigma / 2.0;
    let mut level: Vec<u32> = (1..local.size() as u32)
        .filter(|&g| s_hat[g as usize].abs() >= threshold)
        .collect();
    if level.is_empty() {
        return Err(Error::IterationDiverged {
            steps: 0,
            reason: "no character clears the level threshold".into(),
        });
    }
    level.sort_by(|&a, &b| {
        s_hat[b as usize]
            .abs()
            .partial_cmp(&s_hat[a as usize].abs())
            .expect("finite spectrum")
            .then(a.cmp(&b))
    });
    let mut span = F2Span::new();
    let mut lambda = Vec::new();
    for g in level {
        if span.try_add(g) {
            lambda.push(g);
        }
    }
    Ok(lambda)
}

/// Best coset of the kernel of the given independent functionals: returns
/// (local basis of the kernel, representative, count on that coset).
fn best_coset(local: &F2Set, functionals: &[u32]) -> (Vec<u32>, u32, usize) {
    let dim = local.dim();
    let basis = kernel_basis(dim, functionals);
    debug_assert_eq!(
        basis.len() + functionals.len(),
        dim as usize,
        "coset search requires independent functionals"
    );
    let mut counts = vec![0usize; 1 << functionals.len()];
    let mut reps = vec![u32::MAX; counts.len()];
    for x in 0..local.size() as u32 {
        let mut syndrome = 0usize;
        for (i, &f) in functionals.iter().enumerate() {
            syndrome |= (parity_dot(f, x) as usize) << i;
        }
        if reps[syndrome] == u32::MAX {
            reps[syndrome] = x;
        }
        if local.contains(x) {
            counts[syndrome] += 1;
        }
    }
    let mut best = 0usize;
    for i in 1..counts.len() {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    (basis, reps[best], counts[best])
}

fn witness_from_local(embedding: &Embedding, local: &SubspaceWitness, linear_only: bool) -> SubspaceWitness {
    SubspaceWitness {
        basis: local.basis.iter().map(|&b| embedding.linear(b)).collect(),
        coset_rep: if linear_only {
            embedding.linear(local.coset_rep)
        } else {
            embedding.point(local.coset_rep)
        },
    }
}

/// Model pair driver: either the doubled set covers most of the current
/// subspace coset and the pigeonhole yields a subspace of A + A, or a
/// character level set forces a density increment on a smaller coset.
pub fn f2_iterate_pair(a: &F2Set, sigma: Rat, consts: &Constants) -> Result<F2Trace> {
    if a.is_empty() {
        return Err(Error::PreconditionViolated("empty set has density zero".into()));
    }
    if sigma <= Rat::new(0, 1) || sigma > Rat::new(1, 1) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} outside (0, 1]")));
    }
    let alpha0 = a.density();
    let global_sumset = f2_sumset(a, a);
    let cap = (consts.c_iter * (1.0 / crate::group::rat_f64(alpha0)).log2().max(1.0))
        .ceil() as usize
        + 8;

    let mut embedding = Embedding::identity(a.dim());
    let mut local = a.clone();
    let mut steps: Vec<F2Step> = Vec::new();
    loop {
        if steps.len() > cap {
            return Err(Error::IterationDiverged {
                steps: steps.len(),
                reason: "pair driver exceeded its step cap".into(),
            });
        }
        let alpha = local.density();
        let sumset = f2_sumset(&local, &local);
        let covered = Rat::new(sumset.len() as i128, sumset.size() as i128);
        if covered >= Rat::new(1, 1) - sigma {
            let local_witness = f2_pigeonhole_subspace(&sumset, sigma)?;
            steps.push(F2Step {
                dim: local.dim(),
                density: alpha,
                action: "cover".into(),
                codim_added: 0,
            });
            let witness = witness_from_local(&embedding, &local_witness, true);
            verify_subspace(&witness, &global_sumset)?;
            let a0 = crate::group::rat_f64(alpha0);
            return Ok(F2Trace {
                steps,
                witness_dim: witness.dim(),
                measured: witness.dim() as f64,
                bound_formula: a0 * a0 * a.dim() as f64 / 16.0,
                witness,
            });
        }

        let complement = sumset.complement();
        let lambda = increment_functionals(&local, &complement).map_err(|e| match e {
            Error::IterationDiverged { reason, .. } => Error::IterationDiverged {
                steps: steps.len(),
                reason,
            },
            other => other,
        })?;
        let (kernel, rep, count) = best_coset(&local, &lambda);
        if kernel.is_empty() {
            return Err(Error::IterationDiverged {
                steps: steps.len(),
                reason: "increment drove the dimension to zero".into(),
            });
        }
        // Guaranteed increment: the new density must beat alpha (1 + 1/4).
        let new_density = Rat::new(count as i128, 1i128 << kernel.len());
        if new_density < alpha * Rat::new(5, 4) {
            return Err(Error::IterationDiverged {
                steps: steps.len(),
                reason: format!(
                    "increment produced {new_density} against the guaranteed {}",
                    alpha * Rat::new(5, 4)
                ),
            });
        }
        steps.push(F2Step {
            dim: local.dim(),
            density: alpha,
            action: "increment".into(),
            codim_added: lambda.len() as u32,
        });
        embedding = embedding.restrict(&kernel, rep);
        local = restrict_set(&embedding, a);
    }
}

/// Model triple driver: either the tripled set covers the whole current
/// coset, which then sits inside A + A + A, or the top nontrivial character
/// gives a codimension-1 increment of factor at least (1 + alpha/2).
pub fn f2_iterate_triple(a: &F2Set, consts: &Constants) -> Result<F2Trace> {
    if a.is_empty() {
        return Err(Error::PreconditionViolated("empty set has density zero".into()));
    }
    let alpha0 = a.density();
    let pair_global = f2_sumset(a, a);
    let triple_global = f2_sumset(&pair_global, a);
    let cap = (8.0 * consts.c_iter / crate::group::rat_f64(alpha0)).ceil() as usize + 8;

    let mut embedding = Embedding::identity(a.dim());
    let mut local = a.clone();
    let mut steps: Vec<F2Step> = Vec::new();
    loop {
        if steps.len() > cap {
            return Err(Error::IterationDiverged {
                steps: steps.len(),
                reason: "triple driver exceeded its step cap".into(),
            });
        }
        let alpha = local.density();
        let pair = f2_sumset(&local, &local);
        let triple = f2_sumset(&pair, &local);
        if triple.len() == triple.size() {
            steps.push(F2Step {
                dim: local.dim(),
                density: alpha,
                action: "cover".into(),
                codim_added: 0,
            });
            let local_witness = SubspaceWitness {
                basis: (0..local.dim()).map(|i| 1u32 << i).collect(),
                coset_rep: 0,
            };
            let witness = witness_from_local(&embedding, &local_witness, false);
            verify_subspace(&witness, &triple_global)?;
            let codim = (a.dim() - witness.dim()) as f64;
            return Ok(F2Trace {
                steps,
                witness_dim: witness.dim(),
                measured: codim,
                bound_formula: 4.0 / crate::group::rat_f64(alpha0),
                witness,
            });
        }

        let spectrum = walsh_spectrum(&local.indicator_f64());
        let gamma = (1..local.size() as u32)
            .max_by(|&x, &y| {
                spectrum[x as usize]
                    .abs()
                    .partial_cmp(&spectrum[y as usize].abs())
                    .expect("finite spectrum")
                    .then(y.cmp(&x))
            })
            .ok_or_else(|| Error::IterationDiverged {
                steps: steps.len(),
                reason: "no nontrivial character in a zero-dimensional space".into(),
            })?;
        let (kernel, rep, count) = best_coset(&local, &[gamma]);
        let new_density = Rat::new(count as i128, 1i128 << kernel.len());
        let guaranteed = alpha * (Rat::new(1, 1) + alpha / Rat::new(2, 1));
        if new_density < guaranteed {
            return Err(Error::IterationDiverged {
                steps: steps.len(),
                reason: format!(
                    "increment produced {new_density} against the guaranteed {guaranteed}"
                ),
            });
        }
        steps.push(F2Step {
            dim: local.dim(),
            density: alpha,
            action: "increment".into(),
            codim_added: 1,
        });
        embedding = embedding.restrict(&kernel, rep);
        local = restrict_set(&embedding, a);
    }
}
