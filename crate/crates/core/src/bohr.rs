//! Bohr sets in Z/NZ: exact construction, certified-regular radii, and
//! arithmetic-progression extraction.
//!
//! Membership is a pure integer test: x lies in B(Gamma, delta) when every
//! frequency t in Gamma keeps t*x within floor(delta*n) of 0 around the
//! cycle. Radii are exact rationals end to end, so nesting, symmetry, and
//! volume statements are checked without floating point.

use num::bigint::BigInt;
use num::{BigRational, Signed};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::group::{parse_rat, CyclicGroup, DenseSet, Rat};

pub(crate) fn rat_str(r: Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub(crate) fn big_rat(r: Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Largest k in [0, hi] with k^d <= bound, by binary search in big integers.
fn max_root(d: u32, bound: &BigInt, hi: u64) -> u64 {
    if bound < &BigInt::from(0) {
        return 0;
    }
    let (mut lo, mut hi) = (0u64, hi);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if BigInt::from(mid).pow(d) <= *bound {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// A Bohr set specification: frequency set Gamma and exact rational radius.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BohrSpec {
    group: CyclicGroup,
    gamma: Vec<u64>,
    delta: Rat,
}

impl BohrSpec {
    /// Frequencies are reduced mod n, sorted, and deduplicated; the radius
    /// must lie in (0, 1]. Gamma must be nonempty (use {0} for the trivial
    /// spec whose Bohr set is the whole group).
    pub fn new(group: CyclicGroup, gamma: &[u64], delta: Rat) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidParameter(
                "frequency set must be nonempty; use {0} for the trivial spec".into(),
            ));
        }
        if delta <= Rat::new(0, 1) || delta > Rat::new(1, 1) {
            return Err(Error::InvalidParameter(format!(
                "radius {} outside (0, 1]",
                rat_str(delta)
            )));
        }
        let mut gamma: Vec<u64> = gamma.iter().map(|&t| t % group.n()).collect();
        gamma.sort_unstable();
        gamma.dedup();
        Ok(BohrSpec { group, gamma, delta })
    }

    #[inline]
    pub fn group(&self) -> CyclicGroup {
        self.group
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.group.n()
    }

    pub fn gamma(&self) -> &[u64] {
        &self.gamma
    }

    #[inline]
    pub fn delta(&self) -> Rat {
        self.delta
    }

    /// Dimension d = |Gamma|.
    #[inline]
    pub fn d(&self) -> usize {
        self.gamma.len()
    }

    /// The integer membership threshold floor(delta * n).
    pub fn threshold(&self) -> u64 {
        let k = (self.delta * Rat::new(self.n() as i128, 1)).floor().to_integer();
        k as u64
    }

    /// nu(x) = max over t in Gamma of the cyclic distance of t*x to 0,
    /// so that x is a member exactly when nu(x) <= threshold().
    pub fn nu(&self, x: u64) -> u64 {
        self.gamma.iter().map(|&t| self.group.norm_int(t, x)).max().unwrap_or(0)
    }

    /// nu for every group element, O(n d).
    pub fn nu_values(&self) -> Vec<u64> {
        let n = self.n();
        let mut out = vec![0u64; n as usize];
        for &t in &self.gamma {
            // walk t*x incrementally instead of multiplying per element
            let mut k = 0u64;
            for x in 0..n {
                let v = k.min(n - k);
                if v > out[x as usize] {
                    out[x as usize] = v;
                }
                k += t;
                if k >= n {
                    k -= n;
                }
            }
        }
        out
    }

    pub fn contains(&self, x: u64) -> bool {
        self.nu(x) <= self.threshold()
    }

    /// Same frequencies, different radius.
    pub fn with_delta(&self, delta: Rat) -> Result<Self> {
        BohrSpec::new(self.group, &self.gamma, delta)
    }

    /// Frequencies widened by `extra`, same radius. Widening can only shrink
    /// the Bohr set.
    pub fn with_added_freqs(&self, extra: &[u64]) -> Result<Self> {
        let mut gamma = self.gamma.clone();
        gamma.extend(extra.iter().map(|&t| t % self.n()));
        BohrSpec::new(self.group, &gamma, self.delta)
    }

    /// delta^d * n, the exact volume floor that build() is guaranteed to meet.
    pub fn volume_floor(&self) -> BigRational {
        big_rat(self.delta).pow(self.d() as i32) * BigRational::from(BigInt::from(self.n()))
    }
}

/// Enumerate B(Gamma, delta) exactly.
pub fn build_bohr(spec: &BohrSpec) -> DenseSet {
    let group = spec.group();
    let k = spec.threshold();
    let nu = spec.nu_values();
    let mut set = DenseSet::empty(&group);
    for (x, &v) in nu.iter().enumerate() {
        if v <= k {
            set.insert(x as u64);
        }
    }
    set
}

impl Serialize for BohrSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            n: u64,
            gamma: &'a [u64],
            delta: String,
        }
        Wire { n: self.n(), gamma: &self.gamma, delta: rat_str(self.delta) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BohrSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            n: u64,
            gamma: Vec<u64>,
            delta: String,
        }
        let w = Wire::deserialize(d)?;
        let group = CyclicGroup::new(w.n).map_err(D::Error::custom)?;
        let delta = parse_rat(&w.delta).map_err(D::Error::custom)?;
        BohrSpec::new(group, &w.gamma, delta).map_err(D::Error::custom)
    }
}

/// One probe of the regularity certificate: the measured size ratio
/// |B((1+kappa) delta)| / |B(delta)| at a grid point kappa.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowthPoint {
    pub kappa: Rat,
    pub ratio: Rat,
}

/// A Bohr spec whose radius passed the growth certificate: on the whole
/// kappa grid the size ratio stays within 1 +- c_reg * |kappa| * d.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularBohr {
    spec: BohrSpec,
    delta_requested: Rat,
    growth_profile: Vec<GrowthPoint>,
    c_r: Rat,
}

impl RegularBohr {
    /// The spec at the certified radius.
    pub fn spec(&self) -> &BohrSpec {
        &self.spec
    }

    /// The certified radius delta'.
    pub fn delta(&self) -> Rat {
        self.spec.delta()
    }

    /// The radius the search started from.
    pub fn delta_requested(&self) -> Rat {
        self.delta_requested
    }

    pub fn growth_profile(&self) -> &[GrowthPoint] {
        &self.growth_profile
    }

    pub fn c_r(&self) -> Rat {
        self.c_r
    }

    pub fn set(&self) -> DenseSet {
        build_bohr(&self.spec)
    }

    /// Wrap a spec whose regularity the caller certifies by other means
    /// (trivial frequency sets, hand-checked examples in tests). The growth
    /// profile is left empty.
    pub fn unchecked(spec: BohrSpec) -> Self {
        let delta = spec.delta();
        RegularBohr { spec, delta_requested: delta, growth_profile: Vec::new(), c_r: Rat::new(0, 1) }
    }
}

impl Serialize for RegularBohr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            n: u64,
            gamma: &'a [u64],
            delta: String,
            delta_regular: String,
            c_r: String,
            profile: Vec<[String; 2]>,
        }
        let profile = self
            .growth_profile
            .iter()
            .map(|p| [rat_str(p.kappa), rat_str(p.ratio)])
            .collect();
        Wire {
            n: self.spec.n(),
            gamma: self.spec.gamma(),
            delta: rat_str(self.delta_requested),
            delta_regular: rat_str(self.spec.delta()),
            c_r: rat_str(self.c_r),
            profile,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RegularBohr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            n: u64,
            gamma: Vec<u64>,
            delta: String,
            delta_regular: String,
            c_r: String,
            profile: Vec<[String; 2]>,
        }
        let w = Wire::deserialize(d)?;
        let group = CyclicGroup::new(w.n).map_err(D::Error::custom)?;
        let delta_requested = parse_rat(&w.delta).map_err(D::Error::custom)?;
        let delta_regular = parse_rat(&w.delta_regular).map_err(D::Error::custom)?;
        let c_r = parse_rat(&w.c_r).map_err(D::Error::custom)?;
        let spec = BohrSpec::new(group, &w.gamma, delta_regular).map_err(D::Error::custom)?;
        let mut growth_profile = Vec::with_capacity(w.profile.len());
        for [k, r] in w.profile {
            growth_profile.push(GrowthPoint {
                kappa: parse_rat(&k).map_err(D::Error::custom)?,
                ratio: parse_rat(&r).map_err(D::Error::custom)?,
            });
        }
        Ok(RegularBohr { spec, delta_requested, growth_profile, c_r })
    }
}

/// Cumulative size histogram: entry k counts the x with nu(x) <= k.
/// Bohr set sizes at every radius drop out of one O(n d) pass.
struct NuHistogram {
    n: u64,
    cum: Vec<u64>,
}

impl NuHistogram {
    fn build(spec: &BohrSpec) -> Self {
        let n = spec.n();
        let half = (n / 2) as usize;
        let mut cum = vec![0u64; half + 1];
        for v in spec.nu_values() {
            cum[v as usize] += 1;
        }
        for k in 1..=half {
            cum[k] += cum[k - 1];
        }
        NuHistogram { n, cum }
    }

    /// |{x : nu(x) <= k}| with k saturating past n/2.
    fn size_at(&self, k: i128) -> u64 {
        if k < 0 {
            0
        } else if (k as u64) >= self.n / 2 {
            self.n.min(*self.cum.last().unwrap())
        } else {
            self.cum[k as usize]
        }
    }

    /// Bohr set size at rational radius r: threshold floor(r*n).
    fn size_at_radius(&self, r: Rat) -> u64 {
        let k = (r * Rat::new(self.n as i128, 1)).floor().to_integer();
        self.size_at(k)
    }
}

/// The dyadic kappa grid {+-c_r / (d 2^j) : 0 <= j <= levels}, ascending.
fn kappa_grid(c_r: Rat, d: usize, levels: u32) -> Vec<Rat> {
    let mut grid = Vec::with_capacity(2 * (levels as usize + 1));
    for j in 0..=levels {
        let k = c_r / Rat::new(d as i128 * (1i128 << j), 1);
        grid.push(k);
        grid.push(-k);
    }
    grid.sort_unstable();
    grid
}

/// Search downward over realizable thresholds in [delta/2, delta) for a
/// radius whose growth profile passes the certificate, and return it with the
/// measured profile attached.
pub fn find_regular_radius(spec: &BohrSpec, consts: &Constants) -> Result<RegularBohr> {
    let n = spec.n() as i128;
    let d = spec.d();
    let delta = spec.delta();
    let half = delta / Rat::new(2, 1);
    let hist = NuHistogram::build(spec);
    let grid = kappa_grid(consts.c_r, d, consts.reg_grid_levels);

    // Realizable thresholds: every integer K with some radius in [delta/2,
    // delta) flooring to it. Descending keeps as much of the radius as the
    // certificate allows.
    let dn = delta * Rat::new(n, 1);
    let t_hi: i128 = if dn.is_integer() { dn.to_integer() - 1 } else { dn.floor().to_integer() };
    let t_lo: i128 = (half * Rat::new(n, 1)).floor().to_integer();
    let mut k = t_hi.max(t_lo);
    loop {
        if k >= 0 {
            // The canonical radius realizing threshold k inside the window.
            let cand = std::cmp::max(Rat::new(k, n), half);
            let base = hist.size_at_radius(cand);
            let mut profile = Vec::with_capacity(grid.len());
            let mut ok = true;
            for &kappa in &grid {
                let grown = hist.size_at_radius((Rat::new(1, 1) + kappa) * cand);
                let ratio = Rat::new(grown as i128, base as i128);
                profile.push(GrowthPoint { kappa, ratio });
                let bound = consts.c_reg * kappa.abs() * Rat::new(d as i128, 1);
                if (ratio - Rat::new(1, 1)).abs() > bound {
                    ok = false;
                    break;
                }
            }
            if ok {
                let certified = spec.with_delta(cand)?;
                return Ok(RegularBohr {
                    spec: certified,
                    delta_requested: delta,
                    growth_profile: profile,
                    c_r: consts.c_r,
                });
            }
        }
        if k <= t_lo {
            break;
        }
        k -= 1;
    }
    Err(Error::NoRegularRadius {
        lo: rat_str(half),
        hi: rat_str(delta),
        c_reg: rat_str(consts.c_reg),
    })
}

/// An arithmetic progression start, start+step, ..., start+(length-1)*step
/// with pairwise distinct elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct APWitness {
    pub start: u64,
    pub step: u64,
    pub length: u64,
}

impl APWitness {
    pub fn elements(&self, group: &CyclicGroup) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.length as usize);
        let mut x = self.start % group.n();
        for _ in 0..self.length {
            out.push(x);
            x = group.add(x, self.step);
        }
        out
    }
}

/// Check distinctness and element-by-element membership in the claimed
/// container. Every progression returned by this module passes through here
/// before the caller sees it.
pub fn verify_ap(w: &APWitness, container: &DenseSet) -> Result<()> {
    let group = container.group();
    let n = group.n();
    if w.length == 0 {
        return Err(Error::PreconditionViolated("progression of length zero".into()));
    }
    if w.length > 1 {
        let step = w.step % n;
        if step == 0 {
            return Err(Error::PreconditionViolated(
                "progression with repeated elements: step 0, length > 1".into(),
            ));
        }
        let ord = n / gcd(n, step);
        if w.length > ord {
            return Err(Error::PreconditionViolated(format!(
                "progression of length {} wraps: step {} has order {}",
                w.length, step, ord
            )));
        }
    }
    let mut x = w.start % n;
    for _ in 0..w.length {
        if !container.contains(x) {
            return Err(Error::PreconditionViolated(format!(
                "progression member {x} lies outside the claimed container"
            )));
        }
        x = group.add(x, w.step);
    }
    Ok(())
}

/// A progression extracted from a Bohr set, together with the exact length
/// the volume pigeonhole guarantees: floor(delta * n^(1/d)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BohrAp {
    pub witness: APWitness,
    pub guaranteed_length: u64,
    /// Set when the guarantee is vacuous (floor(delta * n^(1/d)) < 1); the
    /// witness is then the single point 0.
    pub degenerate: bool,
}

/// floor(delta * n^(1/d)) as an exact integer: the largest L with
/// L^d <= delta^d * n.
pub fn guaranteed_ap_length(spec: &BohrSpec) -> u64 {
    let d = spec.d() as u32;
    let p = BigInt::from(*spec.delta().numer());
    let q = BigInt::from(*spec.delta().denom());
    let n = BigInt::from(spec.n());
    // L^d * q^d <= p^d * n, searched over L*q to keep the compare integral.
    let bound = p.pow(d) * n;
    let mut lo = 0u64;
    let mut hi = spec.n();
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if (BigInt::from(mid) * &q).pow(d) <= bound {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Extract a long progression through 0 from the Bohr set of a certified
/// radius: score candidate steps y by how far the walk j*y provably stays
/// inside, walk the best ones, and return the longest symmetric run found.
pub fn ap_in_bohr(rb: &RegularBohr) -> Result<BohrAp> {
    ap_in_bohr_at(rb.spec())
}

/// The same extraction for a bare spec; regularity plays no role in the
/// guarantee.
///
/// The floor floor(delta * n^(1/d)) is a theorem when every nonzero step has
/// full order, in particular whenever n is prime. Composite moduli admit
/// specs whose subgroup structure caps every progression with distinct
/// elements strictly below the floor; the walk then surfaces the best run it
/// found in a PigeonholeFailed error rather than emitting a witness that
/// wraps around the group.
pub fn ap_in_bohr_at(spec: &BohrSpec) -> Result<BohrAp> {
    let n = spec.n();
    let group = spec.group();
    let set = build_bohr(spec);
    let guaranteed = guaranteed_ap_length(spec);
    if guaranteed == 0 {
        let witness = APWitness { start: 0, step: 0, length: 1 };
        verify_ap(&witness, &set)?;
        return Ok(BohrAp { witness, guaranteed_length: 0, degenerate: true });
    }
    if n == 1 {
        let witness = APWitness { start: 0, step: 0, length: 1 };
        verify_ap(&witness, &set)?;
        return Ok(BohrAp { witness, guaranteed_length: guaranteed, degenerate: false });
    }

    let nu = spec.nu_values();
    let k = spec.threshold();

    // Lower-bound score for the symmetric walk from step y: nu(j y) <= j
    // nu(y), so the walk survives at least floor(k / nu(y)) steps each way,
    // capped by the order of y.
    let mut order = vec![0u64; n as usize];
    let mut cands: Vec<(u64, u64)> = Vec::with_capacity(n as usize - 1);
    for y in 1..n {
        let ord = n / gcd(n, y);
        order[y as usize] = ord;
        let score = if nu[y as usize] == 0 {
            ord
        } else {
            (2 * (k / nu[y as usize]) + 1).min(ord)
        };
        cands.push((score, y));
    }
    cands.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut best: Option<APWitness> = None;
    for (idx, &(score, y)) in cands.iter().enumerate() {
        let best_len = best.map_or(0, |w| w.length);
        if best_len >= guaranteed && best_len >= score {
            break;
        }
        let ord = order[y as usize];
        let max_l = (ord - 1) / 2;
        let mut l = 0u64;
        let mut x = y;
        while l < max_l {
            if nu[x as usize] <= k {
                l += 1;
                x = group.add(x, y);
            } else {
                break;
            }
        }
        let witness = if l == max_l {
            // The symmetric window covers the whole cycle (odd order), or all
            // but the antipode (even order); check the antipode to close it.
            if ord % 2 == 1 {
                let start = group.reduce_i128(-((l as i128) * (y as i128)));
                APWitness { start, step: y, length: ord }
            } else if nu[group.mul_mod(ord / 2, y) as usize] <= k {
                let start = group.reduce_i128(-((max_l as i128) * (y as i128)));
                APWitness { start, step: y, length: ord }
            } else {
                let start = group.reduce_i128(-((l as i128) * (y as i128)));
                APWitness { start, step: y, length: 2 * l + 1 }
            }
        } else {
            let start = group.reduce_i128(-((l as i128) * (y as i128)));
            APWitness { start, step: y, length: 2 * l + 1 }
        };
        if witness.length > best.map_or(0, |w| w.length) {
            best = Some(witness);
        }
        // Never leave without having walked at least one candidate.
        let _ = idx;
    }

    let witness = best.expect("at least one step candidate exists for n >= 2");
    if witness.length < guaranteed {
        return Err(Error::PigeonholeFailed {
            expected: guaranteed as usize,
            found: witness.length as usize,
        });
    }
    verify_ap(&witness, &set)?;
    Ok(BohrAp { witness, guaranteed_length: guaranteed, degenerate: false })
}

/// Outcome of the progression pigeonhole on a dense subset of a Bohr set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PigeonholeOutcome {
    /// A progression of at least the guaranteed length ceil(1/(4 sigma)),
    /// fully inside A.
    Found(APWitness),
    /// The small-Bohr alternative: 1/sigma >= c_alt * delta * n^(1/d) / d,
    /// so the guarantee is vacuous for this instance. The longest run found
    /// is reported anyway when one exists.
    SmallBohr { best: Option<APWitness> },
}

/// Longest run of members of `a` along the cycles of step y, returned as
/// (length, start element), ties broken by smallest start. None when no
/// member of `a` lies on any cycle (a empty).
fn longest_run_with_step(a: &DenseSet, y: u64) -> Option<(u64, u64)> {
    let n = a.n();
    let g = gcd(n, y);
    let m = (n / g) as usize;
    let mut best: Option<(u64, u64)> = None;
    let mut on_cycle = vec![false; m];
    for r in 0..g {
        let mut x = r;
        let mut all = true;
        let mut min_elem = u64::MAX;
        for slot in on_cycle.iter_mut() {
            let member = a.contains(x);
            *slot = member;
            if member {
                min_elem = min_elem.min(x);
            } else {
                all = false;
            }
            x = (x + y) % n;
        }
        let consider = |best: &mut Option<(u64, u64)>, len: u64, start: u64| {
            let better = match *best {
                None => true,
                Some((bl, bs)) => len > bl || (len == bl && start < bs),
            };
            if better {
                *best = Some((len, start));
            }
        };
        if all {
            consider(&mut best, m as u64, min_elem);
            continue;
        }
        if min_elem == u64::MAX {
            continue;
        }
        // Longest circular run of trues, scanned over a doubled window; runs
        // are attributed to their start position in the first copy.
        let mut run_start: Option<usize> = None;
        for i in 0..(2 * m) {
            if on_cycle[i % m] {
                if run_start.is_none() {
                    run_start = Some(i);
                }
            } else if let Some(s) = run_start.take() {
                if s < m {
                    let start_elem = (r + (s as u64 % m as u64) * y) % n;
                    consider(&mut best, (i - s) as u64, start_elem);
                }
            }
        }
        if let Some(s) = run_start {
            if s < m {
                let start_elem = (r + (s as u64 % m as u64) * y) % n;
                consider(&mut best, (2 * m - s).min(m) as u64, start_elem);
            }
        }
    }
    best
}

/// Apply the progression pigeonhole: given A occupying at least a (1-sigma)
/// fraction of the Bohr set, either return a progression of length at least
/// ceil(1/(4 sigma)) fully inside A, or flag the small-Bohr alternative.
/// The scan walks every step y in the thin Bohr set B(Gamma, (2/n)^(1/d))
/// and every start; ties break to the longest run, then smallest step, then
/// smallest start.
pub fn pigeonhole_ap(
    a: &DenseSet,
    rb: &RegularBohr,
    sigma: Rat,
    consts: &Constants,
) -> Result<PigeonholeOutcome> {
    let spec = rb.spec();
    let n = spec.n();
    a.group().same(&spec.group())?;
    if sigma <= Rat::new(0, 1) || sigma > Rat::new(1, 1) {
        return Err(Error::InvalidParameter(format!(
            "sigma {} outside (0, 1]",
            rat_str(sigma)
        )));
    }
    let b = build_bohr(spec);
    let b_size = b.len();
    let missing = b_size - a.intersect_count(&b);
    if Rat::new(missing as i128, 1) > sigma * Rat::new(b_size as i128, 1) {
        return Err(Error::PreconditionViolated(format!(
            "A misses {missing} of {b_size} Bohr set elements, more than the sigma = {} share",
            rat_str(sigma)
        )));
    }
    let target = (Rat::new(1, 1) / (Rat::new(4, 1) * sigma)).ceil().to_integer() as u64;

    // Steps come from the thin Bohr set of radius (2 n^(d-1))^(1/d) / n,
    // whose volume floor 2 guarantees a nonzero candidate.
    let d = spec.d() as u32;
    let step_threshold = max_root(d, &(BigInt::from(2u32) * BigInt::from(n).pow(d - 1)), n / 2);
    let nu = spec.nu_values();

    let mut best: Option<APWitness> = None;
    for y in 1..n {
        if nu[y as usize] > step_threshold {
            continue;
        }
        if let Some((len, start)) = longest_run_with_step(a, y) {
            let better = match best {
                None => true,
                Some(w) => len > w.length,
            };
            if better {
                best = Some(APWitness { start, step: y, length: len });
            }
        }
    }

    if let Some(w) = best {
        if w.length >= target {
            verify_ap(&w, a)?;
            return Ok(PigeonholeOutcome::Found(w));
        }
    }
    // d^d >= n * (c_alt * sigma * delta)^d, the exact form of
    // 1/sigma >= c_alt * delta * n^(1/d) / d.
    let d_big = BigRational::from(BigInt::from(spec.d()));
    let lhs = d_big.pow(spec.d() as i32);
    let rhs = BigRational::from(BigInt::from(n))
        * (big_rat(consts.c_alt) * big_rat(sigma) * big_rat(spec.delta())).pow(spec.d() as i32);
    if lhs >= rhs {
        if let Some(w) = &best {
            verify_ap(w, a)?;
        }
        return Ok(PigeonholeOutcome::SmallBohr { best });
    }
    Err(Error::PigeonholeFailed {
        expected: target as usize,
        found: best.map_or(0, |w| w.length as usize),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: u64, gamma: &[u64], num: i128, den: i128) -> BohrSpec {
        let g = CyclicGroup::new(n).unwrap();
        BohrSpec::new(g, gamma, Rat::new(num, den)).unwrap()
    }

    /// Independent membership check: per-element max over frequencies,
    /// sharing no code with nu_values' incremental walk.
    fn naive_members(n: u64, gamma: &[u64], delta: Rat) -> Vec<u64> {
        let k = (delta * Rat::new(n as i128, 1)).floor().to_integer() as u64;
        (0..n)
            .filter(|&x| {
                gamma.iter().all(|&t| {
                    let r = (t as u128 * x as u128 % n as u128) as u64;
                    r.min(n - r) <= k
                })
            })
            .collect()
    }

    #[test]
    fn build_matches_hand_examples() {
        let b = build_bohr(&spec(8, &[1], 1, 4));
        assert_eq!(b.members(), vec![0, 1, 2, 6, 7]);
        let b = build_bohr(&spec(12, &[3], 1, 5));
        assert_eq!(b.members(), vec![0, 4, 8]);
        let b = build_bohr(&spec(8, &[0], 1, 3));
        assert_eq!(b.len(), 8);
    }

    #[test]
    fn build_matches_naive_membership() {
        for &(n, gamma, num, den) in &[
            (36u64, &[5u64, 7][..], 1i128, 6i128),
            (100, &[3], 1, 7),
            (97, &[13, 29, 41], 1, 5),
        ] {
            let s = spec(n, gamma, num, den);
            assert_eq!(build_bohr(&s).members(), naive_members(n, gamma, s.delta()));
        }
    }

    #[test]
    fn volume_floor_holds() {
        for &(n, gamma, num, den) in &[
            (64u64, &[1u64][..], 1i128, 4i128),
            (101, &[3, 7], 1, 5),
            (128, &[1, 5, 9], 1, 3),
        ] {
            let s = spec(n, gamma, num, den);
            let size = BigRational::from(BigInt::from(build_bohr(&s).len()));
            assert!(size >= s.volume_floor(), "violated for n={n}");
        }
    }

    #[test]
    fn bohr_set_is_symmetric_and_contains_zero() {
        let b = build_bohr(&spec(97, &[13, 29], 1, 6));
        assert!(b.contains(0));
        assert!(b.is_symmetric());
    }

    #[test]
    fn regular_radius_lands_in_window_and_passes_recount() {
        let consts = Constants::default();
        let s = spec(1024, &[1], 1, 2);
        let rb = find_regular_radius(&s, &consts).unwrap();
        assert!(rb.delta() >= Rat::new(1, 4) && rb.delta() < Rat::new(1, 2));
        // Recount both Bohr sets per grid point with the naive membership
        // path and re-derive every ratio.
        let base = naive_members(1024, &[1], rb.delta()).len() as i128;
        for p in rb.growth_profile() {
            let grown =
                naive_members(1024, &[1], (Rat::new(1, 1) + p.kappa) * rb.delta()).len() as i128;
            assert_eq!(p.ratio, Rat::new(grown, base));
            let bound = consts.c_reg * p.kappa.abs() * Rat::new(s.d() as i128, 1);
            assert!((p.ratio - Rat::new(1, 1)).abs() <= bound);
        }
    }

    #[test]
    fn regular_radius_two_frequency_recount() {
        let consts = Constants::default();
        let s = spec(4096, &[1, 7], 1, 8);
        let rb = find_regular_radius(&s, &consts).unwrap();
        assert!(rb.delta() >= Rat::new(1, 16) && rb.delta() < Rat::new(1, 8));
        let base = naive_members(4096, &[1, 7], rb.delta()).len() as i128;
        for p in rb.growth_profile() {
            let grown = naive_members(4096, &[1, 7], (Rat::new(1, 1) + p.kappa) * rb.delta()).len()
                as i128;
            assert_eq!(p.ratio, Rat::new(grown, base));
        }
    }

    #[test]
    fn trivial_spec_is_regular_with_unit_ratios() {
        let consts = Constants::default();
        let s = spec(8, &[0], 1, 1);
        let rb = find_regular_radius(&s, &consts).unwrap();
        for p in rb.growth_profile() {
            assert_eq!(p.ratio, Rat::new(1, 1));
        }
        assert_eq!(rb.set().len(), 8);
    }

    #[test]
    fn interval_walk_extracts_symmetric_run() {
        let rb = RegularBohr::unchecked(spec(64, &[1], 1, 8));
        let ap = ap_in_bohr(&rb).unwrap();
        assert_eq!(ap.guaranteed_length, 8);
        assert!(!ap.degenerate);
        assert_eq!(ap.witness, APWitness { start: 56, step: 1, length: 17 });
        verify_ap(&ap.witness, &rb.set()).unwrap();
    }

    #[test]
    fn whole_group_gives_full_progression() {
        let rb = RegularBohr::unchecked(spec(10, &[0], 1, 1));
        let ap = ap_in_bohr(&rb).unwrap();
        assert_eq!(ap.guaranteed_length, 10);
        assert_eq!(ap.witness.length, 10);
        verify_ap(&ap.witness, &rb.set()).unwrap();
    }

    #[test]
    fn two_dimensional_guarantee_met() {
        let rb = RegularBohr::unchecked(spec(10_000, &[1, 3], 1, 4));
        let ap = ap_in_bohr(&rb).unwrap();
        assert_eq!(ap.guaranteed_length, 25);
        assert!(ap.witness.length >= 25);
        verify_ap(&ap.witness, &rb.set()).unwrap();
    }

    #[test]
    fn composite_modulus_can_defeat_the_floor() {
        // gcd(54, 1053) = 27, so 54x mod 1053 ranges over multiples of 27 and
        // membership reduces to 2x mod 39 avoiding {19, 20}: the set excludes
        // two whole residue classes mod 39. Steps coprime to 39 die within 39
        // hops, steps divisible by 13 have order <= 81, and steps divisible
        // by 3 have order <= 351, so no progression with distinct elements
        // reaches the floor of 493. The walk must surface 351 (the full cycle
        // of step 3) and refuse rather than wrap.
        let s = spec(1053, &[54], 493, 1053);
        match ap_in_bohr_at(&s) {
            Err(Error::PigeonholeFailed { expected, found }) => {
                assert_eq!((expected, found), (493, 351));
            }
            other => panic!("expected a pigeonhole refusal, got {other:?}"),
        }
        let best = APWitness { start: 0, step: 3, length: 351 };
        verify_ap(&best, &build_bohr(&s)).unwrap();
        // Same shape over a prime modulus: full-order steps restore the
        // guarantee.
        let ap = ap_in_bohr_at(&spec(1051, &[54], 493, 1051)).unwrap();
        assert_eq!(ap.guaranteed_length, 493);
        assert!(ap.witness.length >= 493);
    }

    #[test]
    fn degenerate_guarantee_flags() {
        // delta^d n = (1/8)^2 * 16 = 1/4 < 1: nothing guaranteed.
        let rb = RegularBohr::unchecked(spec(16, &[1, 3], 1, 8));
        let ap = ap_in_bohr(&rb).unwrap();
        assert!(ap.degenerate);
        assert_eq!(ap.witness.length, 1);
        assert_eq!(ap.guaranteed_length, 0);
    }

    #[test]
    fn pigeonhole_avoids_single_hole() {
        let consts = Constants::default();
        let s = spec(256, &[1], 1, 4);
        let b = build_bohr(&s);
        assert_eq!(b.len(), 129);
        let mut a = b.clone();
        a.remove(0);
        let rb = RegularBohr::unchecked(s);
        let out = pigeonhole_ap(&a, &rb, Rat::new(1, 129), &consts).unwrap();
        match out {
            PigeonholeOutcome::Found(w) => {
                assert!(w.length >= 33);
                assert_eq!(w, APWitness { start: 1, step: 1, length: 64 });
                verify_ap(&w, &a).unwrap();
            }
            other => panic!("expected a progression, got {other:?}"),
        }
    }

    #[test]
    fn pigeonhole_full_containment_matches_extraction() {
        let consts = Constants::default();
        let s = spec(128, &[1], 1, 4);
        let b = build_bohr(&s);
        let rb = RegularBohr::unchecked(s);
        let direct = ap_in_bohr(&rb).unwrap();
        let out = pigeonhole_ap(&b, &rb, Rat::new(1, 2), &consts).unwrap();
        match out {
            PigeonholeOutcome::Found(w) => assert!(w.length >= direct.witness.length),
            other => panic!("expected a progression, got {other:?}"),
        }
    }

    #[test]
    fn pigeonhole_tiny_bohr_flags_small() {
        let consts = Constants::default();
        let s = spec(64, &[1], 1, 64);
        let b = build_bohr(&s);
        assert_eq!(b.members(), vec![0, 1, 63]);
        let rb = RegularBohr::unchecked(s);
        let out = pigeonhole_ap(&b, &rb, Rat::new(1, 64), &consts).unwrap();
        match out {
            PigeonholeOutcome::SmallBohr { best } => {
                let w = best.expect("the three-element run exists");
                assert_eq!(w.length, 3);
            }
            other => panic!("expected the small-Bohr alternative, got {other:?}"),
        }
    }

    #[test]
    fn pigeonhole_rejects_sparse_subset() {
        let consts = Constants::default();
        let s = spec(64, &[1], 1, 4);
        let g = CyclicGroup::new(64).unwrap();
        let a = DenseSet::from_members(&g, &[0]).unwrap();
        let rb = RegularBohr::unchecked(s);
        let err = pigeonhole_ap(&a, &rb, Rat::new(1, 10), &consts).unwrap_err();
        assert!(matches!(err, Error::PreconditionViolated(_)));
    }

    #[test]
    fn nesting_in_radius_and_frequencies() {
        let wide = build_bohr(&spec(360, &[7, 11], 1, 4));
        let narrow = build_bohr(&spec(360, &[7, 11], 1, 8));
        assert_eq!(narrow.difference(&wide).len(), 0);
        let more_freqs = build_bohr(&spec(360, &[7, 11, 13], 1, 4));
        assert_eq!(more_freqs.difference(&wide).len(), 0);
    }

    #[test]
    fn regular_bohr_json_round_trip() {
        let consts = Constants::default();
        let rb = find_regular_radius(&spec(1024, &[1], 1, 2), &consts).unwrap();
        let j = serde_json::to_string(&rb).unwrap();
        let back: RegularBohr = serde_json::from_str(&j).unwrap();
        assert_eq!(back, rb);
    }
}
