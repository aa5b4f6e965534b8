//! Density increments on Bohr sets and the iteration drivers that extract
//! additive structure from pair and m-fold sumsets.
//!
//! The two increment operations realize the spectral lemmas constructively:
//! a hypothesis is checked by direct computation, a narrower regular Bohr set
//! is produced, and a witness point where the localized convolution meets the
//! claimed bound is found by exact counting. The drivers alternate between a
//! terminal branch (the sumset covers enough of a localized Bohr set to hand
//! out a verified progression or translate) and an increment branch, with all
//! branch decisions taken on exact rational quantities. Floating point enters
//! only to choose candidate frequencies; every commitment is re-verified in
//! integer arithmetic, and failures retry with a halved localization radius.

use num::bigint::BigInt;
use num::{BigRational, Signed, ToPrimitive};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bohr::{
    ap_in_bohr, build_bohr, find_regular_radius, pigeonhole_ap, rat_str, verify_ap, APWitness,
    BohrSpec, PigeonholeOutcome, RegularBohr,
};
use crate::chang::chang_container;
use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::group::{rat_f64, rat_serde, Character, CyclicGroup, DenseSet, Rat};
use crate::spectral::{dft_real, nest_support_radius};

/// One committed step of a driver, recorded before moving to the next Bohr
/// set. Translates are listed in input-set order; for the m-fold driver the
/// two densest sets are centered against the current Bohr set and the rest
/// against the narrower localization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationState {
    pub k: usize,
    pub gamma_k: Vec<u64>,
    #[serde(with = "rat_serde")]
    pub delta_k: Rat,
    pub translates: Vec<u64>,
    /// Geometric mean of the step's relative densities.
    pub alpha_k: f64,
    /// "increment" or "terminal".
    pub branch_taken: String,
}

/// A certified density increment: on the Bohr set of `new_spec` the
/// convolution of the incremented set's indicator with the uniform cutoff
/// reaches `claimed_lower` at `witness_point`. The comparison is made in
/// exact arithmetic before the result is returned.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncrementResult {
    pub new_spec: BohrSpec,
    pub witness_point: u64,
    pub claimed_lower: f64,
    /// The value actually attained at the witness point.
    pub realized: f64,
}

/// A translate of a Bohr set contained in the sumset, witnessed by full
/// enumeration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BohrTranslateWitness {
    pub translate: u64,
    pub spec: BohrSpec,
}

/// Outcome of a driver run: the structure found, the witnesses, and the full
/// step trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SumsetResult {
    /// "ap_witness" for the pair driver, "bohr_witness" for the m-fold
    /// driver; both witnesses are attached whenever available.
    pub kind: String,
    pub ap: Option<APWitness>,
    pub bohr: Option<BohrTranslateWitness>,
    pub trace: Vec<IterationState>,
    #[serde(with = "rat_serde")]
    pub sigma_used: Rat,
}

impl SumsetResult {
    /// The trace as JSON lines, one state per line.
    pub fn trace_json_lines(&self) -> String {
        self.trace
            .iter()
            .map(|s| serde_json::to_string(s).expect("iteration state serializes"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn big(r: Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn big_ratio(num: i128, den: i128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Largest multiple of 2^-20 whose k-th power stays at or below x, for
/// x in [0, 1]. Used to turn irrational growth targets (roots of rational
/// density products) into exact rational lower bounds.
fn rat_root_lower(x: Rat, k: u32) -> Rat {
    const BITS: u32 = 20;
    if x <= Rat::new(0, 1) {
        return Rat::new(0, 1);
    }
    if x >= Rat::new(1, 1) {
        return Rat::new(1, 1);
    }
    let num = BigInt::from(*x.numer());
    let den = BigInt::from(*x.denom());
    let mut lo = 0u64;
    let mut hi = 1u64 << BITS;
    // t^k * den <= num * 2^(k BITS)
    let bound = num * BigInt::from(2u32).pow(k * BITS);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if BigInt::from(mid).pow(k) * &den <= bound {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Rat::new(lo as i128, 1i128 << BITS)
}

/// Index of the largest count, ties to the smallest index.
fn argmax_counts(counts: &[u64]) -> (u64, u64) {
    let mut best_x = 0u64;
    let mut best = counts[0];
    for (x, &c) in counts.iter().enumerate().skip(1) {
        if c > best {
            best = c;
            best_x = x as u64;
        }
    }
    (best_x, best)
}

/// ((chi_A - alpha chi_B) d beta)^(gamma) with beta uniform on B and
/// alpha = |A|/|B|, summed term by term from reduced angles.
fn balanced_coeff(a: &DenseSet, b: &DenseSet, gamma: u64) -> Complex64 {
    let group = a.group();
    let n = group.n() as f64;
    let bsize = b.len() as f64;
    let alpha = a.len() as f64 / bsize;
    let mut acc = Complex64::new(0.0, 0.0);
    for x in b.iter_members() {
        let w = if a.contains(x) { 1.0 - alpha } else { -alpha };
        let k = group.mul_mod(gamma, x);
        let angle = -2.0 * std::f64::consts::PI * (k as f64) / n;
        acc += Complex64::new(angle.cos(), angle.sin()) * w;
    }
    acc / bsize
}

/// <f * beta'', (f d beta) * beta''> for f = (chi_A - alpha chi_B) chi_B,
/// beta uniform on B and beta'' uniform on `bsub`, as an exact rational.
/// Both factors reduce to the same windowed sum u(x), so the inner product
/// is sum_x u(x)^2 / |B| with u(x) = (chi_A * beta'' - alpha chi_B * beta'')(x).
fn head_inner_product(a: &DenseSet, b: &DenseSet, bsub: &DenseSet) -> BigRational {
    let ca = a.correlation_counts(bsub);
    let cb = b.correlation_counts(bsub);
    let blen = b.len() as i128;
    let alen = a.len() as i128;
    let sublen = bsub.len() as i128;
    let mut acc: i128 = 0;
    for x in 0..ca.len() {
        let num = ca[x] as i128 * blen - alen * cb[x] as i128;
        acc += num * num;
    }
    big_ratio(acc, blen * blen * blen * sublen * sublen)
}

fn halve(r: Rat) -> Rat {
    r / Rat::new(2, 1)
}

/// Errors that the retry policy treats as "the radius was too wide": the
/// drivers halve the localization and try again instead of giving up.
fn is_soft(e: &Error) -> bool {
    matches!(
        e,
        Error::NoRegularRadius { .. }
            | Error::NoRadiusFound(_)
            | Error::HypothesisFails(_)
            | Error::IncrementNotRealized { .. }
            | Error::SizeCapExceeded { .. }
    )
}

fn check_support(a: &DenseSet, b: &DenseSet) -> Result<()> {
    if let Some(point) = a.difference(b).iter_members().next() {
        return Err(Error::SupportViolation { point, value: 1.0 });
    }
    Ok(())
}

/// Scan chi_A * beta'' over the whole group for a point meeting `claimed`,
/// comparing counts against the claimed rational exactly. Returns the best
/// point and whether it qualifies.
fn witness_scan(a: &DenseSet, bsub: &DenseSet, claimed: Rat) -> (u64, u64, bool) {
    let counts = a.correlation_counts(bsub);
    let (x, c) = argmax_counts(&counts);
    let ok = big_ratio(c as i128, bsub.len() as i128) >= big(claimed);
    (x, c, ok)
}

fn linf_increment_impl(
    a: &DenseSet,
    rb: &RegularBohr,
    gamma_star: Character,
    eta: Rat,
    consts: &Constants,
) -> Result<(IncrementResult, RegularBohr)> {
    let spec = rb.spec();
    a.group().same(&spec.group())?;
    if eta <= Rat::new(0, 1) || eta > Rat::new(1, 1) {
        return Err(Error::InvalidParameter(format!(
            "eta {} outside (0, 1]",
            rat_str(eta)
        )));
    }
    let b = rb.set();
    check_support(a, &b)?;
    if a.is_empty() {
        return Err(Error::ZeroFunction("density increment on an empty set"));
    }
    let alpha = Rat::new(a.len() as i128, b.len() as i128);

    let coeff = balanced_coeff(a, &b, gamma_star.freq);
    let need = rat_f64(eta * alpha);
    if coeff.norm() < need - 1e-9 {
        return Err(Error::HypothesisFails(format!(
            "local coefficient {:.6e} at frequency {} is below eta alpha = {:.6e}",
            coeff.norm(),
            gamma_star.freq,
            need
        )));
    }

    let d = Rat::new(spec.d() as i128, 1);
    let req = (consts.c_localize * eta * alpha * spec.delta() / d).min(spec.delta());
    let claimed = alpha * (Rat::new(8, 1) + eta) / Rat::new(8, 1);
    let widened = spec.with_added_freqs(&[gamma_star.freq])?;

    let mut cur = req;
    let mut last: Option<(u64, u64, u64)> = None;
    for _ in 0..=consts.retry_cap {
        let rb2 = match find_regular_radius(&widened.with_delta(cur)?, consts) {
            Ok(rb2) => rb2,
            Err(Error::NoRegularRadius { .. }) => {
                cur = halve(cur);
                continue;
            }
            Err(e) => return Err(e),
        };
        let b2 = rb2.set();
        let (x, c, ok) = witness_scan(a, &b2, claimed);
        if ok {
            let realized = c as f64 / b2.len() as f64;
            return Ok((
                IncrementResult {
                    new_spec: rb2.spec().clone(),
                    witness_point: x,
                    claimed_lower: rat_f64(claimed),
                    realized,
                },
                rb2,
            ));
        }
        last = Some((x, c, b2.len()));
        cur = halve(cur);
    }
    let realized = last.map_or(0.0, |(_, c, s)| c as f64 / s as f64);
    Err(Error::IncrementNotRealized { realized, claimed: rat_f64(claimed) })
}

/// Widen the frequency set by one character carrying a large balanced
/// coefficient and localize until the set's density visibly rises.
///
/// The hypothesis |((chi_A - alpha chi_B) d beta)^(gamma*)| >= eta alpha is
/// checked by direct summation; the returned witness satisfies
/// (chi_A * beta'')(witness) >= alpha (1 + eta/8) by exact counting, where
/// beta'' is the uniform cutoff on the regularized narrower Bohr set.
pub fn linf_increment(
    a: &DenseSet,
    rb: &RegularBohr,
    gamma_star: Character,
    eta: Rat,
    consts: &Constants,
) -> Result<IncrementResult> {
    linf_increment_impl(a, rb, gamma_star, eta, consts).map(|(r, _)| r)
}

fn l2_increment_impl(
    a: &DenseSet,
    rb: &RegularBohr,
    sub_spec: &BohrSpec,
    c: Rat,
    consts: &Constants,
) -> Result<(IncrementResult, RegularBohr)> {
    let spec = rb.spec();
    a.group().same(&spec.group())?;
    sub_spec.group().same(&spec.group())?;
    if c <= Rat::new(0, 1) {
        return Err(Error::InvalidParameter(format!(
            "inner-product constant {} must be positive",
            rat_str(c)
        )));
    }
    for t in spec.gamma() {
        if sub_spec.gamma().binary_search(t).is_err() {
            return Err(Error::InvalidParameter(format!(
                "sub spec must extend the base frequencies; {t} is missing"
            )));
        }
    }
    if sub_spec.delta() > spec.delta() {
        return Err(Error::InvalidParameter(
            "sub spec radius exceeds the base radius".into(),
        ));
    }
    let b = rb.set();
    check_support(a, &b)?;
    if a.is_empty() {
        return Err(Error::ZeroFunction("density increment on an empty set"));
    }
    let alpha = Rat::new(a.len() as i128, b.len() as i128);
    let target = big(c) * big(alpha) * big(alpha);
    let d = Rat::new(spec.d() as i128, 1);

    let mut cur = sub_spec.delta();
    let mut first_evaluation = true;
    let mut last: Option<(f64, Rat)> = None;
    for _ in 0..=consts.retry_cap {
        let rb2 = match find_regular_radius(&sub_spec.with_delta(cur)?, consts) {
            Ok(rb2) => rb2,
            Err(Error::NoRegularRadius { .. }) => {
                cur = halve(cur);
                continue;
            }
            Err(e) => return Err(e),
        };
        let b2 = rb2.set();
        let q = head_inner_product(a, &b, &b2);
        if q < target {
            if first_evaluation {
                return Err(Error::HypothesisFails(format!(
                    "inner product {:.6e} is below c alpha^2 = {:.6e}",
                    q.to_f64().unwrap_or(f64::NAN),
                    target.to_f64().unwrap_or(f64::NAN)
                )));
            }
            cur = halve(cur);
            continue;
        }
        first_evaluation = false;
        let claimed =
            alpha * (Rat::new(1, 1) + c) - consts.c_err_l2 * d * rb2.delta() / spec.delta();
        let (x, cnt, ok) = witness_scan(a, &b2, claimed);
        if ok {
            let realized = cnt as f64 / b2.len() as f64;
            return Ok((
                IncrementResult {
                    new_spec: rb2.spec().clone(),
                    witness_point: x,
                    claimed_lower: rat_f64(claimed),
                    realized,
                },
                rb2,
            ));
        }
        last = Some((cnt as f64 / b2.len() as f64, claimed));
        cur = halve(cur);
    }
    match last {
        Some((realized, claimed)) => {
            Err(Error::IncrementNotRealized { realized, claimed: rat_f64(claimed) })
        }
        None => Err(Error::IncrementNotRealized { realized: 0.0, claimed: rat_f64(alpha) }),
    }
}

/// Localize to a narrower Bohr set on an extended frequency system and turn a
/// large self-correlation into a density increment.
///
/// The hypothesis <f * beta', (f d beta) * beta'> >= c alpha^2, with f the
/// balanced function of A in B and beta' the uniform cutoff on the
/// regularized sub spec, is evaluated in exact rational arithmetic. The
/// claimed lower bound alpha (1 + c) - c_err_l2 d delta'/delta accounts for
/// the localization error; the witness comparison is exact.
pub fn l2_increment(
    a: &DenseSet,
    rb: &RegularBohr,
    sub_spec: &BohrSpec,
    c: Rat,
    consts: &Constants,
) -> Result<IncrementResult> {
    l2_increment_impl(a, rb, sub_spec, c, consts).map(|(r, _)| r)
}

/// Exact value of <f1 * (f2 d beta), chi_S> under the uniform cutoff on B',
/// where f_i are the balanced functions of the localized sets in B. Every
/// term is a rotate-intersect count, so the result is a ratio of integers.
fn pair_main_term(
    a1: &DenseSet,
    a2: &DenseSet,
    b: &DenseSet,
    s: &DenseSet,
    bp_len: u64,
) -> BigRational {
    let c12 = a2.correlation_counts(&a1.reflect());
    let cb2 = a2.correlation_counts(&b.reflect());
    let c1b = b.correlation_counts(&a1.reflect());
    let cbb = b.correlation_counts(&b.reflect());
    let blen = b.len() as i128;
    let l1 = a1.len() as i128;
    let l2 = a2.len() as i128;
    let mut acc: i128 = 0;
    for x in s.iter_members() {
        let x = x as usize;
        acc += c12[x] as i128 * blen * blen - l1 * cb2[x] as i128 * blen
            - l2 * c1b[x] as i128 * blen
            + l1 * l2 * cbb[x] as i128;
    }
    big_ratio(acc, blen * blen * blen * bp_len as i128)
}

struct StepFrame {
    rb: RegularBohr,
    trace: Vec<IterationState>,
}

fn push_state(
    frame: &mut StepFrame,
    translates: Vec<u64>,
    alpha_geo: f64,
    branch: &str,
) {
    let spec = frame.rb.spec();
    frame.trace.push(IterationState {
        k: frame.trace.len(),
        gamma_k: spec.gamma().to_vec(),
        delta_k: spec.delta(),
        translates,
        alpha_k: alpha_geo,
        branch_taken: branch.to_string(),
    });
}

/// Run the pair driver: localize both sets to a common regular Bohr set,
/// and at each step either certify that the sumset covers a 1-sigma share of
/// a narrower Bohr set (handing out a progression through the pigeonhole) or
/// perform a density increment through the spectrum of the uncovered part.
///
/// All branch thresholds are evaluated in exact arithmetic; each committed
/// increment must raise the exact product of best-translate densities by the
/// factor 17/16 or the step retries with a halved localization radius.
pub fn iterate_pair(
    a1: &DenseSet,
    a2: &DenseSet,
    group: CyclicGroup,
    sigma: Rat,
    consts: &Constants,
) -> Result<SumsetResult> {
    group.same(&a1.group())?;
    group.same(&a2.group())?;
    if sigma <= Rat::new(0, 1) || sigma > Rat::new(1, 1) {
        return Err(Error::InvalidParameter(format!(
            "sigma {} outside (0, 1]",
            rat_str(sigma)
        )));
    }
    if a1.is_empty() || a2.is_empty() {
        return Err(Error::InvalidParameter("input sets must be nonempty".into()));
    }
    let full_sum = a1.sumset(a2);

    let spec0 = BohrSpec::new(group, &[0], Rat::new(1, 1))?;
    let mut frame = StepFrame { rb: find_regular_radius(&spec0, consts)?, trace: Vec::new() };

    let n = group.n();
    let alpha0 = ((a1.len() as f64 / n as f64) * (a2.len() as f64 / n as f64)).sqrt();
    let cap = (consts.c_iter * (1.0 / alpha0).ln()).ceil().max(0.0) as usize + 2;

    loop {
        let k = frame.trace.len();
        let spec = frame.rb.spec().clone();
        let b = frame.rb.set();
        let bsize = b.len();

        let counts1 = a1.correlation_counts(&b);
        let counts2 = a2.correlation_counts(&b);
        let (x1, c1) = argmax_counts(&counts1);
        let (x2, c2) = argmax_counts(&counts2);
        let alpha1 = Rat::new(c1 as i128, bsize as i128);
        let alpha2 = Rat::new(c2 as i128, bsize as i128);
        let prod = alpha1 * alpha2;
        let alpha_geo = rat_f64(prod).sqrt();
        let ap1 = a1.translate(group.neg(x1)).intersection(&b);
        let ap2 = a2.translate(group.neg(x2)).intersection(&b);

        if k >= cap {
            return Err(Error::IterationDiverged {
                steps: k,
                reason: format!(
                    "step cap {cap} reached with geometric mean density {alpha_geo:.6}"
                ),
            });
        }

        let d = Rat::new(spec.d() as i128, 1);
        let req = (consts.c_localize * prod * prod * spec.delta() / d).min(spec.delta());
        let mut cur = req;
        let mut committed = false;

        for _ in 0..=consts.retry_cap {
            let rbp = match find_regular_radius(&spec.with_delta(cur)?, consts) {
                Ok(rbp) => rbp,
                Err(Error::NoRegularRadius { .. }) => {
                    cur = halve(cur);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let bp = rbp.set();
            let sum12 = ap1.sumset(&ap2);
            let s_set = bp.difference(&sum12);
            let sigma_s = Rat::new(s_set.len() as i128, bp.len() as i128);

            if sigma_s <= sigma {
                // Terminal branch: the translated sumset covers a 1-sigma
                // share of B'; extract a progression from the covered part.
                let covered = bp.intersection(&sum12);
                let t12 = group.add(x1, x2);
                let bohr = if s_set.is_empty() {
                    let translated = bp.translate(t12);
                    if !translated.difference(&full_sum).is_empty() {
                        return Err(Error::HypothesisFails(
                            "claimed Bohr translate escapes the sumset".into(),
                        ));
                    }
                    Some(BohrTranslateWitness { translate: t12, spec: rbp.spec().clone() })
                } else {
                    None
                };
                let ap = match pigeonhole_ap(&covered, &rbp, sigma, consts)? {
                    PigeonholeOutcome::Found(w)
                    | PigeonholeOutcome::SmallBohr { best: Some(w) } => {
                        let wt = APWitness { start: group.add(w.start, t12), ..w };
                        verify_ap(&wt, &full_sum)?;
                        wt
                    }
                    PigeonholeOutcome::SmallBohr { best: None } => {
                        let start = full_sum
                            .iter_members()
                            .next()
                            .expect("sumset of nonempty sets is nonempty");
                        let wt = APWitness { start, step: 0, length: 1 };
                        verify_ap(&wt, &full_sum)?;
                        wt
                    }
                };
                push_state(&mut frame, vec![x1, x2], alpha_geo, "terminal");
                return Ok(SumsetResult {
                    kind: "ap_witness".to_string(),
                    ap: Some(ap),
                    bohr,
                    trace: frame.trace,
                    sigma_used: sigma,
                });
            }

            // Increment branch. The balanced main term must still carry at
            // least half of its ideal weight alpha1 alpha2 sigma_S, otherwise
            // the localization error has eaten the signal and we narrow.
            let main = pair_main_term(&ap1, &ap2, &b, &s_set, bp.len());
            let rhs0 = big(prod) * big(sigma_s);
            if main.abs() * big_ratio(2, 1) < rhs0 {
                cur = halve(cur);
                continue;
            }

            let mut eps = rat_root_lower(prod, 2) / Rat::new(2, 1);
            if eps <= Rat::new(0, 1) {
                eps = Rat::new(1, 2 * n as i128);
            }
            let s_ind = s_set.indicator_f64();
            let container =
                match chang_container(&s_ind, &rbp, eps, Rat::new(1, 2), consts) {
                    Ok(c) => c,
                    Err(e) if is_soft(&e) => {
                        cur = halve(cur);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
            let sub = container.container_spec.clone();

            // Choose which set to increment by the exact self-correlation
            // ratio on the container set, then try the other on failure.
            let bsub0 = build_bohr(&sub);
            let q1 = head_inner_product(&ap1, &b, &bsub0) / (big(alpha1) * big(alpha1));
            let q2 = head_inner_product(&ap2, &b, &bsub0) / (big(alpha2) * big(alpha2));
            let order: [usize; 2] = if q1 >= q2 { [1, 2] } else { [2, 1] };

            for idx in order {
                let a_loc = if idx == 1 { &ap1 } else { &ap2 };
                match l2_increment_impl(a_loc, &frame.rb, &sub, consts.c_l2_floor, consts) {
                    Ok((_, rb_next)) => {
                        let bn = rb_next.set();
                        let (_, n1) = argmax_counts(&a1.correlation_counts(&bn));
                        let (_, n2) = argmax_counts(&a2.correlation_counts(&bn));
                        let new_prod = big_ratio(n1 as i128, bn.len() as i128)
                            * big_ratio(n2 as i128, bn.len() as i128);
                        if new_prod >= big(prod) * big_ratio(17, 16) {
                            push_state(&mut frame, vec![x1, x2], alpha_geo, "increment");
                            frame.rb = rb_next;
                            committed = true;
                            break;
                        }
                    }
                    Err(e) if is_soft(&e) => {}
                    Err(e) => return Err(e),
                }
            }
            if committed {
                break;
            }
            cur = halve(cur);
        }

        if !committed {
            return Err(Error::IterationDiverged {
                steps: frame.trace.len(),
                reason: format!(
                    "retry budget exhausted at step {k} with geometric mean density {alpha_geo:.6}"
                ),
            });
        }
    }
}

/// Try the pair driver over the geometric grid sigma = 2^-j for j = 1..levels
/// and keep the longest verified progression; ties go to the largest sigma.
pub fn sigma_sweep_pair(
    a1: &DenseSet,
    a2: &DenseSet,
    group: CyclicGroup,
    levels: u32,
    consts: &Constants,
) -> Result<SumsetResult> {
    if levels == 0 || levels > 100 {
        return Err(Error::InvalidParameter(format!(
            "sweep levels {levels} outside 1..=100"
        )));
    }
    let mut best: Option<SumsetResult> = None;
    let mut last_err: Option<Error> = None;
    for j in 1..=levels {
        let sigma = Rat::new(1, 1i128 << j);
        match iterate_pair(a1, a2, group, sigma, consts) {
            Ok(r) => {
                let len = r.ap.as_ref().map_or(0, |w| w.length);
                let cur = best
                    .as_ref()
                    .and_then(|b| b.ap.as_ref())
                    .map_or(0, |w| w.length);
                if len > cur {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::InvalidParameter("empty sigma sweep".into()))
    })
}

/// Cyclic convolution of integer-valued arrays, exact in i128.
fn conv_i128(a: &[i128], b: &[i128], n: usize) -> Vec<i128> {
    let mut out = vec![0i128; n];
    for (y, &av) in a.iter().enumerate() {
        if av == 0 {
            continue;
        }
        for (z, &bv) in b.iter().enumerate() {
            if bv == 0 {
                continue;
            }
            let x = y + z;
            let x = if x >= n { x - n } else { x };
            out[x] += av * bv;
        }
    }
    out
}

/// chi_E |B| - |E| chi_B as a dense integer array: the balanced function of E
/// in B scaled by |B| (one extra |B| beyond the measure normalization the
/// caller tracks).
fn scaled_balanced(e: &DenseSet, b: &DenseSet, n: usize) -> Vec<i128> {
    let blen = b.len() as i128;
    let elen = e.len() as i128;
    let mut out = vec![0i128; n];
    for x in b.iter_members() {
        out[x as usize] = if e.contains(x) { blen - elen } else { -elen };
    }
    out
}

fn indicator_i128(e: &DenseSet, n: usize, scale: i128) -> Vec<i128> {
    let mut out = vec![0i128; n];
    for x in e.iter_members() {
        out[x as usize] = scale;
    }
    out
}

/// Sum of conv over the members of S divided by den, as an exact rational.
fn restricted_sum(conv: &[i128], s: &DenseSet, den: &BigInt) -> BigRational {
    let mut acc = BigInt::from(0);
    for x in s.iter_members() {
        acc += BigInt::from(conv[x as usize]);
    }
    BigRational::new(acc, den.clone())
}

/// |B|^3 |B'|^e as a BigInt denominator.
fn mixed_denominator(blen: u64, bplen: u64, e: u32) -> BigInt {
    BigInt::from(blen).pow(3) * BigInt::from(bplen).pow(e)
}

/// Transform magnitudes of a tail's balanced measure: |(f d beta')^(gamma)|
/// for every gamma, where f is the balanced function of F in B' and the
/// scaled array g carries f d beta' times |B'|^2.
fn tail_coeff_abs(g: &[i128], group: &CyclicGroup, bplen: u64) -> Vec<f64> {
    let gf: Vec<f64> = g.iter().map(|&v| v as f64).collect();
    let spec = dft_real(group, &gf).expect("length matches the group order");
    let scale = group.n() as f64 / (bplen as f64 * bplen as f64);
    (0..group.n()).map(|t| spec.abs(t) * scale).collect()
}

/// Run the m-fold driver (m >= 3): keep the two densest sets at the current
/// width, localize the rest to a narrower regular Bohr set, and either
/// certify that the sumset contains a full translate of the narrow set or
/// extract a density increment from the exact telescoping decomposition of
/// the uncovered part.
///
/// Increment steps add at most one frequency: the tail branches adjoin the
/// single character carrying a large balanced coefficient, and the head
/// branch narrows the same frequency system through the cutoff's own
/// spectrum. Each committed step must raise the exact product of
/// best-translate densities by (1 + g)^m where g is a rational lower bound
/// for alpha^(1/(m-2)) / (256 m).
pub fn iterate_mfold(
    sets: &[DenseSet],
    group: CyclicGroup,
    consts: &Constants,
) -> Result<SumsetResult> {
    let m = sets.len();
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "m-fold driver needs at least 3 sets, got {m}"
        )));
    }
    let n = group.n();
    let bits = 64 - u64::leading_zeros(n.max(2) - 1) as u32;
    if (2 * m as u32 - 1) * bits > 120 {
        return Err(Error::InvalidParameter(format!(
            "exact decomposition bookkeeping overflows for {m} summands at group order {n}"
        )));
    }
    for s in sets {
        group.same(&s.group())?;
        if s.is_empty() {
            return Err(Error::InvalidParameter("input sets must be nonempty".into()));
        }
    }
    let mut full_sum = sets[0].clone();
    for s in &sets[1..] {
        full_sum = full_sum.sumset(s);
    }

    let spec0 = BohrSpec::new(group, &[0], Rat::new(1, 1))?;
    let mut frame = StepFrame { rb: find_regular_radius(&spec0, consts)?, trace: Vec::new() };

    let geo0 = sets
        .iter()
        .map(|s| (s.len() as f64 / n as f64).ln())
        .sum::<f64>()
        .exp()
        .powf(1.0 / m as f64);
    let cap = (consts.c_iter
        * m as f64
        * geo0.powf(-1.0 / (m as f64 - 2.0))
        * (1.0 / geo0).ln())
    .ceil()
    .max(0.0) as usize
        + 2;

    loop {
        let k = frame.trace.len();
        let spec = frame.rb.spec().clone();
        let b = frame.rb.set();
        let bsize = b.len();

        // Best translate of every input set against the current Bohr set;
        // the two densest take the head slots.
        let mut head_translates = vec![0u64; m];
        let mut head_dens = vec![Rat::new(0, 1); m];
        for (i, s) in sets.iter().enumerate() {
            let (x, c) = argmax_counts(&s.correlation_counts(&b));
            head_translates[i] = x;
            head_dens[i] = Rat::new(c as i128, bsize as i128);
        }
        let mut by_density: Vec<usize> = (0..m).collect();
        by_density.sort_by(|&i, &j| head_dens[j].cmp(&head_dens[i]).then(i.cmp(&j)));
        let (h1, h2) = (by_density[0].min(by_density[1]), by_density[0].max(by_density[1]));
        let tails: Vec<usize> = (0..m).filter(|&i| i != h1 && i != h2).collect();

        let e1 = sets[h1].translate(group.neg(head_translates[h1])).intersection(&b);
        let e2 = sets[h2].translate(group.neg(head_translates[h2])).intersection(&b);
        let alpha1 = head_dens[h1];
        let alpha2 = head_dens[h2];
        let min_dens = head_dens.iter().copied().min().expect("nonempty density list");
        if min_dens <= Rat::new(0, 1) {
            return Err(Error::ZeroFunction("a summand has no mass on the current Bohr set"));
        }

        if k >= cap {
            return Err(Error::IterationDiverged {
                steps: k,
                reason: format!("step cap {cap} reached"),
            });
        }

        let d = Rat::new(spec.d() as i128, 1);
        let req = (consts.c_localize * min_dens * min_dens * spec.delta()
            / (Rat::new(m as i128, 1) * d))
            .min(spec.delta());
        let mut cur = req;
        let mut committed = false;

        for _ in 0..=consts.retry_cap {
            let rbp = match find_regular_radius(&spec.with_delta(cur)?, consts) {
                Ok(rbp) => rbp,
                Err(Error::NoRegularRadius { .. }) => {
                    cur = halve(cur);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let bp = rbp.set();
            let bplen = bp.len();

            // Localize the tails to B' with their own best translates.
            let mut tail_sets: Vec<DenseSet> = Vec::with_capacity(tails.len());
            let mut tail_trans: Vec<u64> = Vec::with_capacity(tails.len());
            let mut tail_dens: Vec<Rat> = Vec::with_capacity(tails.len());
            let mut degenerate_tail = false;
            for &i in &tails {
                let (x, c) = argmax_counts(&sets[i].correlation_counts(&bp));
                if c == 0 {
                    degenerate_tail = true;
                    break;
                }
                tail_sets.push(sets[i].translate(group.neg(x)).intersection(&bp));
                tail_trans.push(x);
                tail_dens.push(Rat::new(c as i128, bplen as i128));
            }
            if degenerate_tail {
                cur = halve(cur);
                continue;
            }

            let mut translates = vec![0u64; m];
            translates[h1] = head_translates[h1];
            translates[h2] = head_translates[h2];
            for (pos, &i) in tails.iter().enumerate() {
                translates[i] = tail_trans[pos];
            }

            let mut support = e1.sumset(&e2);
            for f in &tail_sets {
                support = support.sumset(f);
            }
            let s_set = bp.difference(&support);
            let sigma_s = Rat::new(s_set.len() as i128, bplen as i128);

            let prod_all = tail_dens
                .iter()
                .fold(big(alpha1) * big(alpha2), |acc, &t| acc * big(t));
            let alpha_geo = prod_all.to_f64().unwrap_or(f64::NAN).powf(1.0 / m as f64);

            if s_set.is_empty() {
                // Terminal: B' sits inside the translated sumset exactly.
                let mut t_total = group.add(head_translates[h1], head_translates[h2]);
                for &x in &tail_trans {
                    t_total = group.add(t_total, x);
                }
                let translated = bp.translate(t_total);
                if !translated.difference(&full_sum).is_empty() {
                    return Err(Error::HypothesisFails(
                        "claimed Bohr translate escapes the sumset".into(),
                    ));
                }
                let bap = ap_in_bohr(&rbp)?;
                let wt = APWitness {
                    start: group.add(bap.witness.start, t_total),
                    ..bap.witness
                };
                verify_ap(&wt, &full_sum)?;
                let bohr =
                    Some(BohrTranslateWitness { translate: t_total, spec: rbp.spec().clone() });
                push_state(&mut frame, translates, alpha_geo, "terminal");
                return Ok(SumsetResult {
                    kind: "bohr_witness".to_string(),
                    ap: Some(wt),
                    bohr,
                    trace: frame.trace,
                    sigma_used: Rat::new(0, 1),
                });
            }

            // Exact telescoping decomposition. With all arrays scaled to
            // integers, the inner product of each term against chi_S under
            // beta' is an integer over a tracked denominator.
            let nn = n as usize;
            let g1 = scaled_balanced(&e1, &b, nn);
            let g2 = scaled_balanced(&e2, &b, nn);
            let tails_g: Vec<Vec<i128>> =
                tail_sets.iter().map(|f| scaled_balanced(f, &bp, nn)).collect();
            let tails_avg: Vec<Vec<i128>> = tail_sets
                .iter()
                .map(|f| indicator_i128(&bp, nn, f.len() as i128))
                .collect();
            let tails_ind: Vec<Vec<i128>> =
                tail_sets.iter().map(|f| indicator_i128(f, nn, 1)).collect();

            // Prefix convolutions with the balanced tails: prefix[j] carries
            // f1 * f2 d beta * f3 d beta' * ... * f_(j+2) d beta'.
            let mut prefixes: Vec<Vec<i128>> = Vec::with_capacity(tails.len() + 1);
            prefixes.push(conv_i128(&g1, &g2, nn));
            for g in &tails_g {
                let last = prefixes.last().expect("seeded with the head convolution");
                prefixes.push(conv_i128(last, g, nn));
            }

            let i_val = restricted_sum(
                prefixes.last().expect("head convolution present"),
                &s_set,
                &mixed_denominator(bsize, bplen, 2 * m as u32 - 3),
            );
            let sig_big = big(sigma_s);
            let quarter = &sig_big * &prod_all / big_ratio(4, 1);

            enum Branch {
                MainTerm,
                Offset(usize),
            }

            let branch = if i_val.abs() >= quarter {
                Some(Branch::MainTerm)
            } else {
                let mut found = None;
                for (pos, _) in tails.iter().enumerate() {
                    // Term with slot j = pos + 3 averaged: prefix up to the
                    // previous slot, the plateau at slot j, indicators after.
                    let mut term = conv_i128(&prefixes[pos], &tails_avg[pos], nn);
                    for ind in tails_ind.iter().skip(pos + 1) {
                        term = conv_i128(&term, ind, nn);
                    }
                    let j = pos as u32 + 3;
                    let den = mixed_denominator(bsize, bplen, m as u32 + j - 3);
                    let val = restricted_sum(&term, &s_set, &den);
                    let threshold = &sig_big * &prod_all
                        / BigRational::new(BigInt::from(2u32).pow(j), BigInt::from(1));
                    if val.abs() >= threshold {
                        found = Some(Branch::Offset(pos));
                        break;
                    }
                }
                found
            };

            let attempt = match branch {
                None => None,
                Some(Branch::MainTerm) => {
                    // Some tail must carry a pointwise large coefficient at
                    // the frequency maximizing the product of magnitudes.
                    let abs: Vec<Vec<f64>> = tails_g
                        .iter()
                        .map(|g| tail_coeff_abs(g, &group, bplen))
                        .collect();
                    let mut gamma_star = 0u64;
                    let mut best = -1.0f64;
                    for t in 0..n {
                        let p: f64 = abs.iter().map(|a| a[t as usize]).product();
                        if p > best {
                            best = p;
                            gamma_star = t;
                        }
                    }
                    if best <= 0.0 {
                        None
                    } else {
                        let mut slot = 0usize;
                        let mut ratio = -1.0f64;
                        for (pos, a) in abs.iter().enumerate() {
                            let r = a[gamma_star as usize] / rat_f64(tail_dens[pos]);
                            if r > ratio {
                                ratio = r;
                                slot = pos;
                            }
                        }
                        let grid = ((ratio - 1e-6) * (1 << 20) as f64).floor() as i128;
                        if grid <= 0 {
                            None
                        } else {
                            let eta = Rat::new(grid, 1 << 20).min(Rat::new(1, 1));
                            linf_increment_impl(
                                &tail_sets[slot],
                                &rbp,
                                Character { freq: gamma_star },
                                eta,
                                consts,
                            )
                            .ok()
                            .map(|(_, rb_next)| rb_next)
                        }
                    }
                }
                Some(Branch::Offset(pos)) => {
                    // First look for a pointwise large tail coefficient among
                    // the slots before j; otherwise the heads carry the
                    // correlation and the same frequency system narrows.
                    let mut tail_hit = None;
                    for p in 0..pos {
                        let abs = tail_coeff_abs(&tails_g[p], &group, bplen);
                        let (gamma, val) = abs
                            .iter()
                            .enumerate()
                            .fold((0usize, -1.0f64), |(bi, bv), (i, &v)| {
                                if v > bv {
                                    (i, v)
                                } else {
                                    (bi, bv)
                                }
                            });
                        if val >= rat_f64(tail_dens[p]) / 2.0 - 1e-12 {
                            tail_hit = Some((p, gamma as u64));
                            break;
                        }
                    }
                    match tail_hit {
                        Some((p, gamma)) => linf_increment_impl(
                            &tail_sets[p],
                            &rbp,
                            Character { freq: gamma },
                            Rat::new(1, 2),
                            consts,
                        )
                        .ok()
                        .map(|(_, rb_next)| rb_next),
                        None => {
                            let eta1 = rat_f64(alpha1 * alpha2).sqrt() / 16.0;
                            match nest_support_radius(&rbp, eta1, 0.5, consts) {
                                Err(e) if is_soft(&e) => None,
                                Err(e) => return Err(e),
                                Ok(nest) if nest.delta_prime <= Rat::new(0, 1) => None,
                                Ok(nest) => {
                                    let sub = rbp.spec().with_delta(nest.delta_prime)?;
                                    let bsub0 = build_bohr(&sub);
                                    let r1 = head_inner_product(&e1, &b, &bsub0)
                                        / (big(alpha1) * big(alpha1));
                                    let r2 = head_inner_product(&e2, &b, &bsub0)
                                        / (big(alpha2) * big(alpha2));
                                    let order: [&DenseSet; 2] =
                                        if r1 >= r2 { [&e1, &e2] } else { [&e2, &e1] };
                                    let mut got = None;
                                    for a_loc in order {
                                        if let Ok((_, rb_next)) = l2_increment_impl(
                                            a_loc,
                                            &frame.rb,
                                            &sub,
                                            Rat::new(1, 64),
                                            consts,
                                        ) {
                                            got = Some(rb_next);
                                            break;
                                        }
                                    }
                                    got
                                }
                            }
                        }
                    }
                }
            };

            if let Some(rb_next) = attempt {
                // Commit only when the exact product of best-translate
                // densities grows by the guaranteed per-step factor.
                let bn = rb_next.set();
                let mut new_prod = big_ratio(1, 1);
                for s in sets {
                    let (_, c) = argmax_counts(&s.correlation_counts(&bn));
                    new_prod = new_prod * big_ratio(c as i128, bn.len() as i128);
                }
                let prod_rat = tail_dens
                    .iter()
                    .fold(alpha1 * alpha2, |acc, &t| acc * t);
                let root = rat_root_lower(prod_rat, (m * (m - 2)) as u32);
                let ghat = root / Rat::new(256 * m as i128, 1);
                let factor = big(Rat::new(1, 1) + ghat).pow(m as i32);
                if new_prod >= &prod_all * &factor {
                    push_state(&mut frame, translates, alpha_geo, "increment");
                    frame.rb = rb_next;
                    committed = true;
                    break;
                }
            }
            cur = halve(cur);
        }

        if !committed {
            return Err(Error::IterationDiverged {
                steps: frame.trace.len(),
                reason: format!("retry budget exhausted at step {k}"),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cgroup(n: u64) -> CyclicGroup {
        CyclicGroup::new(n).unwrap()
    }

    fn whole_group_regular(n: u64, consts: &Constants) -> RegularBohr {
        let spec = BohrSpec::new(cgroup(n), &[0], Rat::new(1, 1)).unwrap();
        find_regular_radius(&spec, consts).unwrap()
    }

    fn evens(n: u64) -> DenseSet {
        let g = cgroup(n);
        DenseSet::from_members(&g, &(0..n).step_by(2).collect::<Vec<_>>()).unwrap()
    }

    fn random_set(n: u64, density: f64, seed: u64) -> DenseSet {
        let g = cgroup(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = DenseSet::empty(&g);
        for x in 0..n {
            if rng.random_range(0.0..1.0) < density {
                s.insert(x);
            }
        }
        if s.is_empty() {
            s.insert(0);
        }
        s
    }

    #[test]
    fn root_lower_bounds_are_exact_or_tight() {
        assert_eq!(rat_root_lower(Rat::new(1, 4), 2), Rat::new(1, 2));
        assert_eq!(rat_root_lower(Rat::new(1, 1), 3), Rat::new(1, 1));
        assert_eq!(rat_root_lower(Rat::new(0, 1), 2), Rat::new(0, 1));
        let r = rat_root_lower(Rat::new(1, 2), 2);
        assert!(r * r <= Rat::new(1, 2));
        let step = Rat::new(1, 1 << 20);
        assert!((r + step) * (r + step) > Rat::new(1, 2));
    }

    #[test]
    fn linf_increment_on_parity_set() {
        let consts = Constants::default();
        let rb = whole_group_regular(16, &consts);
        let a = evens(16);
        let res =
            linf_increment(&a, &rb, Character { freq: 8 }, Rat::new(1, 1), &consts).unwrap();
        assert_eq!(res.new_spec.gamma(), &[0, 8]);
        assert_eq!(res.witness_point % 2, 0);
        assert!((res.claimed_lower - 0.5625).abs() < 1e-12);
        assert!((res.realized - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linf_rejects_vanishing_balanced_function() {
        let consts = Constants::default();
        let rb = whole_group_regular(16, &consts);
        let a = DenseSet::full(&cgroup(16));
        let err =
            linf_increment(&a, &rb, Character { freq: 8 }, Rat::new(1, 2), &consts).unwrap_err();
        assert!(matches!(err, Error::HypothesisFails(_)), "got {err:?}");
    }

    #[test]
    fn linf_rejects_support_violation_and_bad_eta() {
        let consts = Constants::default();
        let g = cgroup(16);
        let spec = BohrSpec::new(g, &[0, 8], Rat::new(1, 4)).unwrap();
        let rb = find_regular_radius(&spec, &consts).unwrap();
        let outside = DenseSet::from_members(&g, &[15]).unwrap();
        let err = linf_increment(&outside, &rb, Character { freq: 1 }, Rat::new(1, 2), &consts)
            .unwrap_err();
        assert!(matches!(err, Error::SupportViolation { point: 15, .. }), "got {err:?}");

        let rb = whole_group_regular(16, &consts);
        let err = linf_increment(&evens(16), &rb, Character { freq: 8 }, Rat::new(2, 1), &consts)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn linf_with_measured_frequency_on_random_set() {
        let consts = Constants::default();
        let n = 128u64;
        let rb = whole_group_regular(n, &consts);
        let a = random_set(n, 0.3, 7);
        let b = rb.set();
        let alpha = a.len() as f64 / n as f64;
        let mut gamma = 1u64;
        let mut best = -1.0;
        for t in 1..n {
            let v = balanced_coeff(&a, &b, t).norm();
            if v > best {
                best = v;
                gamma = t;
            }
        }
        let grid = ((best / alpha - 1e-6) * (1 << 20) as f64).floor() as i128;
        let eta = Rat::new(grid.max(1), 1 << 20).min(Rat::new(1, 1));
        let res = linf_increment(&a, &rb, Character { freq: gamma }, eta, &consts).unwrap();
        assert!(res.realized >= res.claimed_lower - 1e-9);
        assert!(res.new_spec.gamma().contains(&gamma));
    }

    #[test]
    fn l2_certifies_parity_self_correlation() {
        let consts = Constants::default();
        let rb = whole_group_regular(16, &consts);
        let a = evens(16);
        let sub = BohrSpec::new(cgroup(16), &[0, 8], Rat::new(1, 4)).unwrap();
        let res = l2_increment(&a, &rb, &sub, Rat::new(1, 1), &consts).unwrap();
        // base radius 15/16, certified sub radius 3/16: claimed is exactly
        // 1/2 (1 + 1) - 2 (3/16)/(15/16) = 3/5.
        assert!((res.claimed_lower - 0.6).abs() < 1e-12);
        assert!((res.realized - 1.0).abs() < 1e-12);
        assert_eq!(res.witness_point % 2, 0);
        assert_eq!(res.new_spec.gamma(), &[0, 8]);
    }

    #[test]
    fn l2_rejects_zero_inner_product() {
        let consts = Constants::default();
        let rb = whole_group_regular(16, &consts);
        let a = DenseSet::full(&cgroup(16));
        let sub = BohrSpec::new(cgroup(16), &[0, 8], Rat::new(1, 4)).unwrap();
        let err = l2_increment(&a, &rb, &sub, Rat::new(1, 16), &consts).unwrap_err();
        assert!(matches!(err, Error::HypothesisFails(_)), "got {err:?}");
    }

    #[test]
    fn l2_rejects_narrower_base_frequencies() {
        let consts = Constants::default();
        let g = cgroup(32);
        let spec = BohrSpec::new(g, &[1, 5], Rat::new(1, 4)).unwrap();
        let rb = find_regular_radius(&spec, &consts).unwrap();
        let a = {
            let mut s = DenseSet::empty(&g);
            s.insert(0);
            s
        };
        let sub = BohrSpec::new(g, &[1], Rat::new(1, 8)).unwrap();
        let err = l2_increment(&a, &rb, &sub, Rat::new(1, 16), &consts).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "got {err:?}");
    }

    #[test]
    fn l2_on_planted_parity_bias() {
        let consts = Constants::default();
        let n = 512u64;
        let rb = whole_group_regular(n, &consts);
        let g = cgroup(n);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut a = DenseSet::empty(&g);
        for x in 0..n {
            let p = if x % 2 == 0 { 0.45 } else { 0.05 };
            if rng.random_range(0.0..1.0) < p {
                a.insert(x);
            }
        }
        let alpha = a.len() as f64 / n as f64;
        let sub = BohrSpec::new(g, &[0, 256], Rat::new(1, 4)).unwrap();
        let res = l2_increment(&a, &rb, &sub, Rat::new(1, 4), &consts).unwrap();
        assert!(res.realized >= res.claimed_lower - 1e-9);
        assert!(res.realized > alpha);
    }

    #[test]
    fn pair_driver_on_full_groups_exits_immediately() {
        let consts = Constants::default();
        let g = cgroup(64);
        let a = DenseSet::full(&g);
        let res = iterate_pair(&a, &a, g, Rat::new(1, 8), &consts).unwrap();
        assert_eq!(res.kind, "ap_witness");
        assert_eq!(res.trace.len(), 1);
        assert_eq!(res.trace[0].branch_taken, "terminal");
        let ap = res.ap.unwrap();
        assert_eq!(ap.length, 64);
        assert!(res.bohr.is_some());
        assert_eq!(res.sigma_used, Rat::new(1, 8));
    }

    #[test]
    fn pair_driver_localizes_to_parity_subgroup() {
        let consts = Constants::default();
        let g = cgroup(64);
        let a = evens(64);
        let res = iterate_pair(&a, &a, g, Rat::new(1, 8), &consts).unwrap();
        assert_eq!(res.trace.len(), 2);
        assert_eq!(res.trace[0].branch_taken, "increment");
        assert_eq!(res.trace[1].branch_taken, "terminal");
        assert!(res.trace[1].gamma_k.contains(&32));
        // the committed step must have raised the geometric mean by the
        // guaranteed factor
        let growth = res.trace[1].alpha_k / res.trace[0].alpha_k;
        assert!(growth >= (17.0f64 / 16.0).sqrt() - 1e-9, "growth {growth}");
        let ap = res.ap.unwrap();
        let sumset = a.sumset(&a);
        verify_ap(&ap, &sumset).unwrap();
        for x in ap.elements(&g) {
            assert_eq!(x % 2, 0);
        }
        assert!(res.bohr.is_some());
    }

    #[test]
    fn pair_driver_rejects_bad_inputs() {
        let consts = Constants::default();
        let g = cgroup(16);
        let a = evens(16);
        let empty = DenseSet::empty(&g);
        assert!(matches!(
            iterate_pair(&a, &empty, g, Rat::new(1, 4), &consts),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            iterate_pair(&a, &a, g, Rat::new(0, 1), &consts),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn sigma_sweep_returns_longest_progression() {
        let consts = Constants::default();
        let g = cgroup(64);
        let a = evens(64);
        let single = iterate_pair(&a, &a, g, Rat::new(1, 8), &consts).unwrap();
        let swept = sigma_sweep_pair(&a, &a, g, 5, &consts).unwrap();
        let single_len = single.ap.unwrap().length;
        let swept_len = swept.ap.unwrap().length;
        assert!(swept_len >= single_len, "{swept_len} < {single_len}");
    }

    #[test]
    fn mfold_driver_on_full_groups() {
        let consts = Constants::default();
        let g = cgroup(32);
        let a = DenseSet::full(&g);
        let res = iterate_mfold(&[a.clone(), a.clone(), a], g, &consts).unwrap();
        assert_eq!(res.kind, "bohr_witness");
        assert_eq!(res.trace.len(), 1);
        assert_eq!(res.trace[0].branch_taken, "terminal");
        assert_eq!(res.ap.unwrap().length, 32);
        assert_eq!(res.sigma_used, Rat::new(0, 1));
        let w = res.bohr.unwrap();
        assert_eq!(build_bohr(&w.spec).len(), 32);
    }

    #[test]
    fn mfold_driver_localizes_parity_triple() {
        let consts = Constants::default();
        let g = cgroup(64);
        let a = evens(64);
        let res = iterate_mfold(&[a.clone(), a.clone(), a.clone()], g, &consts).unwrap();
        assert_eq!(res.kind, "bohr_witness");
        assert!(res.trace.len() >= 2);
        assert_eq!(res.trace.last().unwrap().branch_taken, "terminal");
        // dimension grows by at most one frequency per step
        for pair in res.trace.windows(2) {
            assert!(pair[1].gamma_k.len() <= pair[0].gamma_k.len() + 1);
            assert!(pair[1].alpha_k >= pair[0].alpha_k - 1e-12);
        }
        let w = res.bohr.unwrap();
        let sumset = a.sumset(&a).sumset(&a);
        let translated = build_bohr(&w.spec).translate(w.translate);
        assert!(translated.difference(&sumset).is_empty());
        let ap = res.ap.unwrap();
        verify_ap(&ap, &sumset).unwrap();
    }

    #[test]
    fn mfold_driver_rejects_small_m() {
        let consts = Constants::default();
        let g = cgroup(16);
        let a = evens(16);
        assert!(matches!(
            iterate_mfold(&[a.clone(), a], g, &consts),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn trace_dumps_one_json_object_per_line() {
        let consts = Constants::default();
        let g = cgroup(64);
        let a = evens(64);
        let res = iterate_pair(&a, &a, g, Rat::new(1, 8), &consts).unwrap();
        let dump = res.trace_json_lines();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), res.trace.len());
        for line in lines {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            for key in ["k", "gamma_k", "delta_k", "translates", "alpha_k", "branch_taken"] {
                assert!(v.get(key).is_some(), "missing {key}");
            }
        }
        let whole: serde_json::Value =
            serde_json::to_value(&res).expect("result serializes");
        assert_eq!(whole["kind"], "ap_witness");
        assert!(whole.get("sigma_used").is_some());
    }
}
