//! Fourier analysis on Z/NZ, global and local, plus smoothed Bohr cutoffs.
//!
//! Normalization conventions, fixed once for the whole crate:
//!
//! * `dft`: averages over the group, `f_hat(t) = (1/n) sum_x f(x) conj(g_t(x))`.
//! * `fft_raw` / `ifft_raw`: unscaled sums, used internally.
//! * `local_transform`: unscaled sum against measure weights,
//!   `sum_x f(x) mu(x) conj(g_t(x))`; with a probability cutoff this is the
//!   expectation of `f conj(g_t)` under the cutoff.
//! * `convolve_functions`: averaging, `(1/n) sum_y f(y) g(x-y)`.
//! * `convolve_counting`: plain sum, `sum_y f(y) g(x-y)`.
//! * `convolve_with_measure`: `sum_y f(x-y) mu(y)`, so convolving with a
//!   point mass at 0 is the identity.
//!
//! The fast transforms run through a mixed-radix FFT; a naive quadratic
//! implementation is kept permanently alongside as the correctness oracle and
//! never calls the fast path.

use num::bigint::BigInt;
use num::{BigRational, One, ToPrimitive};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::bohr::{build_bohr, rat_str, RegularBohr};
use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::group::{char_eval, one_minus_char_abs, Character, CyclicGroup, DenseSet, Measure, Rat};

/// Frequency-indexed transform values together with a note saying what was
/// transformed.
#[derive(Debug, Clone)]
pub struct LocalSpectrum {
    group: CyclicGroup,
    values: Vec<Complex64>,
    pub source: String,
}

impl LocalSpectrum {
    pub fn group(&self) -> CyclicGroup {
        self.group
    }

    #[inline]
    pub fn value(&self, t: u64) -> Complex64 {
        self.values[(t % self.group.n()) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn abs(&self, t: u64) -> f64 {
        self.value(t).norm()
    }

    /// sum_t |values(t)|^2, the spectral side of Parseval.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

pub(crate) fn fft_raw(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(buf.len());
    fft.process(buf);
}

pub(crate) fn ifft_raw(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(buf.len());
    fft.process(buf);
}

fn check_len(group: &CyclicGroup, len: usize) -> Result<()> {
    if len as u64 != group.n() {
        return Err(Error::InvalidParameter(format!(
            "function has {len} values but the group has order {}",
            group.n()
        )));
    }
    Ok(())
}

/// Averaging transform: values[t] = (1/n) sum_x f(x) conj(g_t(x)).
pub fn dft(group: &CyclicGroup, f: &[Complex64]) -> Result<LocalSpectrum> {
    check_len(group, f.len())?;
    let n = group.n();
    let mut buf = f.to_vec();
    fft_raw(&mut buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    Ok(LocalSpectrum { group: *group, values: buf, source: "dft".into() })
}

pub fn dft_real(group: &CyclicGroup, f: &[f64]) -> Result<LocalSpectrum> {
    let complex: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft(group, &complex)
}

/// Quadratic reference transform, evaluated term by term from reduced angles.
/// Kept as the permanent oracle for the fast path.
pub fn dft_naive(group: &CyclicGroup, f: &[Complex64]) -> Result<LocalSpectrum> {
    check_len(group, f.len())?;
    let n = group.n();
    let mut values = Vec::with_capacity(n as usize);
    for t in 0..n {
        let chi = Character::new(group, t);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, &fx) in f.iter().enumerate() {
            acc += fx * char_eval(group, chi, x as u64).conj();
        }
        values.push(acc / n as f64);
    }
    Ok(LocalSpectrum { group: *group, values, source: "dft-naive".into() })
}

/// Local transform of f against a cutoff measure:
/// values[t] = sum_x f(x) mu(x) conj(g_t(x)). Errors out when f carries mass
/// outside the cutoff's support.
pub fn local_transform(group: &CyclicGroup, f: &[f64], cutoff: &Measure) -> Result<LocalSpectrum> {
    check_len(group, f.len())?;
    group.same(&cutoff.group())?;
    let support = cutoff.support_set();
    for (x, &v) in f.iter().enumerate() {
        if v != 0.0 && !support.contains(x as u64) {
            return Err(Error::SupportViolation { point: x as u64, value: v });
        }
    }
    let weights = cutoff.to_f64_dense();
    let mut buf: Vec<Complex64> =
        f.iter().zip(&weights).map(|(&a, &w)| Complex64::new(a * w, 0.0)).collect();
    fft_raw(&mut buf);
    Ok(LocalSpectrum { group: *group, values: buf, source: "local".into() })
}

/// Frequencies whose transform value reaches the threshold in absolute value,
/// ascending.
pub fn spectrum_level_set(s: &LocalSpectrum, threshold: f64) -> Vec<Character> {
    let group = s.group();
    (0..group.n())
        .filter(|&t| s.abs(t) >= threshold)
        .map(|t| Character { freq: t })
        .collect()
}

/// (1/n) sum_y f(y) g(x-y) via the transform domain.
pub fn convolve_functions(
    group: &CyclicGroup,
    f: &[Complex64],
    g: &[Complex64],
) -> Result<Vec<Complex64>> {
    let counting = convolve_counting(group, f, g)?;
    let n = group.n() as f64;
    Ok(counting.into_iter().map(|v| v / n).collect())
}

/// sum_y f(y) g(x-y) via the transform domain.
pub fn convolve_counting(
    group: &CyclicGroup,
    f: &[Complex64],
    g: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_len(group, f.len())?;
    check_len(group, g.len())?;
    let n = group.n() as f64;
    let mut a = f.to_vec();
    let mut b = g.to_vec();
    fft_raw(&mut a);
    fft_raw(&mut b);
    for (va, vb) in a.iter_mut().zip(&b) {
        *va *= vb;
    }
    ifft_raw(&mut a);
    for v in a.iter_mut() {
        *v /= n;
    }
    Ok(a)
}

/// Quadratic reference convolution with counting normalization.
pub fn convolve_naive_counting(
    group: &CyclicGroup,
    f: &[Complex64],
    g: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_len(group, f.len())?;
    check_len(group, g.len())?;
    let n = group.n();
    let mut out = vec![Complex64::new(0.0, 0.0); n as usize];
    for x in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for y in 0..n {
            acc += f[y as usize] * g[group.sub(x, y) as usize];
        }
        out[x as usize] = acc;
    }
    Ok(out)
}

/// (f * mu)(x) = sum_y f(x-y) mu(y).
pub fn convolve_with_measure(group: &CyclicGroup, f: &[f64], mu: &Measure) -> Result<Vec<f64>> {
    check_len(group, f.len())?;
    group.same(&mu.group())?;
    let mut out = vec![0.0; f.len()];
    for (&y, w) in mu.support() {
        let w = w.to_f64().unwrap_or(f64::NAN);
        for x in 0..group.n() {
            out[x as usize] += f[group.sub(x, y) as usize] * w;
        }
    }
    Ok(out)
}

/// The smoothing of a Bohr cutoff: the wider cutoff at radius (1+kappa)delta
/// convolved with L copies of the thin cutoff at radius kappa delta / L.
/// Weights are exact rationals; on B(Gamma, delta) the result is exactly
/// constant, and its support stays inside B(Gamma, (1+2 kappa") delta).
#[derive(Debug, Clone)]
pub struct SmoothedCutoff {
    pub base: RegularBohr,
    pub l: u32,
    pub kappa: Rat,
    pub weights: Measure,
}

impl SmoothedCutoff {
    pub fn support(&self) -> DenseSet {
        self.weights.support_set()
    }

    /// The exact constant value taken on B(Gamma, delta):
    /// 1 / |B(Gamma, (1+kappa) delta)|.
    pub fn plateau_value(&self) -> BigRational {
        let wide = self.base.spec().with_delta(clamp_radius(
            (Rat::new(1, 1) + self.kappa) * self.base.delta(),
        ));
        let wide = wide.expect("radius was validated at construction");
        BigRational::new(BigInt::one(), BigInt::from(build_bohr(&wide).len()))
    }
}

fn clamp_radius(r: Rat) -> Rat {
    if r > Rat::new(1, 1) {
        Rat::new(1, 1)
    } else {
        r
    }
}

/// Build the smoothed cutoff by exact integer convolution counting. The
/// plateau identity rests on the floor inequality
/// floor(delta n) + L floor(kappa delta n / L) <= floor((1+kappa) delta n),
/// which holds because the left side is an integer below (1+kappa) delta n.
pub fn build_smoothed_cutoff(base: &RegularBohr, l: u32, kappa: Rat) -> Result<SmoothedCutoff> {
    if l < 2 || l % 2 != 0 {
        return Err(Error::InvalidParameter(format!("smoothing depth {l} must be even and >= 2")));
    }
    if kappa <= Rat::new(0, 1) || kappa > Rat::new(1, 1) {
        return Err(Error::InvalidParameter(format!(
            "smoothing width {} outside (0, 1]",
            rat_str(kappa)
        )));
    }
    let spec = base.spec();
    let n = spec.n();
    // Counting values are bounded by n^(l+1); keep them inside u128.
    let bits = 128 - (n as u128).leading_zeros();
    if (l + 1) * bits > 126 {
        return Err(Error::InvalidParameter(format!(
            "smoothing depth {l} overflows exact counting at n = {n}; lower the depth"
        )));
    }
    let delta = spec.delta();
    let wide = spec.with_delta(clamp_radius((Rat::new(1, 1) + kappa) * delta))?;
    let thin = spec.with_delta(kappa * delta / Rat::new(l as i128, 1))?;
    let b_wide = build_bohr(&wide);
    let b_thin = build_bohr(&thin);
    let thin_members = b_thin.members();

    let mut counts: Vec<u128> =
        (0..n).map(|x| if b_wide.contains(x) { 1u128 } else { 0 }).collect();
    for _ in 0..l {
        let mut next = vec![0u128; n as usize];
        for &b in &thin_members {
            for x in 0..n {
                next[((x + b) % n) as usize] += counts[x as usize];
            }
        }
        counts = next;
    }

    let total = BigInt::from(b_wide.len())
        * BigInt::from(b_thin.len()).pow(l);
    let group = spec.group();
    let entries: Vec<(u64, BigRational)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(x, &c)| (x as u64, BigRational::new(BigInt::from(c), total.clone())))
        .collect();
    let weights = Measure::from_weights(&group, entries)?;
    Ok(SmoothedCutoff { base: base.clone(), l, kappa, weights })
}

/// A radius certified so that every high-correlation frequency of the cutoff
/// is nearly constant on the shrunk Bohr set.
#[derive(Debug, Clone)]
pub struct NestedRadius {
    pub delta_prime: Rat,
    /// The integer membership threshold of the certified radius.
    pub threshold: u64,
    /// The frequencies t with |beta_hat(t)| >= eta1, ascending.
    pub frequencies: Vec<u64>,
    /// delta' * d / (eta1 eta2 delta): how the certified radius compares to
    /// the eta1 eta2 delta / d scale the search aims for.
    pub measured_constant: f64,
    /// Whether measured_constant reached the configured c_nest.
    pub met_target: bool,
    pub pairs_checked: u64,
}

/// Find the largest radius delta' <= delta such that |1 - g_t(x)| <= eta2
/// for every frequency t with |beta_hat(t)| >= eta1 and every x in
/// B(Gamma, delta'). The inclusion is established by full enumeration: for
/// each such t the minimal nu over offending x bounds the usable threshold.
pub fn nest_support_radius(
    rb: &RegularBohr,
    eta1: f64,
    eta2: f64,
    consts: &Constants,
) -> Result<NestedRadius> {
    if !(eta1 > 0.0 && eta1 <= 1.0) || !(eta2 > 0.0) {
        return Err(Error::InvalidParameter(
            "nesting thresholds must satisfy eta1 in (0,1], eta2 > 0".into(),
        ));
    }
    let spec = rb.spec();
    let group = spec.group();
    let n = group.n();
    let b = build_bohr(spec);
    let size = b.len() as f64;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|x| Complex64::new(if b.contains(x) { 1.0 / size } else { 0.0 }, 0.0))
        .collect();
    fft_raw(&mut buf);
    let frequencies: Vec<u64> = (0..n).filter(|&t| buf[t as usize].norm() >= eta1).collect();

    let nu = spec.nu_values();
    let mut threshold = spec.threshold();
    let mut pairs_checked = 0u64;
    for &t in &frequencies {
        let mut min_bad: Option<u64> = None;
        for x in 0..n {
            pairs_checked += 1;
            if one_minus_char_abs(&group, t, x) > eta2 {
                min_bad = Some(min_bad.map_or(nu[x as usize], |m| m.min(nu[x as usize])));
            }
        }
        if let Some(m) = min_bad {
            if m == 0 {
                return Err(Error::NoRadiusFound(format!(
                    "frequency {t} exceeds the oscillation bound on the kernel itself"
                )));
            }
            threshold = threshold.min(m - 1);
        }
    }

    let delta_prime = Rat::new(threshold as i128, n as i128).min(spec.delta());
    let d = spec.d() as f64;
    let scale = eta1 * eta2 * crate::group::rat_f64(spec.delta()) / d;
    let measured_constant = crate::group::rat_f64(delta_prime) / scale;
    Ok(NestedRadius {
        delta_prime,
        threshold,
        frequencies,
        measured_constant,
        met_target: measured_constant >= consts.c_nest,
        pairs_checked,
    })
}

/// (1/n) sum_x u(x) conj(v(x)), the inner product matching the averaging
/// transform through Parseval.
pub fn inner_product_avg(group: &CyclicGroup, u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
    check_len(group, u.len())?;
    check_len(group, v.len())?;
    let acc: Complex64 = u.iter().zip(v).map(|(a, b)| a * b.conj()).sum();
    Ok(acc / group.n() as f64)
}

/// L2(mu) norm: sqrt(sum_x |f(x)|^2 mu(x)).
pub fn l2_norm_under(group: &CyclicGroup, f: &[f64], mu: &Measure) -> Result<f64> {
    check_len(group, f.len())?;
    group.same(&mu.group())?;
    let mut acc = 0.0;
    for (&x, w) in mu.support() {
        acc += f[x as usize] * f[x as usize] * w.to_f64().unwrap_or(f64::NAN);
    }
    Ok(acc.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bohr::BohrSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cgroup(n: u64) -> CyclicGroup {
        CyclicGroup::new(n).unwrap()
    }

    fn evens_indicator(n: u64) -> Vec<Complex64> {
        (0..n).map(|x| Complex64::new(if x % 2 == 0 { 1.0 } else { 0.0 }, 0.0)).collect()
    }

    fn random_signal(n: u64, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dft_of_constant_is_point_mass_at_zero() {
        let g = cgroup(12);
        let f = vec![Complex64::new(1.0, 0.0); 12];
        let s = dft(&g, &f).unwrap();
        assert!((s.value(0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        for t in 1..12 {
            assert!(s.abs(t) < 1e-12);
        }
    }

    #[test]
    fn dft_of_evens_in_z16() {
        let g = cgroup(16);
        let s = dft(&g, &evens_indicator(16)).unwrap();
        assert!((s.value(0).re - 0.5).abs() < 1e-12);
        assert!((s.value(8).re - 0.5).abs() < 1e-12);
        for t in (0..16).filter(|t| *t != 0 && *t != 8) {
            assert!(s.abs(t) < 1e-12, "stray mass at frequency {t}");
        }
    }

    #[test]
    fn fast_and_naive_transforms_agree() {
        for &n in &[16u64, 128, 360] {
            let g = cgroup(n);
            let f = random_signal(n, 7 + n);
            let fast = dft(&g, &f).unwrap();
            let slow = dft_naive(&g, &f).unwrap();
            assert!(max_diff(fast.values(), slow.values()) < 1e-9, "mismatch at n={n}");
        }
    }

    #[test]
    fn parseval_on_random_signal() {
        let g = cgroup(360);
        let f = random_signal(360, 99);
        let s = dft(&g, &f).unwrap();
        let time_side: f64 = f.iter().map(|v| v.norm_sqr()).sum::<f64>() / 360.0;
        assert!((s.energy() - time_side).abs() < 1e-9);
    }

    #[test]
    fn conjugate_symmetry_for_real_input() {
        let g = cgroup(100);
        let f: Vec<Complex64> = random_signal(100, 5).iter().map(|v| Complex64::new(v.re, 0.0)).collect();
        let s = dft(&g, &f).unwrap();
        for t in 1..100 {
            let diff = (s.value(t).conj() - s.value(100 - t)).norm();
            assert!(diff < 1e-9);
        }
    }

    #[test]
    fn local_transform_normalizes_and_reduces_to_global() {
        let g = cgroup(64);
        let spec = BohrSpec::new(g, &[1], Rat::new(1, 4)).unwrap();
        let b = build_bohr(&spec);
        let beta = Measure::uniform_on(&b).unwrap();
        let f = b.indicator_f64();
        let s = local_transform(&g, &f, &beta).unwrap();
        assert!((s.value(0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);

        let whole = Measure::uniform_on(&DenseSet::full(&g)).unwrap();
        let sig: Vec<f64> = (0..64).map(|x| ((x * x) % 7) as f64).collect();
        let local = local_transform(&g, &sig, &whole).unwrap();
        let global = dft_real(&g, &sig).unwrap();
        assert!(max_diff(local.values(), global.values()) < 1e-9);
    }

    #[test]
    fn local_transform_rejects_escaping_support() {
        let g = cgroup(16);
        let spec = BohrSpec::new(g, &[1], Rat::new(1, 8)).unwrap();
        let beta = Measure::uniform_on(&build_bohr(&spec)).unwrap();
        let mut f = vec![0.0; 16];
        f[7] = 1.0;
        let err = local_transform(&g, &f, &beta).unwrap_err();
        assert!(matches!(err, Error::SupportViolation { point: 7, .. }));
    }

    #[test]
    fn level_set_of_evens() {
        let g = cgroup(16);
        let s = dft(&g, &evens_indicator(16)).unwrap();
        let level = spectrum_level_set(&s, 0.4);
        let freqs: Vec<u64> = level.iter().map(|c| c.freq).collect();
        assert_eq!(freqs, vec![0, 8]);
        assert_eq!(spectrum_level_set(&s, 0.0).len(), 16);
        assert!(spectrum_level_set(&s, 0.51).is_empty());
    }

    #[test]
    fn convolution_identity_and_small_sumset() {
        let g = cgroup(8);
        let f: Vec<f64> = (0..8).map(|x| (x as f64).sin()).collect();
        let delta0 = Measure::point_mass(&g, 0);
        let conv = convolve_with_measure(&g, &f, &delta0).unwrap();
        for (a, b) in f.iter().zip(&conv) {
            assert!((a - b).abs() < 1e-12);
        }

        let ind = |m: &[u64]| -> Vec<Complex64> {
            let mut v = vec![Complex64::new(0.0, 0.0); 8];
            for &x in m {
                v[x as usize] = Complex64::new(1.0, 0.0);
            }
            v
        };
        let conv = convolve_counting(&g, &ind(&[0, 1]), &ind(&[0, 2])).unwrap();
        let support: Vec<u64> =
            (0..8).filter(|&x| conv[x as usize].norm() > 1e-9).collect();
        assert_eq!(support, vec![0, 1, 2, 3]);
    }

    #[test]
    fn fft_convolution_matches_naive() {
        for &n in &[16u64, 128, 360] {
            let g = cgroup(n);
            let f = random_signal(n, n);
            let h = random_signal(n, n + 1);
            let fast = convolve_counting(&g, &f, &h).unwrap();
            let slow = convolve_naive_counting(&g, &f, &h).unwrap();
            assert!(max_diff(&fast, &slow) < 1e-9, "mismatch at n={n}");
        }
    }

    #[test]
    fn convolution_diagonalizes() {
        let g = cgroup(128);
        let f = random_signal(128, 2);
        let h = random_signal(128, 3);
        let conv = convolve_functions(&g, &f, &h).unwrap();
        let lhs = dft(&g, &conv).unwrap();
        let fa = dft(&g, &f).unwrap();
        let fb = dft(&g, &h).unwrap();
        for t in 0..128 {
            let rhs = fa.value(t) * fb.value(t);
            assert!((lhs.value(t) - rhs).norm() < 1e-9);
        }
    }

    #[test]
    fn smoothed_cutoff_plateau_and_support() {
        let g = cgroup(64);
        let spec = BohrSpec::new(g, &[1], Rat::new(1, 4)).unwrap();
        let rb = RegularBohr::unchecked(spec.clone());
        let sc = build_smoothed_cutoff(&rb, 2, Rat::new(1, 8)).unwrap();

        assert_eq!(sc.weights.mass(), BigRational::one());

        let plateau = sc.plateau_value();
        let base_set = build_bohr(&spec);
        for x in base_set.iter_members() {
            assert_eq!(sc.weights.weight(x), plateau, "plateau broken at {x}");
        }

        let envelope = build_bohr(
            &spec
                .with_delta((Rat::new(1, 1) + Rat::new(2, 1) * Rat::new(1, 8)) * Rat::new(1, 4))
                .unwrap(),
        );
        assert_eq!(sc.support().difference(&envelope).len(), 0);
    }

    #[test]
    fn smoothed_cutoff_on_whole_group_is_uniform() {
        let g = cgroup(20);
        let spec = BohrSpec::new(g, &[0], Rat::new(1, 2)).unwrap();
        let rb = RegularBohr::unchecked(spec);
        let sc = build_smoothed_cutoff(&rb, 4, Rat::new(1, 4)).unwrap();
        let expect = BigRational::new(BigInt::one(), BigInt::from(20));
        for x in 0..20 {
            assert_eq!(sc.weights.weight(x), expect);
        }
    }

    #[test]
    fn nesting_radius_certifies_by_enumeration() {
        let consts = Constants::default();
        let g = cgroup(256);
        let spec = BohrSpec::new(g, &[1], Rat::new(1, 4)).unwrap();
        let rb = RegularBohr::unchecked(spec.clone());
        let nested = nest_support_radius(&rb, 0.5, 0.5, &consts).unwrap();
        assert!(nested.delta_prime > Rat::new(0, 1));
        assert!(nested.delta_prime <= spec.delta());
        // Independent re-verification: every level frequency must stay within
        // eta2 of 1 on the whole certified Bohr set.
        let shrunk = build_bohr(&spec.with_delta(nested.delta_prime).unwrap());
        for &t in &nested.frequencies {
            for x in shrunk.iter_members() {
                let gap = (Complex64::new(1.0, 0.0)
                    - char_eval(&g, Character::new(&g, t), x))
                .norm();
                assert!(gap <= 0.5 + 1e-12, "t={t}, x={x} oscillates by {gap}");
            }
        }
    }

    #[test]
    fn nesting_radius_vacuous_when_gap_allows_everything() {
        let consts = Constants::default();
        let g = cgroup(64);
        let spec = BohrSpec::new(g, &[1], Rat::new(1, 4)).unwrap();
        let rb = RegularBohr::unchecked(spec.clone());
        let nested = nest_support_radius(&rb, 0.5, 2.0, &consts).unwrap();
        assert_eq!(nested.delta_prime, spec.delta());
    }

    #[test]
    fn nesting_radius_trivial_level_set() {
        let consts = Constants::default();
        let g = cgroup(32);
        let spec = BohrSpec::new(g, &[0], Rat::new(1, 1)).unwrap();
        let rb = RegularBohr::unchecked(spec);
        let nested = nest_support_radius(&rb, 1.0, 0.5, &consts).unwrap();
        assert_eq!(nested.frequencies, vec![0]);
    }

    #[test]
    fn smoothed_cutoff_rejects_odd_depth() {
        let g = cgroup(16);
        let spec = BohrSpec::new(g, &[1], Rat::new(1, 4)).unwrap();
        let rb = RegularBohr::unchecked(spec);
        assert!(build_smoothed_cutoff(&rb, 3, Rat::new(1, 8)).is_err());
        assert!(build_smoothed_cutoff(&rb, 2, Rat::new(0, 1)).is_err());
    }
}
