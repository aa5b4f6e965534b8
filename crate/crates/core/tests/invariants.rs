//! Property tests for the structural invariants the fast paths promise:
//! kernel sumsets against brute enumeration, Bohr set geometry, transform
//! identities, container combinatorics, and measure arithmetic.

use apsum::bohr::{build_bohr, BohrSpec};
use apsum::chang::{
    cutoff_level_set, is_dissociated, riesz_product, signed_span, Dissociation,
};
use apsum::group::{tv_distance, Measure};
use apsum::model_f2::{f2_sumset, xor_convolve_counting, BooleanSpace, F2Set};
use apsum::oracle::brute_sumset;
use apsum::spectral::{convolve_counting, dft, dft_naive};
use apsum::{Constants, CyclicGroup, DenseSet, Rat};
use num::bigint::BigInt;
use num::{BigRational, ToPrimitive};
use num_complex::Complex64;
use proptest::prelude::*;

fn group(n: u64) -> CyclicGroup {
    CyclicGroup::new(n).unwrap()
}

fn set_from(n: u64, raw: &[u64]) -> DenseSet {
    let g = group(n);
    let members: Vec<u64> = raw.iter().map(|&x| x % n).collect();
    DenseSet::from_members(&g, &members).unwrap()
}

fn big(r: Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_sumset_matches_brute_enumeration(
        n in 8u64..=256,
        raw_a in prop::collection::vec(0u64..4096, 1..40),
        raw_b in prop::collection::vec(0u64..4096, 1..40),
    ) {
        let consts = Constants::default();
        let a = set_from(n, &raw_a);
        let b = set_from(n, &raw_b);
        let fast = a.sumset(&b);
        let slow = brute_sumset(&[&a, &b], &consts).unwrap();
        prop_assert_eq!(fast.members(), slow.members());
    }

    #[test]
    fn bohr_sets_contain_zero_are_symmetric_and_nest(
        n in 16u64..=2048,
        raw_freqs in prop::collection::vec(0u64..4096, 1..4),
        num1 in 1i128..=32,
        num2 in 1i128..=32,
    ) {
        let g = group(n);
        let (lo, hi) = if num1 <= num2 { (num1, num2) } else { (num2, num1) };
        let inner = BohrSpec::new(g, &raw_freqs.iter().map(|&f| f % n).collect::<Vec<_>>(), Rat::new(lo, 32)).unwrap();
        let outer = inner.with_delta(Rat::new(hi, 32)).unwrap();
        let b_inner = build_bohr(&inner);
        let b_outer = build_bohr(&outer);
        prop_assert!(b_inner.contains(0));
        prop_assert!(b_inner.is_symmetric());
        prop_assert!(b_inner.difference(&b_outer).is_empty(), "radius growth must widen the set");
    }

    #[test]
    fn bohr_volume_meets_the_power_bound(
        n in 16u64..=4096,
        raw_freqs in prop::collection::vec(0u64..4096, 1..5),
        num in 1i128..=16,
    ) {
        let g = group(n);
        let freqs: Vec<u64> = raw_freqs.iter().map(|&f| f % n).collect();
        let spec = BohrSpec::new(g, &freqs, Rat::new(num, 16)).unwrap();
        let size = build_bohr(&spec).len();
        let bound = big(spec.delta()).pow(spec.d() as i32) * BigRational::from(BigInt::from(n));
        prop_assert!(
            BigRational::from(BigInt::from(size)) >= bound,
            "|B| = {} below delta^d n = {}",
            size,
            bound.to_f64().unwrap_or(f64::NAN)
        );
    }

    #[test]
    fn bohr_half_radius_is_additively_closed_into_full(
        n in 16u64..=1024,
        raw_freqs in prop::collection::vec(0u64..4096, 1..4),
        num in 1i128..=16,
    ) {
        let g = group(n);
        let freqs: Vec<u64> = raw_freqs.iter().map(|&f| f % n).collect();
        let full = BohrSpec::new(g, &freqs, Rat::new(num, 16)).unwrap();
        let half = full.with_delta(full.delta() / Rat::new(2, 1)).unwrap();
        let b_half = build_bohr(&half);
        let b_full = build_bohr(&full);
        let doubled = b_half.sumset(&b_half);
        prop_assert!(doubled.difference(&b_full).is_empty(),
            "B(delta/2) + B(delta/2) escapes B(delta)");
    }

    #[test]
    fn parseval_holds_and_fft_matches_naive(
        n in prop::sample::select(vec![16u64, 128, 360]),
        seed in 0u64..1 << 20,
    ) {
        let g = group(n);
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let f: Vec<Complex64> = (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let re = ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0;
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let im = ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0;
                Complex64::new(re, im)
            })
            .collect();
        let fast = dft(&g, &f).unwrap();
        let slow = dft_naive(&g, &f).unwrap();
        let mut spec_energy = 0.0;
        for t in 0..n {
            prop_assert!((fast.value(t) - slow.value(t)).norm() < 1e-9);
            spec_energy += fast.value(t).norm_sqr();
        }
        let time_energy: f64 = f.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        prop_assert!((spec_energy - time_energy).abs() < 1e-9,
            "Parseval off by {}", (spec_energy - time_energy).abs());
    }

    #[test]
    fn counting_convolution_transforms_to_a_product(
        n in prop::sample::select(vec![16u64, 64, 128]),
        raw_a in prop::collection::vec(0u64..4096, 1..20),
        raw_b in prop::collection::vec(0u64..4096, 1..20),
    ) {
        let g = group(n);
        let a = set_from(n, &raw_a);
        let b = set_from(n, &raw_b);
        let fa: Vec<Complex64> = a.indicator_f64().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let fb: Vec<Complex64> = b.indicator_f64().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let conv = convolve_counting(&g, &fa, &fb).unwrap();
        let conv_hat = dft(&g, &conv).unwrap();
        let a_hat = dft(&g, &fa).unwrap();
        let b_hat = dft(&g, &fb).unwrap();
        for t in 0..n {
            let expected = a_hat.value(t) * b_hat.value(t) * n as f64;
            prop_assert!((conv_hat.value(t) - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn level_sets_shrink_as_the_threshold_grows(
        n in 16u64..=512,
        raw in prop::collection::vec(0u64..4096, 1..30),
        t1 in 0.0f64..1.0,
        t2 in 0.0f64..1.0,
    ) {
        let a = set_from(n, &raw);
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let wide = cutoff_level_set(&a, lo);
        let tight = cutoff_level_set(&a, hi);
        prop_assert!(tight.difference(&wide).is_empty());
        prop_assert!(wide.contains(0), "the zero frequency always clears a sub-1 threshold");
    }

    #[test]
    fn signed_spans_stay_within_the_ternary_bound(
        n in 16u64..=1024,
        raw in prop::collection::vec(1u64..4096, 0..7),
    ) {
        let g = group(n);
        let lambdas: Vec<u64> = raw.iter().map(|&f| f % n).collect();
        let span = signed_span(&g, &lambdas);
        let bound = 3u64.pow(lambdas.len() as u32);
        prop_assert!(span.len() <= bound.min(n));
        prop_assert!(span.contains(0));
        prop_assert!(span.is_symmetric());
    }

    #[test]
    fn dissociativity_is_closed_under_subsets(
        n in 16u64..=256,
        raw in prop::collection::vec(1u64..4096, 1..6),
        mask in 0u32..32,
    ) {
        let consts = Constants::default();
        let g = group(n);
        let lambdas: Vec<u64> = raw.iter().map(|&f| f % n).collect();
        let mut zero = DenseSet::empty(&g);
        zero.insert(0);
        if matches!(is_dissociated(&g, &lambdas, &zero, &consts).unwrap(), Dissociation::Dissociated) {
            let subset: Vec<u64> = lambdas
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &l)| l)
                .collect();
            prop_assert!(matches!(
                is_dissociated(&g, &subset, &zero, &consts).unwrap(),
                Dissociation::Dissociated
            ));
        }
    }

    #[test]
    fn measure_convolution_multiplies_mass_and_tv_is_a_metric(
        n in 8u64..=128,
        raw_a in prop::collection::vec(0u64..4096, 1..20),
        raw_b in prop::collection::vec(0u64..4096, 1..20),
        raw_c in prop::collection::vec(0u64..4096, 1..20),
    ) {
        let ma = Measure::uniform_on(&set_from(n, &raw_a)).unwrap();
        let mb = Measure::uniform_on(&set_from(n, &raw_b)).unwrap();
        let mc = Measure::uniform_on(&set_from(n, &raw_c)).unwrap();

        let conv = ma.convolve(&mb).unwrap();
        prop_assert_eq!(conv.mass(), ma.mass() * mb.mass());

        let zero = BigRational::from(BigInt::from(0));
        prop_assert_eq!(tv_distance(&ma, &ma).unwrap(), zero);
        prop_assert_eq!(tv_distance(&ma, &mb).unwrap(), tv_distance(&mb, &ma).unwrap());
        let ab = tv_distance(&ma, &mb).unwrap();
        let bc = tv_distance(&mb, &mc).unwrap();
        let ac = tv_distance(&ma, &mc).unwrap();
        prop_assert!(ac <= ab + bc, "triangle inequality failed");
    }

    #[test]
    fn boolean_sumset_routes_agree(
        dim in 2u32..=10,
        raw_a in prop::collection::vec(0u32..1 << 14, 1..40),
        raw_b in prop::collection::vec(0u32..1 << 14, 1..40),
    ) {
        let sp = BooleanSpace::new(dim).unwrap();
        let size = sp.size() as u32;
        let a = F2Set::from_members(&sp, &raw_a.iter().map(|&x| x % size).collect::<Vec<_>>()).unwrap();
        let b = F2Set::from_members(&sp, &raw_b.iter().map(|&x| x % size).collect::<Vec<_>>()).unwrap();
        let fast = f2_sumset(&a, &b);
        let counts = xor_convolve_counting(&a, &b);
        for x in 0..size {
            prop_assert_eq!(fast.contains(x), counts[x as usize] > 0);
        }
    }

    #[test]
    fn correlation_counts_match_direct_membership_scans(
        n in 8u64..=128,
        raw_a in prop::collection::vec(0u64..4096, 1..20),
        raw_b in prop::collection::vec(0u64..4096, 1..20),
    ) {
        let g = group(n);
        let a = set_from(n, &raw_a);
        let b = set_from(n, &raw_b);
        let counts = a.correlation_counts(&b);
        for x in 0..n {
            let direct = b
                .iter_members()
                .filter(|&y| a.contains(g.add(x, y)))
                .count() as u64;
            prop_assert_eq!(counts[x as usize], direct);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riesz_products_are_nonnegative_unit_mean_with_matching_transform(
        n in prop::sample::select(vec![16u64, 64]),
        raw in prop::collection::vec(1u64..4096, 1..4),
    ) {
        let consts = Constants::default();
        let g = group(n);
        let lambdas: Vec<u64> = {
            let mut v: Vec<u64> = raw.iter().map(|&f| f % n).filter(|&f| f != 0).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        prop_assume!(!lambdas.is_empty());
        let mut zero = DenseSet::empty(&g);
        zero.insert(0);
        prop_assume!(matches!(
            is_dissociated(&g, &lambdas, &zero, &consts).unwrap(),
            Dissociation::Dissociated
        ));

        let q = riesz_product(&g, &lambdas, &consts).unwrap();
        let mut mean = 0.0;
        for &v in &q.values {
            prop_assert!(v >= -1e-12, "Riesz product dipped to {v}");
            mean += v;
        }
        mean /= n as f64;
        prop_assert!((mean - 1.0).abs() < 1e-9, "mean {mean} drifted from 1");

        let fq: Vec<Complex64> = q.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let q_hat = dft(&g, &fq).unwrap();
        for t in 0..n {
            let expected = q.transform.weight(t).to_f64().unwrap();
            prop_assert!(
                (q_hat.value(t).re - expected).abs() < 1e-9 && q_hat.value(t).im.abs() < 1e-9,
                "transform mismatch at {t}"
            );
        }
    }
}
