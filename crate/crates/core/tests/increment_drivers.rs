//! End-to-end runs of the pair and m-fold drivers on group sizes where the
//! brute-force sumset is still cheap, cross-checking every returned witness
//! against full enumeration.

use apsum::bohr::{build_bohr, verify_ap};
use apsum::increment::{iterate_mfold, iterate_pair, sigma_sweep_pair};
use apsum::oracle::brute_sumset;
use apsum::{Constants, CyclicGroup, DenseSet, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(group: &CyclicGroup, density: f64, seed: u64) -> DenseSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DenseSet::empty(group);
    for x in 0..group.n() {
        if rng.random_range(0.0..1.0) < density {
            s.insert(x);
        }
    }
    if s.is_empty() {
        s.insert(0);
    }
    s
}

/// Evens with a random 5 percent knocked out: the sumset stays inside the
/// parity subgroup, so the driver has to localize before it can terminate.
fn thinned_evens(group: &CyclicGroup, seed: u64) -> DenseSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DenseSet::empty(group);
    for x in (0..group.n()).step_by(2) {
        if rng.random_range(0.0..1.0) < 0.95 {
            s.insert(x);
        }
    }
    s
}

#[test]
fn pair_driver_on_random_dense_sets_matches_oracle() {
    let consts = Constants::default();
    let group = CyclicGroup::new(4096).unwrap();
    let a1 = random_set(&group, 0.4, 11);
    let a2 = random_set(&group, 0.4, 12);
    let res = iterate_pair(&a1, &a2, group, Rat::new(1, 32), &consts).unwrap();
    assert_eq!(res.kind, "ap_witness");

    let oracle = brute_sumset(&[&a1, &a2], &consts).unwrap();
    let ap = res.ap.expect("pair driver always reports a progression");
    verify_ap(&ap, &oracle).unwrap();

    if let Some(w) = &res.bohr {
        let translated = build_bohr(&w.spec).translate(w.translate);
        assert!(translated.difference(&oracle).is_empty());
    }
    for pair in res.trace.windows(2) {
        assert_eq!(pair[0].branch_taken, "increment");
        let growth = pair[1].alpha_k / pair[0].alpha_k;
        assert!(
            growth >= (17.0f64 / 16.0).sqrt() - 1e-9,
            "step {} grew only by {growth}",
            pair[0].k
        );
    }
}

#[test]
fn pair_driver_walks_increment_then_terminal_on_structured_sets() {
    let consts = Constants::default();
    let group = CyclicGroup::new(1024).unwrap();
    let a1 = thinned_evens(&group, 31);
    let a2 = thinned_evens(&group, 32);
    let res = iterate_pair(&a1, &a2, group, Rat::new(1, 32), &consts).unwrap();

    assert!(res.trace.len() >= 2, "expected at least one increment step");
    assert_eq!(res.trace[0].branch_taken, "increment");
    assert_eq!(res.trace.last().unwrap().branch_taken, "terminal");

    let oracle = brute_sumset(&[&a1, &a2], &consts).unwrap();
    let ap = res.ap.unwrap();
    verify_ap(&ap, &oracle).unwrap();
    for x in ap.elements(&group) {
        assert_eq!(x % 2, 0, "progression left the parity subgroup");
    }
    // the increment landed on the subgroup frequency
    assert!(res.trace.last().unwrap().gamma_k.contains(&512));
    for pair in res.trace.windows(2) {
        let growth = pair[1].alpha_k / pair[0].alpha_k;
        assert!(growth >= (17.0f64 / 16.0).sqrt() - 1e-9, "growth {growth}");
    }
}

#[test]
fn sigma_sweep_keeps_a_verified_progression() {
    let consts = Constants::default();
    let group = CyclicGroup::new(512).unwrap();
    let a1 = thinned_evens(&group, 41);
    let a2 = thinned_evens(&group, 42);
    let res = sigma_sweep_pair(&a1, &a2, group, 5, &consts).unwrap();
    let oracle = brute_sumset(&[&a1, &a2], &consts).unwrap();
    let ap = res.ap.unwrap();
    verify_ap(&ap, &oracle).unwrap();
    assert!(ap.length >= 2, "sweep should beat a singleton on parity sets");
}

#[test]
fn mfold_driver_on_random_dense_sets_matches_oracle() {
    let consts = Constants::default();
    let group = CyclicGroup::new(2048).unwrap();
    let sets: Vec<DenseSet> = (0..3)
        .map(|i| random_set(&group, 0.35, 100 + i))
        .collect();
    let res = iterate_mfold(&sets, group, &consts).unwrap();
    assert_eq!(res.kind, "bohr_witness");

    let refs: Vec<&DenseSet> = sets.iter().collect();
    let oracle = brute_sumset(&refs, &consts).unwrap();
    let w = res.bohr.expect("m-fold driver always reports a translate");
    let translated = build_bohr(&w.spec).translate(w.translate);
    assert!(translated.difference(&oracle).is_empty());
    let ap = res.ap.unwrap();
    verify_ap(&ap, &oracle).unwrap();
}

#[test]
fn mfold_driver_localizes_structured_triple() {
    let consts = Constants::default();
    let group = CyclicGroup::new(512).unwrap();
    let sets: Vec<DenseSet> = (0..3).map(|i| thinned_evens(&group, 200 + i)).collect();
    let res = iterate_mfold(&sets, group, &consts).unwrap();

    assert!(res.trace.len() >= 2, "expected at least one increment step");
    assert_eq!(res.trace.last().unwrap().branch_taken, "terminal");

    let refs: Vec<&DenseSet> = sets.iter().collect();
    let oracle = brute_sumset(&refs, &consts).unwrap();
    let w = res.bohr.unwrap();
    let translated = build_bohr(&w.spec).translate(w.translate);
    assert!(translated.difference(&oracle).is_empty());
    let ap = res.ap.unwrap();
    verify_ap(&ap, &oracle).unwrap();

    let m = 3.0f64;
    for pair in res.trace.windows(2) {
        // dimension grows by at most one frequency per committed step
        assert!(pair[1].gamma_k.len() <= pair[0].gamma_k.len() + 1);
        let floor = 1.0 + pair[0].alpha_k.powf(1.0 / (m - 2.0)) / (256.0 * m);
        let growth = pair[1].alpha_k / pair[0].alpha_k;
        assert!(growth >= floor - 1e-9, "growth {growth} below floor {floor}");
    }
}
