//! Grid expansion and execution. Cells run on a bounded worker pool; every
//! witness is re-verified through the oracle or by full enumeration before
//! a row is marked verified. Rows come back in grid order regardless of
//! scheduling, and all randomness derives from the cell's own seed.

use std::time::Instant;

use apsum::bohr::{ap_in_bohr, build_bohr, find_regular_radius, verify_ap, BohrSpec};
use apsum::increment::{iterate_mfold, iterate_pair, sigma_sweep_pair, SumsetResult};
use apsum::model_f2::{f2_iterate_pair, f2_iterate_triple, f2_sumset, verify_subspace, F2Set};
use apsum::model_f2::BooleanSpace;
use apsum::oracle::{audit_inequality, brute_sumset};
use apsum::{Constants, CyclicGroup, DenseSet, Rat};
use num::bigint::BigInt;
use num::{BigRational, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Mode};
use crate::report::{ExperimentReport, ReportRow};

fn mix(parts: &[u64]) -> u64 {
    let mut h = 0x9E3779B97F4A7C15u64;
    for &p in parts {
        h ^= p.wrapping_add(0x9E3779B97F4A7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_mul(0xBF58476D1CE4E5B9);
        h ^= h >> 31;
    }
    h
}

/// Deterministic random subset used by both the sweep cells and the one-shot
/// inspection subcommands.
pub fn random_set_public(group: &CyclicGroup, density: f64, seed: u64) -> DenseSet {
    random_set(group, density, seed)
}

fn random_set(group: &CyclicGroup, density: f64, seed: u64) -> DenseSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = DenseSet::empty(group);
    for x in 0..group.n() {
        if rng.random_range(0.0..1.0) < density {
            s.insert(x);
        }
    }
    if s.is_empty() {
        s.insert(rng.random_range(0..group.n()));
    }
    s
}

fn random_f2_set(space: &BooleanSpace, density: f64, seed: u64) -> F2Set {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = F2Set::empty(space);
    for x in 0..space.size() as u32 {
        if rng.random_range(0.0..1.0) < density {
            s.insert(x);
        }
    }
    if s.is_empty() {
        s.insert(rng.random_range(0..space.size() as u32));
    }
    s
}

fn big(r: Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Reference length shape for the pair driver: exp(c (sqrt(alpha^2 ln N)
/// - ln(1/alpha) ln ln N)). A report column, never an assertion.
fn pair_reference(n: u64, alpha: f64, c: f64) -> f64 {
    let ln_n = (n as f64).ln();
    (c * ((alpha * alpha * ln_n).sqrt() - (1.0 / alpha).ln() * ln_n.ln().max(0.0))).exp()
}

/// Reference length shape for the m-fold driver: N^(c alpha^(1/(m-2)) / m^2).
fn mfold_reference(n: u64, alpha: f64, m: usize, c: f64) -> f64 {
    (n as f64).powf(c * alpha.powf(1.0 / (m as f64 - 2.0)) / (m as f64 * m as f64))
}

/// The trace invariants a verified driver row must exhibit: densities never
/// drop along committed steps.
fn trace_monotone(result: &SumsetResult) -> bool {
    result
        .trace
        .windows(2)
        .all(|w| w[1].alpha_k >= w[0].alpha_k - 1e-12)
}

/// Every committed increment in a model trace must raise the recorded local
/// density by the driver's guaranteed factor: 5/4 for the pair route and
/// (1 + alpha/2) for the triple route, checked in exact rationals.
fn f2_growth_holds(trace: &apsum::model_f2::F2Trace, triple: bool) -> bool {
    trace.steps.windows(2).all(|w| {
        if w[0].action != "increment" {
            return true;
        }
        let floor = if triple {
            w[0].density * (Rat::new(1, 1) + w[0].density / Rat::new(2, 1))
        } else {
            w[0].density * Rat::new(5, 4)
        };
        w[1].density >= floor
    })
}

struct Cell {
    row_template: ReportRow,
    kind: CellKind,
}

enum CellKind {
    Pair { n: u64, density: f64, seed: u64, sigma: Option<Rat>, sweep_levels: u32 },
    Mfold { n: u64, density: f64, seed: u64, m: usize },
    ModelPair { dim: u32, density: f64, seed: u64, sigma: Rat },
    ModelTriple { dim: u32, density: f64, seed: u64 },
    Audit { id: String, n: u64, seed: u64 },
    Bohr { n: u64, delta: Rat, seed: u64 },
}

fn blank_row(mode: &Mode) -> ReportRow {
    ReportRow {
        mode: mode.to_string(),
        n: 0,
        m: 2,
        density: 0.0,
        sigma: "0".into(),
        seed: 0,
        witness_kind: "none".into(),
        witness_length: 0,
        witness_dim: 0,
        reference_bound: 0.0,
        verified: false,
        detail: String::new(),
    }
}

fn expand_grid(config: &ExperimentConfig) -> anyhow::Result<Vec<Cell>> {
    let sigmas = config.parsed_sigmas()?;
    let mut cells = Vec::new();
    match config.mode {
        Mode::Pair => {
            for &n in &config.n {
                for &density in &config.densities {
                    for &seed in &config.seeds {
                        let sigma_axis: Vec<Option<Rat>> = if config.sweep_levels > 0 {
                            vec![None]
                        } else {
                            sigmas.iter().copied().map(Some).collect()
                        };
                        for sigma in sigma_axis {
                            let mut row = blank_row(&config.mode);
                            row.n = n;
                            row.density = density;
                            row.seed = seed;
                            row.sigma = sigma.map_or("sweep".into(), |s| s.to_string());
                            row.reference_bound = pair_reference(n, density, config.bound_c);
                            cells.push(Cell {
                                row_template: row,
                                kind: CellKind::Pair {
                                    n,
                                    density,
                                    seed,
                                    sigma,
                                    sweep_levels: config.sweep_levels,
                                },
                            });
                        }
                    }
                }
            }
        }
        Mode::Mfold => {
            for &n in &config.n {
                for &density in &config.densities {
                    for &seed in &config.seeds {
                        let mut row = blank_row(&config.mode);
                        row.n = n;
                        row.m = config.m;
                        row.density = density;
                        row.seed = seed;
                        row.reference_bound =
                            mfold_reference(n, density, config.m, config.bound_c);
                        cells.push(Cell {
                            row_template: row,
                            kind: CellKind::Mfold { n, density, seed, m: config.m },
                        });
                    }
                }
            }
        }
        Mode::Model => {
            for &dim in &config.dim {
                for &density in &config.densities {
                    for &seed in &config.seeds {
                        for &sigma in &sigmas {
                            let mut row = blank_row(&config.mode);
                            row.n = 1u64 << dim;
                            row.density = density;
                            row.seed = seed;
                            row.sigma = sigma.to_string();
                            cells.push(Cell {
                                row_template: row,
                                kind: CellKind::ModelPair { dim, density, seed, sigma },
                            });
                        }
                        let mut row = blank_row(&config.mode);
                        row.n = 1u64 << dim;
                        row.m = 3;
                        row.density = density;
                        row.seed = seed;
                        cells.push(Cell {
                            row_template: row,
                            kind: CellKind::ModelTriple { dim, density, seed },
                        });
                    }
                }
            }
        }
        Mode::Audit => {
            for id in config.resolved_audit_ids() {
                for &n in &config.n {
                    for &seed in &config.seeds {
                        let mut row = blank_row(&config.mode);
                        row.n = n;
                        row.seed = seed;
                        row.witness_kind = format!("audit:{id}");
                        cells.push(Cell {
                            row_template: row,
                            kind: CellKind::Audit { id: id.clone(), n, seed },
                        });
                    }
                }
            }
        }
        Mode::Bohr => {
            for &n in &config.n {
                for s in &config.sigmas {
                    let delta = apsum::group::parse_rat(s)
                        .map_err(|e| anyhow::anyhow!("radius {s:?}: {e}"))?;
                    for &seed in &config.seeds {
                        let mut row = blank_row(&config.mode);
                        row.n = n;
                        row.seed = seed;
                        row.sigma = s.clone();
                        cells.push(Cell {
                            row_template: row,
                            kind: CellKind::Bohr { n, delta, seed },
                        });
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn run_pair_cell(
    row: &mut ReportRow,
    n: u64,
    density: f64,
    seed: u64,
    sigma: Option<Rat>,
    sweep_levels: u32,
    consts: &Constants,
) -> apsum::Result<()> {
    let group = CyclicGroup::new(n)?;
    let dmilli = (density * 1000.0).round() as u64;
    let a1 = random_set(&group, density, mix(&[seed, n, dmilli, 1]));
    let a2 = random_set(&group, density, mix(&[seed, n, dmilli, 2]));
    let result = match sigma {
        Some(s) => iterate_pair(&a1, &a2, group, s, consts)?,
        None => sigma_sweep_pair(&a1, &a2, group, sweep_levels, consts)?,
    };
    let oracle = brute_sumset(&[&a1, &a2], consts)?;
    let alpha0 = ((a1.len() as f64 / n as f64) * (a2.len() as f64 / n as f64)).sqrt();
    let cap = (consts.c_iter * (1.0 / alpha0).ln()).ceil().max(0.0) as usize + 2;
    let mut ok = trace_monotone(&result) && result.trace.len() <= cap;
    match &result.ap {
        Some(ap) => {
            ok &= verify_ap(ap, &oracle).is_ok();
            row.witness_length = ap.length;
        }
        None => ok = false,
    }
    if let Some(w) = &result.bohr {
        ok &= build_bohr(&w.spec).translate(w.translate).difference(&oracle).is_empty();
    }
    row.sigma = result.sigma_used.to_string();
    row.witness_kind = result.kind.clone();
    row.witness_dim = result.trace.last().map_or(0, |s| s.gamma_k.len() as u64);
    row.verified = ok;
    row.detail = format!("steps={}", result.trace.len());
    Ok(())
}

fn run_mfold_cell(
    row: &mut ReportRow,
    n: u64,
    density: f64,
    seed: u64,
    m: usize,
    consts: &Constants,
) -> apsum::Result<()> {
    let group = CyclicGroup::new(n)?;
    let dmilli = (density * 1000.0).round() as u64;
    let sets: Vec<DenseSet> = (0..m)
        .map(|i| random_set(&group, density, mix(&[seed, n, dmilli, 10 + i as u64])))
        .collect();
    let result = iterate_mfold(&sets, group, consts)?;
    // Staged enumeration keeps the oracle work linear in the number of sets
    // while never touching the kernel-convolution fast path.
    let mut oracle = brute_sumset(&[&sets[0], &sets[1]], consts)?;
    for s in &sets[2..] {
        oracle = brute_sumset(&[&oracle, s], consts)?;
    }
    let mut ok = trace_monotone(&result);
    ok &= result
        .trace
        .windows(2)
        .all(|w| w[1].gamma_k.len() <= w[0].gamma_k.len() + 1);
    match &result.bohr {
        Some(w) => {
            ok &= build_bohr(&w.spec).translate(w.translate).difference(&oracle).is_empty();
        }
        None => ok = false,
    }
    match &result.ap {
        Some(ap) => {
            ok &= verify_ap(ap, &oracle).is_ok();
            row.witness_length = ap.length;
        }
        None => ok = false,
    }
    row.witness_kind = result.kind.clone();
    row.witness_dim = result.trace.last().map_or(0, |s| s.gamma_k.len() as u64);
    row.verified = ok;
    row.detail = format!("steps={}", result.trace.len());
    Ok(())
}

fn run_model_cell(
    row: &mut ReportRow,
    dim: u32,
    density: f64,
    seed: u64,
    sigma: Option<Rat>,
    consts: &Constants,
) -> apsum::Result<()> {
    let space = BooleanSpace::new(dim)?;
    let dmilli = (density * 1000.0).round() as u64;
    let a = random_f2_set(&space, density, mix(&[seed, dim as u64, dmilli, 20]));
    let (trace, container, kind) = match sigma {
        Some(s) => {
            let trace = f2_iterate_pair(&a, s, consts)?;
            (trace, f2_sumset(&a, &a), "f2_pair_subspace")
        }
        None => {
            let trace = f2_iterate_triple(&a, consts)?;
            let pair = f2_sumset(&a, &a);
            (trace, f2_sumset(&pair, &a), "f2_triple_subspace")
        }
    };
    let mut ok = verify_subspace(&trace.witness, &container).is_ok();
    ok &= f2_growth_holds(&trace, sigma.is_none());
    ok &= trace.steps.last().is_some_and(|s| s.action == "cover");
    row.witness_kind = kind.into();
    row.witness_length = 1u64 << trace.witness_dim;
    row.witness_dim = trace.witness_dim as u64;
    row.reference_bound = trace.bound_formula;
    row.verified = ok;
    row.detail = format!("steps={} measured={:.6}", trace.steps.len(), trace.measured);
    Ok(())
}

fn run_audit_cell(
    row: &mut ReportRow,
    id: &str,
    n: u64,
    seed: u64,
    consts: &Constants,
) -> apsum::Result<()> {
    let report = audit_inequality(id, n, seed, consts)?;
    row.reference_bound = report.rhs;
    row.verified = report.holds;
    row.detail = format!(
        "lhs={:.9e} rhs={:.9e} measured={:.6}",
        report.lhs, report.rhs, report.measured_constant
    );
    Ok(())
}

fn run_bohr_cell(
    row: &mut ReportRow,
    n: u64,
    delta: Rat,
    seed: u64,
    consts: &Constants,
) -> apsum::Result<()> {
    let group = CyclicGroup::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, n, 30]));
    let d = rng.random_range(1..=3usize);
    let mut freqs = vec![0u64];
    for _ in 1..d {
        freqs.push(rng.random_range(1..n));
    }
    let spec = BohrSpec::new(group, &freqs, delta)?;
    let rb = find_regular_radius(&spec, consts)?;
    let set = rb.set();
    let floor = big(rb.delta()).pow(rb.spec().d() as i32)
        * BigRational::new(BigInt::from(n), BigInt::from(1));
    let volume_ok = BigRational::new(BigInt::from(set.len()), BigInt::from(1)) >= floor;
    let bap = ap_in_bohr(&rb)?;
    let ap_ok = verify_ap(&bap.witness, &set).is_ok();
    row.witness_kind = "regular_bohr".into();
    row.witness_length = bap.witness.length;
    row.witness_dim = rb.spec().d() as u64;
    row.reference_bound = floor.to_f64().unwrap_or(f64::NAN);
    row.verified = volume_ok && ap_ok;
    row.detail = format!("delta={} size={}", rb.delta(), set.len());
    Ok(())
}

fn run_cell(cell: &Cell, consts: &Constants) -> (ReportRow, f64) {
    let started = Instant::now();
    let mut row = cell.row_template.clone();
    let outcome = match &cell.kind {
        CellKind::Pair { n, density, seed, sigma, sweep_levels } => {
            run_pair_cell(&mut row, *n, *density, *seed, *sigma, *sweep_levels, consts)
        }
        CellKind::Mfold { n, density, seed, m } => {
            run_mfold_cell(&mut row, *n, *density, *seed, *m, consts)
        }
        CellKind::ModelPair { dim, density, seed, sigma } => {
            run_model_cell(&mut row, *dim, *density, *seed, Some(*sigma), consts)
        }
        CellKind::ModelTriple { dim, density, seed } => {
            run_model_cell(&mut row, *dim, *density, *seed, None, consts)
        }
        CellKind::Audit { id, n, seed } => run_audit_cell(&mut row, id, *n, *seed, consts),
        CellKind::Bohr { n, delta, seed } => run_bohr_cell(&mut row, *n, *delta, *seed, consts),
    };
    if let Err(e) = outcome {
        row.verified = false;
        row.detail = format!("error: {e}");
    }
    (row, started.elapsed().as_secs_f64() * 1000.0)
}

/// Execute the whole grid and assemble the report in grid order. Returns the
/// report and the per-row runtime sidecar data.
pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<(ExperimentReport, Vec<f64>)> {
    config.validate()?;
    let cells = expand_grid(config)?;
    let consts = config.constants.clone();

    let workers = std::env::var("APSUM_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&w| w > 0);
    let outcomes: Vec<(ReportRow, f64)> = match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| anyhow::anyhow!("worker pool: {e}"))?;
            pool.install(|| cells.par_iter().map(|c| run_cell(c, &consts)).collect())
        }
        None => cells.par_iter().map(|c| run_cell(c, &consts)).collect(),
    };

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut timings = Vec::with_capacity(outcomes.len());
    for (row, ms) in outcomes {
        rows.push(row);
        timings.push(ms);
    }
    Ok((ExperimentReport::new(config.clone(), rows), timings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_density_pair_cell_verifies() {
        let mut config = ExperimentConfig::default();
        config.n = vec![256];
        config.densities = vec![1.0];
        config.sigmas = vec!["1/4".into()];
        let (report, timings) = run_experiment(&config).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(timings.len(), 1);
        let row = &report.rows[0];
        assert!(row.verified, "detail: {}", row.detail);
        assert!(row.witness_length >= 1);
    }

    #[test]
    fn grid_order_is_deterministic() {
        let mut config = ExperimentConfig::default();
        config.n = vec![64, 128];
        config.densities = vec![0.5];
        config.seeds = vec![0, 1];
        let (a, _) = run_experiment(&config).unwrap();
        let (b, _) = run_experiment(&config).unwrap();
        assert_eq!(
            a.to_csv_string().unwrap(),
            b.to_csv_string().unwrap(),
            "reports must be byte-identical for a fixed config"
        );
        assert_eq!(a.rows[0].n, 64);
        assert_eq!(a.rows[2].n, 128);
    }

    #[test]
    fn audit_mode_emits_one_row_per_id_and_seed() {
        let mut config = ExperimentConfig::default();
        config.mode = Mode::Audit;
        config.n = vec![16];
        config.seeds = vec![0, 1];
        config.audit_ids = vec!["all".into()];
        let (report, _) = run_experiment(&config).unwrap();
        let ids = apsum::oracle::audit_ids().len();
        assert_eq!(report.rows.len(), ids * 2);
        assert!(report.all_verified(), "audit rows must hold at n = 16");
    }

    #[test]
    fn model_mode_runs_both_drivers() {
        let mut config = ExperimentConfig::default();
        config.mode = Mode::Model;
        config.dim = vec![6];
        config.densities = vec![0.5];
        config.sigmas = vec!["1/4".into()];
        let (report, _) = run_experiment(&config).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows.iter().any(|r| r.witness_kind == "f2_pair_subspace"));
        assert!(report.rows.iter().any(|r| r.witness_kind == "f2_triple_subspace"));
        assert!(report.all_verified());
    }

    #[test]
    fn bohr_mode_checks_volume_and_progression() {
        let mut config = ExperimentConfig::default();
        config.mode = Mode::Bohr;
        config.n = vec![128];
        config.sigmas = vec!["1/4".into()];
        config.seeds = vec![0, 1, 2];
        let (report, _) = run_experiment(&config).unwrap();
        assert_eq!(report.rows.len(), 3);
        for row in &report.rows {
            assert!(row.verified, "detail: {}", row.detail);
        }
    }
}
