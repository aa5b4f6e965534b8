//! Experiment harness binary. Exit codes: 0 all rows verified, 1 at least
//! one verification failed, 2 configuration error, 3 internal error.

mod config;
mod report;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use apsum::bohr::{build_bohr, find_regular_radius, BohrSpec};
use apsum::chang::chang_container;
use apsum::group::{parse_rat, Measure};
use apsum::spectral::local_transform;
use apsum::{CyclicGroup, Error};
use clap::{Args, Parser, Subcommand};
use num::bigint::BigInt;
use num::{BigRational, ToPrimitive};

use config::{ExperimentConfig, Mode};
use report::{emit_report, emit_timings, ExperimentReport};
use runner::run_experiment;

#[derive(Parser)]
#[command(
    name = "apsum",
    about = "Bohr sets, local spectra, and progression-finding drivers over Z/NZ with oracle-verified reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct Bohr sets and certify regular radii.
    Bohr {
        #[command(subcommand)]
        which: BohrCommand,
    },
    /// Print the largest local Fourier coefficients of a random set.
    Spectrum(SpectrumArgs),
    /// Run the spectrum container on a random instance and report its size
    /// next to the eps^-2 log(|f|_2^2 / |f|_1^2) formula.
    Chang(ChangArgs),
    /// Run a progression-finding driver sweep and emit a verified report.
    FindAp {
        #[command(subcommand)]
        which: FindApCommand,
    },
    /// Run the Boolean-space model drivers over a sweep grid.
    Model(SweepArgs),
    /// Run the inequality audit catalog over a sweep grid.
    Audit(SweepArgs),
    /// Re-emit a stored JSON report as CSV or JSON.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum BohrCommand {
    /// Build the set and check its volume floor.
    Build(BohrArgs),
    /// Search for a certified regular radius.
    Regular(BohrArgs),
    /// Batch mode over the configured grid.
    Sweep(SweepArgs),
}

#[derive(Subcommand)]
enum FindApCommand {
    Pair(SweepArgs),
    Mfold(SweepArgs),
}

#[derive(Args)]
struct BohrArgs {
    #[arg(long)]
    n: u64,
    /// Comma-separated frequencies.
    #[arg(long, value_delimiter = ',')]
    freqs: Vec<u64>,
    /// Radius as a rational "p/q".
    #[arg(long)]
    delta: String,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// How many coefficients to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct ChangArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Level-set threshold as a rational "p/q".
    #[arg(long, default_value = "1/4")]
    epsilon: String,
    /// Container approximation quality as a rational "p/q".
    #[arg(long, default_value = "1/2")]
    eta: String,
}

/// Sweep arguments shared by the report-producing subcommands. A JSON config
/// supplies the base document; flags override its top-level keys.
#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    dim: Option<Vec<u32>>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    densities: Option<Vec<f64>>,
    /// Rational sigma values "p/q" (radius grid for bohr sweep).
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<String>>,
    #[arg(long)]
    sweep_levels: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    audit_ids: Option<Vec<String>>,
    #[arg(long)]
    bound_c: Option<f64>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    json_output: Option<String>,
    /// Per-row runtime sidecar path.
    #[arg(long)]
    timings_output: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Stored JSON report.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<String>,
}

impl SweepArgs {
    fn into_config(self, mode: Mode) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.mode = mode;
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(dim) = self.dim {
            cfg.dim = dim;
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(d) = self.densities {
            cfg.densities = d;
        }
        if let Some(s) = self.sigmas {
            cfg.sigmas = s;
        }
        if let Some(l) = self.sweep_levels {
            cfg.sweep_levels = l;
        }
        if let Some(s) = self.seeds {
            cfg.seeds = s;
        }
        if let Some(ids) = self.audit_ids {
            cfg.audit_ids = ids;
        }
        if let Some(c) = self.bound_c {
            cfg.bound_c = c;
        }
        if let Some(o) = self.output {
            cfg.output = Some(o);
        }
        if let Some(o) = self.json_output {
            cfg.json_output = Some(o);
        }
        if let Some(o) = self.timings_output {
            cfg.timings_output = Some(o);
        }
        Ok(cfg)
    }
}

const EXIT_OK: u8 = 0;
const EXIT_UNVERIFIED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

fn run_sweep(args: SweepArgs, mode: Mode) -> u8 {
    let cfg = match args.into_config(mode) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = cfg.validate() {
        eprintln!("config error: {e:#}");
        return EXIT_CONFIG;
    }
    let (report, timings) = match run_experiment(&cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("internal error: {e:#}");
            return EXIT_INTERNAL;
        }
    };
    if let Err(e) = emit_report(&report) {
        eprintln!("internal error: {e:#}");
        return EXIT_INTERNAL;
    }
    if let Some(path) = &report.config.timings_output {
        if let Err(e) = emit_timings(path, &timings) {
            eprintln!("internal error: {e:#}");
            return EXIT_INTERNAL;
        }
    }
    if report.all_verified() {
        eprintln!("{} rows, all verified", report.rows.len());
        EXIT_OK
    } else {
        let unverified = report.rows.iter().filter(|r| !r.verified).count();
        eprintln!("{unverified} of {} rows failed verification", report.rows.len());
        EXIT_UNVERIFIED
    }
}

fn parse_rat_arg(text: &str, name: &str) -> Result<apsum::Rat, u8> {
    parse_rat(text).map_err(|e| {
        eprintln!("config error: {name} {text:?}: {e}");
        EXIT_CONFIG
    })
}

fn bohr_spec_from(args: &BohrArgs) -> Result<BohrSpec, u8> {
    let delta = parse_rat_arg(&args.delta, "delta")?;
    let group = CyclicGroup::new(args.n).map_err(|e| {
        eprintln!("config error: {e}");
        EXIT_CONFIG
    })?;
    BohrSpec::new(group, &args.freqs, delta).map_err(|e| {
        eprintln!("config error: {e}");
        EXIT_CONFIG
    })
}

fn run_bohr_build(args: &BohrArgs) -> u8 {
    let spec = match bohr_spec_from(args) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let set = build_bohr(&spec);
    let floor = {
        let d = BigRational::new(
            BigInt::from(*spec.delta().numer()),
            BigInt::from(*spec.delta().denom()),
        );
        d.pow(spec.d() as i32) * BigRational::new(BigInt::from(spec.n()), BigInt::from(1))
    };
    let ok = BigRational::new(BigInt::from(set.len()), BigInt::from(1)) >= floor;
    println!(
        "n={} d={} delta={} size={} volume_floor={:.6} meets_floor={}",
        spec.n(),
        spec.d(),
        spec.delta(),
        set.len(),
        floor.to_f64().unwrap_or(f64::NAN),
        ok
    );
    if ok {
        EXIT_OK
    } else {
        EXIT_UNVERIFIED
    }
}

fn run_bohr_regular(args: &BohrArgs) -> u8 {
    let spec = match bohr_spec_from(args) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match find_regular_radius(&spec, &apsum::Constants::default()) {
        Ok(rb) => {
            println!(
                "n={} d={} requested={} certified={} size={}",
                spec.n(),
                spec.d(),
                spec.delta(),
                rb.delta(),
                rb.set().len()
            );
            EXIT_OK
        }
        Err(e @ Error::NoRegularRadius { .. }) => {
            eprintln!("{e}");
            EXIT_UNVERIFIED
        }
        Err(e) => {
            eprintln!("internal error: {e}");
            EXIT_INTERNAL
        }
    }
}

fn run_spectrum(args: &SpectrumArgs) -> u8 {
    let group = match CyclicGroup::new(args.n) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if !(args.density > 0.0 && args.density <= 1.0) {
        eprintln!("config error: density {} outside (0, 1]", args.density);
        return EXIT_CONFIG;
    }
    let set = runner::random_set_public(&group, args.density, args.seed);
    let full = apsum::DenseSet::full(&group);
    let cutoff = match Measure::uniform_on(&full) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("internal error: {e}");
            return EXIT_INTERNAL;
        }
    };
    let spectrum = match local_transform(&group, &set.indicator_f64(), &cutoff) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("internal error: {e}");
            return EXIT_INTERNAL;
        }
    };
    let mut by_mag: Vec<(u64, f64)> = (0..args.n).map(|t| (t, spectrum.abs(t))).collect();
    by_mag.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    println!("n={} size={} density={:.6}", args.n, set.len(), set.len() as f64 / args.n as f64);
    for (t, mag) in by_mag.into_iter().take(args.top) {
        println!("freq={t} magnitude={mag:.9}");
    }
    EXIT_OK
}

fn run_chang(args: &ChangArgs) -> u8 {
    let epsilon = match parse_rat_arg(&args.epsilon, "epsilon") {
        Ok(r) => r,
        Err(code) => return code,
    };
    let eta = match parse_rat_arg(&args.eta, "eta") {
        Ok(r) => r,
        Err(code) => return code,
    };
    let group = match CyclicGroup::new(args.n) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let consts = apsum::Constants::default();
    let spec = match BohrSpec::new(group, &[0], apsum::Rat::new(1, 1)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("internal error: {e}");
            return EXIT_INTERNAL;
        }
    };
    let rb = match find_regular_radius(&spec, &consts) {
        Ok(rb) => rb,
        Err(e) => {
            eprintln!("internal error: {e}");
            return EXIT_INTERNAL;
        }
    };
    let set = runner::random_set_public(&group, args.density, args.seed);
    match chang_container(&set.indicator_f64(), &rb, epsilon, eta, &consts) {
        Ok(c) => {
            println!(
                "n={} |spectrum|={} |lambda|={} formula_bound={:.6} container_d={} container_delta={} verified={}",
                args.n,
                c.spectrum.len(),
                c.lambda.len(),
                c.paper_bound.unwrap_or(f64::NAN),
                c.container_spec.d(),
                c.container_spec.delta(),
                c.verified
            );
            if c.verified {
                EXIT_OK
            } else {
                EXIT_UNVERIFIED
            }
        }
        Err(e) => {
            eprintln!("container failed: {e}");
            EXIT_INTERNAL
        }
    }
}

fn run_report(args: &ReportArgs) -> u8 {
    let report = match ExperimentReport::from_json_file(&args.input) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    let text = match args.format.as_str() {
        "csv" => report.to_csv_string(),
        "json" => report.to_json_string(),
        other => {
            eprintln!("config error: unknown format {other:?}, expected csv or json");
            return EXIT_CONFIG;
        }
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            eprintln!("internal error: {e:#}");
            return EXIT_INTERNAL;
        }
    };
    match &args.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("internal error: writing {path}: {e}");
                return EXIT_INTERNAL;
            }
        }
        None => print!("{text}"),
    }
    EXIT_OK
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Bohr { which } => match which {
            BohrCommand::Build(args) => run_bohr_build(&args),
            BohrCommand::Regular(args) => run_bohr_regular(&args),
            BohrCommand::Sweep(args) => run_sweep(args, Mode::Bohr),
        },
        Command::Spectrum(args) => run_spectrum(&args),
        Command::Chang(args) => run_chang(&args),
        Command::FindAp { which } => match which {
            FindApCommand::Pair(args) => run_sweep(args, Mode::Pair),
            FindApCommand::Mfold(args) => run_sweep(args, Mode::Mfold),
        },
        Command::Model(args) => run_sweep(args, Mode::Model),
        Command::Audit(args) => run_sweep(args, Mode::Audit),
        Command::Report(args) => run_report(&args),
    };
    ExitCode::from(code)
}
