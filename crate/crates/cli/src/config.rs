//! Experiment configuration: one JSON document, flags override top-level
//! keys, unknown keys rejected.

use anyhow::{bail, Context};
use apsum::group::parse_rat;
use apsum::{Constants, Rat};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pair,
    Mfold,
    Model,
    Audit,
    Bohr,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Mode::Pair => "pair",
            Mode::Mfold => "mfold",
            Mode::Model => "model",
            Mode::Audit => "audit",
            Mode::Bohr => "bohr",
        };
        f.write_str(s)
    }
}

/// The full sweep description. Every list is a grid axis; the runner takes
/// the cartesian product in declaration order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Group orders for pair, mfold, and bohr modes.
    #[serde(default)]
    pub n: Vec<u64>,
    /// Space dimensions for model mode.
    #[serde(default)]
    pub dim: Vec<u32>,
    /// Summand count for mfold mode.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_densities")]
    pub densities: Vec<f64>,
    /// Rational sigma values as "p/q" strings. Bohr mode reads these as the
    /// radius grid.
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<String>,
    /// When positive, pair mode replaces the sigma list with a sweep over
    /// 2^-1 .. 2^-levels keeping the longest verified progression.
    #[serde(default)]
    pub sweep_levels: u32,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Audit mode: inequality ids, or ["all"].
    #[serde(default = "default_audit_ids")]
    pub audit_ids: Vec<String>,
    /// Scale constant for the reference-bound column.
    #[serde(default = "default_bound_c")]
    pub bound_c: f64,
    #[serde(default)]
    pub constants: Constants,
    /// CSV report path; stdout when absent.
    #[serde(default)]
    pub output: Option<String>,
    /// JSON report path.
    #[serde(default)]
    pub json_output: Option<String>,
    /// Per-row wall-clock sidecar. Kept out of the main report so reports
    /// stay byte-identical across reruns.
    #[serde(default)]
    pub timings_output: Option<String>,
}

fn default_m() -> usize {
    3
}
fn default_densities() -> Vec<f64> {
    vec![0.3]
}
fn default_sigmas() -> Vec<String> {
    vec!["1/4".to_string()]
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_audit_ids() -> Vec<String> {
    vec!["all".to_string()]
}
fn default_bound_c() -> f64 {
    1.0
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Pair,
            n: vec![256],
            dim: vec![8],
            m: default_m(),
            densities: default_densities(),
            sigmas: default_sigmas(),
            sweep_levels: 0,
            seeds: default_seeds(),
            audit_ids: default_audit_ids(),
            bound_c: default_bound_c(),
            constants: Constants::default(),
            output: None,
            json_output: None,
            timings_output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    pub fn parsed_sigmas(&self) -> anyhow::Result<Vec<Rat>> {
        let mut out = Vec::with_capacity(self.sigmas.len());
        for s in &self.sigmas {
            let r = parse_rat(s).map_err(|e| anyhow::anyhow!("sigma {s:?}: {e}"))?;
            out.push(r);
        }
        Ok(out)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.constants
            .validate()
            .map_err(|e| anyhow::anyhow!("constants: {e}"))?;
        match self.mode {
            Mode::Pair | Mode::Mfold | Mode::Bohr | Mode::Audit => {
                if self.n.is_empty() {
                    bail!("mode {} needs at least one group order in \"n\"", self.mode);
                }
                for &n in &self.n {
                    if !(2..=1 << 20).contains(&n) {
                        bail!("group order {n} outside 2..=2^20");
                    }
                }
            }
            Mode::Model => {
                if self.dim.is_empty() {
                    bail!("model mode needs at least one dimension in \"dim\"");
                }
                for &d in &self.dim {
                    if !(1..=24).contains(&d) {
                        bail!("dimension {d} outside 1..=24");
                    }
                }
            }
        }
        if self.mode == Mode::Mfold && !(3..=8).contains(&self.m) {
            bail!("m = {} outside 3..=8", self.m);
        }
        for &d in &self.densities {
            if !(d > 0.0 && d <= 1.0) {
                bail!("density {d} outside (0, 1]");
            }
        }
        for sigma in self.parsed_sigmas()? {
            if sigma <= Rat::new(0, 1) || sigma > Rat::new(1, 1) {
                bail!("sigma {sigma} outside (0, 1]");
            }
        }
        if self.sweep_levels > 30 {
            bail!("sweep_levels {} outside 0..=30", self.sweep_levels);
        }
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        if !(self.bound_c.is_finite() && self.bound_c > 0.0) {
            bail!("bound_c must be a positive finite number");
        }
        if self.mode == Mode::Audit {
            let known = apsum::oracle::audit_ids();
            for id in &self.audit_ids {
                if id != "all" && !known.contains(&id.as_str()) {
                    bail!("unknown audit id {id:?}; known ids: {}", known.join(", "));
                }
            }
        }
        Ok(())
    }

    /// The audit ids after expanding "all".
    pub fn resolved_audit_ids(&self) -> Vec<String> {
        if self.audit_ids.iter().any(|s| s == "all") {
            apsum::oracle::audit_ids().iter().map(|s| s.to_string()).collect()
        } else {
            self.audit_ids.clone()
        }
    }
}
