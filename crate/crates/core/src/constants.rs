use serde::{Deserialize, Serialize};

use crate::group::{rat_serde, Rat};

/// Every asymptotic inequality in the underlying lemmas hides a constant.
/// This crate surfaces each one as a named, configurable knob with a
/// documented default, so that audits can report measured values against the
/// configured ones instead of asserting folklore.
///
/// Defaults are deliberately generous: they are chosen so that the audit
/// suite passes with margin at desk scale (n up to a few thousand), and the
/// measured constants in audit reports show how much slack is left.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    /// Growth constant for regular radii: a radius delta' is accepted when
    /// mu(B((1+kappa) delta')) / mu(B(delta')) stays within 1 + c_reg*|kappa|*d
    /// on the whole kappa grid.
    #[serde(with = "rat_serde")]
    pub c_reg: Rat,
    /// Half-width of the kappa window probed by the regularity certificate;
    /// the grid is {+-c_r / (d 2^j) : 0 <= j <= reg_grid_levels}.
    #[serde(with = "rat_serde")]
    pub c_r: Rat,
    /// Number of dyadic levels in the kappa grid.
    pub reg_grid_levels: u32,

    /// Cap on dissociated-set size for exhaustive sign-pattern verification.
    pub k_max: usize,
    /// Largest size handled by direct 3^k enumeration; between `k_mitm` and
    /// `k_max` the check switches to a meet-in-the-middle table.
    pub k_mitm: usize,

    /// Level-set threshold defining the spectral neighborhood S = {gamma :
    /// |beta'^(gamma)| >= s_level} used for dissociativity relative to a
    /// cutoff.
    pub s_level: f64,

    /// Multiplier on eta1*eta2*delta/d when searching for a nesting radius.
    pub c_nest: f64,

    /// Iteration caps: the pair driver stops after c_iter * log(1/alpha)
    /// steps, and each step retries with a halved localization radius at most
    /// `retry_cap` times before giving up.
    pub c_iter: f64,
    pub retry_cap: u32,

    /// Multiplier on alpha^4 delta / d for the pair driver's localization
    /// radius, and on min_i(alpha_i)^2 delta / (m d) for the m-fold driver.
    #[serde(with = "rat_serde")]
    pub c_localize: Rat,

    /// Error constant used in the l2 increment's claimed lower bound
    /// alpha (1 + c) - c_err_l2 * d * delta' / delta.
    #[serde(with = "rat_serde")]
    pub c_err_l2: Rat,

    /// Minimum certified inner-product ratio required before the drivers
    /// commit to an l2 increment step.
    #[serde(with = "rat_serde")]
    pub c_l2_floor: Rat,

    /// Small-Bohr alternative for the pigeonhole progression lemma: when no
    /// progression of the guaranteed length exists the implementation checks
    /// 1/sigma >= c_alt * delta * n^(1/d) / d and flags the instance instead
    /// of erroring. The comparison is done in exact arithmetic.
    #[serde(with = "rat_serde")]
    pub c_alt: Rat,

    /// Audit constants: each multiplies the formula the corresponding
    /// inequality is tested against. See `oracle::audit` for the catalog.
    pub c_contlem: f64,
    pub c_contlemcor: f64,
    pub c_contlemcor2: f64,
    pub c_estimator: f64,
    pub c_techlem3: f64,
    pub c_rudin: f64,
    pub c_local_rudin: f64,
    pub c_chang: f64,

    /// Work caps for brute-force enumeration.
    pub sumset_work_cap: u128,
    pub subspace_work_cap: u64,

    /// Convolution depth cap for smoothed cutoffs.
    pub smooth_l_max: u32,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_reg: Rat::new(16, 1),
            c_r: Rat::new(1, 4),
            reg_grid_levels: 6,
            k_max: 20,
            k_mitm: 12,
            s_level: 1.0 / 3.0,
            c_nest: 0.05,
            c_iter: 64.0,
            retry_cap: 8,
            c_localize: Rat::new(1, 1),
            c_err_l2: Rat::new(2, 1),
            c_l2_floor: Rat::new(1, 16),
            c_alt: Rat::new(1, 4),
            c_contlem: 256.0,
            c_contlemcor: 256.0,
            c_contlemcor2: 256.0,
            c_estimator: 64.0,
            c_techlem3: 256.0,
            c_rudin: 8.0,
            c_local_rudin: 32.0,
            c_chang: 32.0,
            sumset_work_cap: 1 << 40,
            subspace_work_cap: 1 << 28,
            smooth_l_max: 8,
        }
    }
}

impl Constants {
    /// Meet-in-the-middle handles at most this many elements; beyond it the
    /// sign-pattern table no longer fits in memory.
    pub const K_ABSOLUTE_MAX: usize = 30;

    pub fn validate(&self) -> crate::Result<()> {
        if self.c_reg <= Rat::new(0, 1) || self.c_r <= Rat::new(0, 1) || self.c_r > Rat::new(1, 2)
        {
            return Err(crate::Error::InvalidParameter(
                "regularity constants must satisfy c_reg > 0 and 0 < c_r <= 1/2".into(),
            ));
        }
        if self.k_max > Self::K_ABSOLUTE_MAX {
            return Err(crate::Error::InvalidParameter(format!(
                "k_max {} exceeds the absolute cap {}",
                self.k_max,
                Self::K_ABSOLUTE_MAX
            )));
        }
        if !(self.s_level > 0.0 && self.s_level < 1.0) {
            return Err(crate::Error::InvalidParameter(
                "s_level must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}
