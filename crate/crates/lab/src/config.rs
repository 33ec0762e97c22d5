//! Experiment configuration: a JSON document with strict keys.
//!
//! Every section is optional and filled with defaults; unknown keys are
//! rejected at every level.

use std::path::PathBuf;

use anyhow::{bail, Context};
use lsl_core::dist::{DistributionSpec, LogPerturbedPareto};
use lsl_core::moments::{CountingCase, MomentCase};
use lsl_core::normalizers::{SlowlyVarying, WindowLaw};
use lsl_core::subseq::SubseqFamily;
use serde::{Deserialize, Serialize};

/// Caps on work a single run may request.
pub const MAX_REPLICATES: u64 = 100_000_000;
pub const MAX_GRID: u64 = 20_000;
pub const MAX_SCAN: u64 = 100_000_000;
/// Replicates times cells per window.
pub const MAX_CELL_DRAWS: f64 = 1e11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    SurrogateLimsup,
    Moments,
    Bounds,
    Subseq,
    VerifyAppendix,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::SurrogateLimsup => "surrogate-limsup",
            ExperimentKind::Moments => "moments",
            ExperimentKind::Bounds => "bounds",
            ExperimentKind::Subseq => "subseq",
            ExperimentKind::VerifyAppendix => "verify-appendix",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, ExperimentKind::Simulate | ExperimentKind::SurrogateLimsup)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvConfig {
    pub p: f64,
    #[serde(default)]
    pub q: f64,
}

impl SvConfig {
    fn build(&self) -> anyhow::Result<SlowlyVarying> {
        Ok(SlowlyVarying::new(self.p, self.q)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawCase {
    I,
    Ii,
    Iii,
    Mixed,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    #[serde(default = "LawConfig::default_case")]
    pub case: LawCase,
    #[serde(default = "one")]
    pub sigma: f64,
    /// Power exponent of the first axis for the mixed law.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub l1: Option<SvConfig>,
    #[serde(default)]
    pub l2: Option<SvConfig>,
}

impl LawConfig {
    fn default_case() -> LawCase {
        LawCase::I
    }

    pub fn build(&self) -> anyhow::Result<WindowLaw> {
        let law = match self.case {
            LawCase::I => WindowLaw::case_i(self.sigma),
            LawCase::Ii => WindowLaw::case_ii(self.sigma),
            LawCase::Iii => WindowLaw::case_iii(self.sigma),
            LawCase::Mixed => WindowLaw::mixed(
                self.alpha.context("law.alpha is required for the mixed law")?,
                self.sigma,
            ),
            LawCase::General => {
                let l1 = self.l1.context("law.l1 is required for the general law")?.build()?;
                let l2 = self.l2.context("law.l2 is required for the general law")?.build()?;
                WindowLaw::general(l1, l2, self.sigma)
            }
        };
        law.validate().context("law")?;
        Ok(law)
    }
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig {
            case: LawCase::I,
            sigma: 1.0,
            alpha: None,
            l1: None,
            l2: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistKind {
    Gaussian,
    Rademacher,
    Uniform,
    StudentT,
    LogPerturbedPareto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    #[serde(default = "DistConfig::default_kind")]
    pub kind: DistKind,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

impl DistConfig {
    fn default_kind() -> DistKind {
        DistKind::Gaussian
    }

    pub fn build(&self) -> anyhow::Result<DistributionSpec> {
        let d = match self.kind {
            DistKind::Gaussian => DistributionSpec::Gaussian { sigma: self.sigma },
            DistKind::Rademacher => DistributionSpec::Rademacher,
            DistKind::Uniform => DistributionSpec::Uniform { sigma: self.sigma },
            DistKind::StudentT => DistributionSpec::StudentT {
                nu: self.nu.context("distribution.nu is required for student-t")?,
            },
            DistKind::LogPerturbedPareto => DistributionSpec::LogPerturbedPareto(LogPerturbedPareto::new(
                self.beta.context("distribution.beta is required")?,
                self.gamma.unwrap_or(0.0),
                self.delta.unwrap_or(0.0),
            )?),
        };
        d.validate().context("distribution")?;
        Ok(d)
    }
}

impl Default for DistConfig {
    fn default() -> Self {
        DistConfig {
            kind: DistKind::Gaussian,
            sigma: 1.0,
            nu: None,
            beta: None,
            gamma: None,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    SqrtExp,
    OverLog,
    PowerGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: FamilyKind,
    pub c: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
}

impl FamilyConfig {
    pub fn build(&self) -> anyhow::Result<SubseqFamily> {
        let f = match self.kind {
            FamilyKind::SqrtExp => SubseqFamily::SqrtExp { c: self.c },
            FamilyKind::OverLog => SubseqFamily::OverLog { c: self.c },
            FamilyKind::PowerGrid => SubseqFamily::PowerGrid {
                c: self.c,
                alpha: self.alpha.context("family.alpha is required for power-grid")?,
            },
        };
        f.validate().context("family")?;
        Ok(f)
    }

    /// Smallest `c` (exclusive) for which the disjoint-window lattice works.
    pub fn regime_floor(&self) -> f64 {
        match self.kind {
            FamilyKind::SqrtExp => 2.0,
            FamilyKind::OverLog | FamilyKind::PowerGrid => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Lattice indices run up to `i_max` (inclusive for grids, exclusive for scans).
    #[serde(default = "GridConfig::default_i_max")]
    pub i_max: u64,
    /// Scans start here; `None` is the family's domain start.
    #[serde(default)]
    pub i_min: Option<u64>,
    /// End of the gap-inequality scan; `None` is `i_max`.
    #[serde(default)]
    pub gap_i_max: Option<u64>,
    /// Fraction of `i_max` skipped on each axis before tracking.
    #[serde(default = "GridConfig::default_burn_in")]
    pub burn_in: f64,
    /// Window anchors `(m, n)`.
    #[serde(default = "GridConfig::default_anchors")]
    pub anchors: Vec<(u64, u64)>,
}

impl GridConfig {
    fn default_i_max() -> u64 {
        1000
    }
    fn default_burn_in() -> f64 {
        0.5
    }
    fn default_anchors() -> Vec<(u64, u64)> {
        vec![(1000, 1000)]
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            i_max: Self::default_i_max(),
            i_min: None,
            gap_i_max: None,
            burn_in: Self::default_burn_in(),
            anchors: Self::default_anchors(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of sublevel-measure quadrature.
    #[serde(default = "Tolerances::default_measure")]
    pub measure_rel_tol: f64,
    /// Relative tolerance of the equivalence-check quadratures.
    #[serde(default = "Tolerances::default_equivalence")]
    pub equivalence_rel_tol: f64,
    /// Accepted range of `Var(T / sqrt(σ² area))`.
    #[serde(default = "Tolerances::default_variance_band")]
    pub variance_band: (f64, f64),
    /// Monte Carlo agreement in binomial standard errors.
    #[serde(default = "Tolerances::default_mc_se")]
    pub mc_se: f64,
    /// Largest acceptable appendix ratio band (max/min).
    #[serde(default = "Tolerances::default_band")]
    pub appendix_band: f64,
    /// Largest acceptable drift between consecutive appendix ratios.
    #[serde(default = "Tolerances::default_drift")]
    pub appendix_drift: f64,
    /// Largest acceptable `d₀` of the exponential sandwich.
    #[serde(default = "Tolerances::default_d0")]
    pub d0_max: f64,
    /// Band the final running maximum must fall in, in units of σ.
    #[serde(default)]
    pub limsup_band: Option<(f64, f64)>,
}

impl Tolerances {
    fn default_measure() -> f64 {
        1e-3
    }
    fn default_equivalence() -> f64 {
        1e-5
    }
    fn default_variance_band() -> (f64, f64) {
        (0.95, 1.05)
    }
    fn default_mc_se() -> f64 {
        3.0
    }
    fn default_band() -> f64 {
        10.0
    }
    fn default_drift() -> f64 {
        0.25
    }
    fn default_d0() -> f64 {
        5.0
    }

    fn validate(&self) -> anyhow::Result<()> {
        let positive = [
            ("measure_rel_tol", self.measure_rel_tol),
            ("equivalence_rel_tol", self.equivalence_rel_tol),
            ("mc_se", self.mc_se),
            ("appendix_band", self.appendix_band),
            ("appendix_drift", self.appendix_drift),
            ("d0_max", self.d0_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                bail!("tolerances.{name} = {v} must be finite and > 0");
            }
        }
        let (lo, hi) = self.variance_band;
        if !(lo > 0.0 && hi > lo) {
            bail!("tolerances.variance_band = [{lo}, {hi}] must satisfy 0 < lo < hi");
        }
        if let Some((lo, hi)) = self.limsup_band {
            if !(hi > lo) {
                bail!("tolerances.limsup_band = [{lo}, {hi}] must satisfy lo < hi");
            }
        }
        Ok(())
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            measure_rel_tol: Self::default_measure(),
            equivalence_rel_tol: Self::default_equivalence(),
            variance_band: Self::default_variance_band(),
            mc_se: Self::default_mc_se(),
            appendix_band: Self::default_band(),
            appendix_drift: Self::default_drift(),
            d0_max: Self::default_d0(),
            limsup_band: None,
        }
    }
}

/// Window and bound parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default = "BoundsConfig::default_delta")]
    pub delta: f64,
    #[serde(default = "BoundsConfig::default_gamma")]
    pub gamma: f64,
    #[serde(default = "BoundsConfig::default_eta")]
    pub eta: f64,
    /// Truncation `δ` used for `b` when it differs from the exponent's `δ`.
    #[serde(default)]
    pub truncation_delta: Option<f64>,
    /// Square sides of the summability diagnostic; empty skips it.
    #[serde(default)]
    pub summability_horizons: Vec<u64>,
}

impl BoundsConfig {
    fn default_delta() -> f64 {
        0.1
    }
    fn default_gamma() -> f64 {
        0.05
    }
    fn default_eta() -> f64 {
        0.2
    }
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            eps: 1.0,
            delta: Self::default_delta(),
            gamma: Self::default_gamma(),
            eta: Self::default_eta(),
            truncation_delta: None,
            summability_horizons: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentCaseKind {
    I,
    Ii,
    Iii,
    PowerLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoConfig {
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    #[serde(default = "MomentsConfig::default_case")]
    pub case: MomentCaseKind,
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Members to classify; empty uses `distribution`.
    #[serde(default)]
    pub members: Vec<ParetoConfig>,
    #[serde(default = "MomentsConfig::default_horizons")]
    pub horizons: Vec<f64>,
}

impl MomentsConfig {
    fn default_case() -> MomentCaseKind {
        MomentCaseKind::I
    }
    fn default_horizons() -> Vec<f64> {
        (0..6).map(|k| 20.0 * f64::from(1u32 << k)).collect()
    }

    pub fn build_case(&self) -> anyhow::Result<MomentCase> {
        Ok(match self.case {
            MomentCaseKind::I => MomentCase::CaseI,
            MomentCaseKind::Ii => MomentCase::CaseII,
            MomentCaseKind::Iii => MomentCase::CaseIII,
            MomentCaseKind::PowerLog => {
                let alpha = self.alpha.context("moments.alpha is required for power-log")?;
                if !(alpha > 0.0 && alpha < 1.0) {
                    bail!("moments.alpha = {alpha} must lie in the open interval (0, 1)");
                }
                MomentCase::PowerLog { alpha }
            }
        })
    }
}

impl Default for MomentsConfig {
    fn default() -> Self {
        MomentsConfig {
            case: Self::default_case(),
            alpha: None,
            members: Vec::new(),
            horizons: Self::default_horizons(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixConfig {
    /// Counting case 1 to 5.
    #[serde(default = "AppendixConfig::default_case")]
    pub case: u8,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub l1: Option<SvConfig>,
    #[serde(default)]
    pub l2: Option<SvConfig>,
    #[serde(default = "AppendixConfig::default_xs")]
    pub xs: Vec<f64>,
}

impl AppendixConfig {
    fn default_case() -> u8 {
        1
    }
    fn default_xs() -> Vec<f64> {
        vec![1e4, 1e6, 1e8, 1e10, 1e12]
    }

    pub fn build_case(&self) -> anyhow::Result<CountingCase> {
        let case = match self.case {
            1 => CountingCase::M1,
            2 => CountingCase::M2,
            3 => CountingCase::M3,
            4 => CountingCase::M4 {
                alpha: self.alpha.unwrap_or(0.5),
            },
            5 => CountingCase::M5 {
                l1: self.l1.context("appendix.l1 is required for case 5")?.build()?,
                l2: self.l2.context("appendix.l2 is required for case 5")?.build()?,
            },
            k => bail!("appendix.case = {k} must be one of 1, 2, 3, 4, 5"),
        };
        case.growth().validate().context("appendix")?;
        Ok(case)
    }
}

impl Default for AppendixConfig {
    fn default() -> Self {
        AppendixConfig {
            case: Self::default_case(),
            alpha: None,
            l1: None,
            l2: None,
            xs: Self::default_xs(),
        }
    }
}

/// The document as written; `kind` may be left to the subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub law: LawConfig,
    #[serde(default)]
    pub distribution: DistConfig,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Replicates (simulate), seeds (surrogate-limsup) or Monte Carlo
    /// replicates (bounds; 0 skips the simulation).
    #[serde(default)]
    pub replicates: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub moments: MomentsConfig,
    #[serde(default)]
    pub appendix: AppendixConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The defaults for one kind.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let mut c: ExperimentConfig = serde_json::from_str("{}").expect("empty document parses");
        c.kind = Some(kind);
        c
    }
}

fn one() -> f64 {
    1.0
}

/// A parsed, validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
    /// Set when the family's `c` lies outside its regime.
    pub regime_violation: bool,
}

/// Parses and validates; `kind` fills in a missing `kind` key and must
/// agree with a present one.
pub fn parse_config(text: &str, kind: Option<ExperimentKind>) -> anyhow::Result<Validated> {
    let config: ExperimentConfig = serde_json::from_str(text).context("malformed configuration")?;
    validate(config, kind)
}

pub fn validate(mut config: ExperimentConfig, kind: Option<ExperimentKind>) -> anyhow::Result<Validated> {
    let kind = match (config.kind, kind) {
        (Some(a), Some(b)) if a != b => bail!("configuration is for `{}` but `{}` was requested", a.name(), b.name()),
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => bail!("configuration has no `kind`"),
    };
    config.kind = Some(kind);
    config.law.build()?;
    config.distribution.build()?;
    config.tolerances.validate()?;
    if kind.is_stochastic() && config.seed.is_none() {
        bail!("`{}` is stochastic and needs a seed", kind.name());
    }
    let replicates = config.replicates.unwrap_or(match kind {
        ExperimentKind::Simulate | ExperimentKind::SurrogateLimsup => 1,
        _ => 0,
    });
    config.replicates = Some(replicates);
    if kind == ExperimentKind::Bounds && replicates > 0 && config.seed.is_none() {
        bail!("a Monte Carlo check (replicates > 0) needs a seed");
    }
    if replicates > MAX_REPLICATES {
        bail!("replicates = {replicates} exceeds the cap {MAX_REPLICATES}");
    }
    let g = &config.grid;
    if !(g.burn_in >= 0.0 && g.burn_in < 1.0) {
        bail!("grid.burn_in = {} must lie in [0, 1)", g.burn_in);
    }
    if kind == ExperimentKind::SurrogateLimsup && g.i_max > MAX_GRID {
        bail!("grid.i_max = {} exceeds the grid cap {MAX_GRID}", g.i_max);
    }
    if g.i_max > MAX_SCAN {
        bail!("grid.i_max = {} exceeds the scan cap {MAX_SCAN}", g.i_max);
    }
    if let Some(&(m, n)) = g.anchors.iter().find(|(m, n)| *m < 3 || *n < 3) {
        bail!("grid.anchors contains ({m}, {n}); anchors must be >= 3");
    }
    let mut warnings = Vec::new();
    let mut regime_violation = false;
    if let Some(f) = &config.family {
        f.build()?;
        // Only the disjoint-window constructions need the floor; tracking
        // and upper-bound sums work for any c > 0.
        let uses_disjoint = matches!(kind, ExperimentKind::Subseq | ExperimentKind::Bounds);
        if uses_disjoint && !(f.c > f.regime_floor()) {
            regime_violation = true;
            warnings.push(format!(
                "family c = {} is outside the disjoint-window regime c > {}; results are a negative control",
                f.c,
                f.regime_floor()
            ));
        }
    } else if matches!(kind, ExperimentKind::SurrogateLimsup | ExperimentKind::Subseq) {
        bail!("`{}` needs a `family` section", kind.name());
    }
    match kind {
        ExperimentKind::Bounds => {
            let b = &config.bounds;
            lsl_core::bounds::BoundParams::new(b.eps, b.delta, b.gamma, config.law.sigma, b.eta)?;
            if !config.bounds.summability_horizons.is_empty() && config.family.is_none() {
                bail!("the summability diagnostic needs a `family` section");
            }
        }
        ExperimentKind::Moments => {
            config.moments.build_case()?;
            if config.moments.members.is_empty() && config.distribution.kind != DistKind::LogPerturbedPareto {
                bail!("moments needs `moments.members` or a log-perturbed-pareto distribution");
            }
        }
        ExperimentKind::VerifyAppendix => {
            config.appendix.build_case()?;
            if config
                .appendix
                .xs
                .iter()
                .any(|&x| !(x >= std::f64::consts::E * std::f64::consts::E))
            {
                bail!("appendix.xs must all be >= e^2");
            }
        }
        _ => {}
    }
    Ok(Validated {
        kind,
        config,
        warnings,
        regime_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_simulate_fills_defaults() {
        let v = parse_config(r#"{"kind": "simulate", "seed": 7}"#, None).unwrap();
        assert_eq!(v.kind, ExperimentKind::Simulate);
        assert_eq!(v.config.law.case, LawCase::I);
        assert_eq!(v.config.law.sigma, 1.0);
        assert_eq!(v.config.distribution.kind, DistKind::Gaussian);
        assert_eq!(v.config.replicates, Some(1));
        assert_eq!(v.config.grid.anchors, vec![(1000, 1000)]);
        assert_eq!(v.config.tolerances.variance_band, (0.95, 1.05));
        assert!(v.warnings.is_empty());
    }

    #[test]
    fn alpha_one_names_the_open_interval() {
        let err = parse_config(
            r#"{"kind": "simulate", "seed": 1, "law": {"case": "mixed", "alpha": 1.0}}"#,
            None,
        )
        .unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("open interval (0, 1)"), "{msg}");
    }

    #[test]
    fn unknown_key_lists_accepted_keys() {
        let err = parse_config(r#"{"kind": "simulate", "seed": 1, "alpha2": 0.5}"#, None).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("alpha2"), "{msg}");
        for key in ["law", "distribution", "family", "seed", "replicates", "tolerances"] {
            assert!(msg.contains(key), "{msg}");
        }
    }

    #[test]
    fn nested_unknown_key_is_rejected() {
        assert!(parse_config(r#"{"kind": "simulate", "seed": 1, "law": {"sigmaa": 1}}"#, None).is_err());
    }

    #[test]
    fn regime_violation_warns() {
        let v = parse_config(r#"{"kind": "subseq", "family": {"kind": "sqrt-exp", "c": 1.0}}"#, None).unwrap();
        assert!(v.regime_violation);
        assert_eq!(v.warnings.len(), 1);
        let v = parse_config(r#"{"kind": "subseq", "family": {"kind": "sqrt-exp", "c": 3.0}}"#, None).unwrap();
        assert!(!v.regime_violation);
        let v = parse_config(
            r#"{"kind": "surrogate-limsup", "seed": 1, "family": {"kind": "sqrt-exp", "c": 0.25}}"#,
            None,
        )
        .unwrap();
        assert!(!v.regime_violation);
    }

    #[test]
    fn stochastic_kinds_need_a_seed() {
        assert!(parse_config(r#"{"kind": "simulate"}"#, None).is_err());
        assert!(parse_config(r#"{"kind": "verify-appendix"}"#, None).is_ok());
    }

    #[test]
    fn kind_comes_from_the_subcommand() {
        let v = parse_config("{}", Some(ExperimentKind::VerifyAppendix)).unwrap();
        assert_eq!(v.kind, ExperimentKind::VerifyAppendix);
        assert!(parse_config(r#"{"kind": "moments"}"#, Some(ExperimentKind::Subseq)).is_err());
        assert!(parse_config("{}", None).is_err());
    }

    #[test]
    fn invalid_ranges() {
        let bad = [
            r#"{"kind": "verify-appendix", "tolerances": {"measure_rel_tol": 0}}"#,
            r#"{"kind": "verify-appendix", "appendix": {"case": 7}}"#,
            r#"{"kind": "verify-appendix", "appendix": {"xs": [2.0]}}"#,
            r#"{"kind": "simulate", "seed": 1, "grid": {"anchors": [[2, 10]]}}"#,
            r#"{"kind": "simulate", "seed": 1, "replicates": 1000000000}"#,
            r#"{"kind": "surrogate-limsup", "seed": 1, "family": {"kind": "sqrt-exp", "c": 1}, "grid": {"i_max": 100000}}"#,
            r#"{"kind": "moments", "moments": {"case": "power-log", "alpha": 1.0}}"#,
            r#"{"kind": "simulate", "seed": 1, "distribution": {"kind": "student-t"}}"#,
        ];
        for doc in bad {
            assert!(parse_config(doc, None).is_err(), "{doc}");
        }
    }

    #[test]
    fn malformed_document() {
        let err = parse_config(r#"{"kind": "simulate","#, None).unwrap_err();
        assert!(format!("{err:#}").contains("malformed"));
    }
}
