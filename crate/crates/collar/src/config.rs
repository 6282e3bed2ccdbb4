//! Run configuration: a strict TOML dialect with defaults filled in.
//!
//! Parsing is deliberately unforgiving: unknown keys are rejected so a
//! misspelled tolerance can never silently fall back to a default, and every
//! numeric invariant is checked before a run starts. The echo serialization
//! is a fixpoint of parse, which is what makes report files comparable
//! byte for byte.

use crate::algebra::LieAlgebra;
use crate::lattice::{build_grid, LatticeGrid, MAX_DIM};
use crate::psigma::PoissonStructure;
use crate::scalar::PotentialSpec;
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theory {
    PcaDemo,
    Scalar,
    Psigma,
    Yangmills,
    VerifyAll,
}

impl Theory {
    pub fn name(&self) -> &'static str {
        match self {
            Theory::PcaDemo => "pca_demo",
            Theory::Scalar => "scalar",
            Theory::Psigma => "psigma",
            Theory::Yangmills => "yangmills",
            Theory::VerifyAll => "verify_all",
        }
    }
}

/// Metric entry: the literal "flat" or a constant diagonal, one entry per
/// grid axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricConfig {
    Named(String),
    Diagonal(Vec<f64>),
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig::Named("flat".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub sizes: Vec<usize>,
    pub spacings: Vec<f64>,
    pub metric: MetricConfig,
    /// Collar shift covector, constant over the slice; empty means zero.
    pub eta0: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            sizes: vec![32],
            spacings: vec![0.2],
            metric: MetricConfig::default(),
            eta0: Vec::new(),
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.sizes.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::Config(format!(
                "grid.sizes must have 1 or {MAX_DIM} entries, got {d}"
            )));
        }
        if self.spacings.len() != d {
            return Err(Error::Config(format!(
                "grid.spacings has {} entries for {d} axes",
                self.spacings.len()
            )));
        }
        for (k, h) in self.spacings.iter().enumerate() {
            if !(h.is_finite() && *h > 0.0) {
                return Err(Error::Config(format!(
                    "grid.spacings[{k}] = {h} is not positive and finite"
                )));
            }
        }
        match &self.metric {
            MetricConfig::Named(n) if n == "flat" => {}
            MetricConfig::Named(n) => {
                return Err(Error::Config(format!(
                    "grid.metric \"{n}\" is not recognized; use \"flat\" or a diagonal array"
                )));
            }
            MetricConfig::Diagonal(diag) => {
                if diag.len() != d {
                    return Err(Error::Config(format!(
                        "grid.metric diagonal has {} entries for {d} axes",
                        diag.len()
                    )));
                }
                if let Some(bad) = diag.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::Config(format!(
                        "grid.metric diagonal entry {bad} is not positive"
                    )));
                }
            }
        }
        if !self.eta0.is_empty() && self.eta0.len() != d {
            return Err(Error::Config(format!(
                "grid.eta0 has {} entries for {d} axes",
                self.eta0.len()
            )));
        }
        if let Some(bad) = self.eta0.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("grid.eta0 entry {bad} is not finite")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn build(&self) -> Result<LatticeGrid> {
        self.validate()?;
        let mut diag = [1.0f64; MAX_DIM];
        if let MetricConfig::Diagonal(d) = &self.metric {
            for (k, v) in d.iter().enumerate() {
                diag[k] = *v;
            }
        }
        let mut eta = [0.0f64; MAX_DIM];
        for (k, v) in self.eta0.iter().enumerate() {
            eta[k] = *v;
        }
        build_grid(
            &self.sizes,
            &self.spacings,
            move |_x| [[diag[0], 0.0], [0.0, diag[1]]],
            move |_x| eta,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollarConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub steps: usize,
}

impl Default for CollarConfig {
    fn default() -> Self {
        CollarConfig {
            epsilon: 1.0,
            dt: 0.01,
            steps: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalarConfig {
    /// "free", "mass" or "quartic".
    pub potential: String,
    pub mass: f64,
    pub lambda: f64,
    /// Fourier mode of the initial standing wave.
    pub mode: usize,
    pub amplitude: f64,
    /// Euclidean slices for generating-functional runs.
    pub nslices: usize,
}

impl Default for ScalarConfig {
    fn default() -> Self {
        ScalarConfig {
            potential: "free".into(),
            mass: 1.0,
            lambda: 0.1,
            mode: 1,
            amplitude: 1.0,
            nslices: 8,
        }
    }
}

impl ScalarConfig {
    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        match self.potential.as_str() {
            "free" => Ok(PotentialSpec::Free),
            "mass" => {
                if !(self.mass.is_finite() && self.mass >= 0.0) {
                    return Err(Error::Config(format!(
                        "scalar.mass = {} must be nonnegative",
                        self.mass
                    )));
                }
                Ok(PotentialSpec::Mass { m: self.mass })
            }
            "quartic" => {
                if !(self.lambda.is_finite() && self.lambda >= 0.0) {
                    return Err(Error::Config(format!(
                        "scalar.lambda = {} must be nonnegative",
                        self.lambda
                    )));
                }
                Ok(PotentialSpec::Quartic { lambda: self.lambda })
            }
            other => Err(Error::Config(format!(
                "scalar.potential \"{other}\" is not one of free, mass, quartic"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsigmaConfig {
    /// "symplectic" (constant canonical 2x2), "su2" or "polynomial".
    pub poisson: String,
    pub c0: f64,
    pub c2: f64,
    /// "zero", "constant" or "mode".
    pub beta_profile: String,
    pub beta_amplitude: f64,
}

impl Default for PsigmaConfig {
    fn default() -> Self {
        PsigmaConfig {
            poisson: "su2".into(),
            c0: 0.5,
            c2: 0.8,
            beta_profile: "mode".into(),
            beta_amplitude: 0.1,
        }
    }
}

impl PsigmaConfig {
    pub fn poisson_structure(&self) -> Result<PoissonStructure> {
        match self.poisson.as_str() {
            "symplectic" => {
                let mut m = DMatrix::zeros(2, 2);
                m[(0, 1)] = 1.0;
                m[(1, 0)] = -1.0;
                PoissonStructure::constant(m)
            }
            "su2" => Ok(PoissonStructure::Su2),
            "polynomial" => {
                if !(self.c0.is_finite() && self.c2.is_finite()) {
                    return Err(Error::Config("psigma.c0/c2 must be finite".into()));
                }
                Ok(PoissonStructure::Polynomial {
                    c0: self.c0,
                    c2: self.c2,
                })
            }
            other => Err(Error::Config(format!(
                "psigma.poisson \"{other}\" is not one of symplectic, su2, polynomial"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.poisson_structure()?;
        profile_ok("psigma.beta_profile", &self.beta_profile)?;
        if !self.beta_amplitude.is_finite() {
            return Err(Error::Config("psigma.beta_amplitude must be finite".into()));
        }
        Ok(())
    }
}

fn profile_ok(key: &str, value: &str) -> Result<()> {
    match value {
        "zero" | "constant" | "mode" => Ok(()),
        other => Err(Error::Config(format!(
            "{key} \"{other}\" is not one of zero, constant, mode"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct YmConfig {
    /// "u1" or "su2".
    pub algebra: String,
    /// "zero", "constant" or "mode".
    pub a0_profile: String,
    pub a0_amplitude: f64,
    /// Amplitude of the random initial data.
    pub amplitude: f64,
    /// Project the initial momentum onto the constraint surface.
    pub project_gauss: bool,
}

impl Default for YmConfig {
    fn default() -> Self {
        YmConfig {
            algebra: "su2".into(),
            a0_profile: "zero".into(),
            a0_amplitude: 0.0,
            amplitude: 0.2,
            project_gauss: true,
        }
    }
}

impl YmConfig {
    pub fn lie_algebra(&self) -> Result<LieAlgebra> {
        match self.algebra.as_str() {
            "u1" => Ok(LieAlgebra::u1()),
            "su2" => Ok(LieAlgebra::su2()),
            other => Err(Error::Config(format!(
                "yangmills.algebra \"{other}\" is not one of u1, su2"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lie_algebra()?;
        profile_ok("yangmills.a0_profile", &self.a0_profile)?;
        if !self.a0_amplitude.is_finite() || !self.amplitude.is_finite() {
            return Err(Error::Config("yangmills amplitudes must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub theory: Theory,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub collar: CollarConfig,
    #[serde(default)]
    pub scalar: ScalarConfig,
    #[serde(default)]
    pub psigma: PsigmaConfig,
    #[serde(default)]
    pub yangmills: YmConfig,
    /// Named tolerance overrides; everything not listed keeps the module
    /// default pinned in the check that uses it.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults that validate for the given theory; the grid dimension in
    /// particular depends on which boundary is being simulated.
    pub fn defaults(theory: Theory) -> Self {
        let grid = match theory {
            Theory::Yangmills => GridConfig {
                sizes: vec![16, 16],
                spacings: vec![std::f64::consts::PI / 8.0; 2],
                ..GridConfig::default()
            },
            Theory::Psigma => GridConfig {
                sizes: vec![32],
                spacings: vec![0.125],
                ..GridConfig::default()
            },
            _ => GridConfig::default(),
        };
        RunConfig {
            theory,
            grid,
            collar: CollarConfig::default(),
            scalar: ScalarConfig::default(),
            psigma: PsigmaConfig::default(),
            yangmills: YmConfig::default(),
            tolerances: BTreeMap::new(),
            seed: 0,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let c = &self.collar;
        if !(c.epsilon.is_finite() && c.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "collar.epsilon = {} must be positive",
                c.epsilon
            )));
        }
        if !(c.dt.is_finite() && c.dt > 0.0) {
            return Err(Error::Config(format!("collar.dt = {} must be positive", c.dt)));
        }
        if c.steps == 0 {
            return Err(Error::Config("collar.steps must be at least 1".into()));
        }
        let confined = matches!(self.theory, Theory::Scalar | Theory::Psigma | Theory::Yangmills);
        let horizon = c.steps as f64 * c.dt;
        if confined && horizon > c.epsilon * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "collar.steps * collar.dt = {horizon} exceeds the collar depth {}",
                c.epsilon
            )));
        }
        for (name, tol) in &self.tolerances {
            if !(tol.is_finite() && *tol > 0.0) {
                return Err(Error::Config(format!(
                    "tolerances.{name} = {tol} must be positive"
                )));
            }
        }
        self.scalar.potential_spec()?;
        if self.scalar.mode == 0 {
            return Err(Error::Config("scalar.mode must be at least 1".into()));
        }
        if !self.scalar.amplitude.is_finite() {
            return Err(Error::Config("scalar.amplitude must be finite".into()));
        }
        if self.scalar.nslices < 2 {
            return Err(Error::Config("scalar.nslices must be at least 2".into()));
        }
        self.psigma.validate()?;
        self.yangmills.validate()?;
        match self.theory {
            Theory::Psigma if self.grid.dim() != 1 => Err(Error::Config(
                "the sigma-model boundary is one-dimensional; grid.sizes must have one entry"
                    .into(),
            )),
            Theory::Yangmills if self.grid.dim() != 2 => Err(Error::Config(
                "the gauge-theory boundary is two-dimensional; grid.sizes must have two entries"
                    .into(),
            )),
            _ => Ok(()),
        }
    }

    /// Named tolerance with a pinned default.
    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Canonical serialization; a fixpoint of [`parse_config`].
    pub fn echo(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }
}

/// Parses and validates a configuration. Parse errors keep the TOML
/// diagnostic, which carries line and column information.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("theory = \"scalar\"\n").unwrap();
        assert_eq!(cfg.theory, Theory::Scalar);
        assert_eq!(cfg.grid.sizes, vec![32]);
        assert_eq!(cfg.collar.steps, 100);
        assert_eq!(cfg.seed, 0);
        assert!(matches!(
            cfg.scalar.potential_spec().unwrap(),
            PotentialSpec::Free
        ));
        cfg.grid.build().unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(parse_config("theory = \"scalar\"\nspeling = 1\n").is_err());
        assert!(parse_config("theory = \"scalar\"\n[scalar]\nmas = 0.5\n").is_err());
        let err = parse_config("theory = \"scalar\"\n[collar]\ndt = -0.1\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(parse_config("theory = \"nope\"\n").is_err());
        assert!(
            parse_config("theory = \"scalar\"\n[collar]\ndt = 0.02\nsteps = 100\nepsilon = 1.0\n")
                .is_err(),
            "a run deeper than the collar must be rejected"
        );
        assert!(parse_config("theory = \"yangmills\"\n").is_err(), "ym needs a 2d grid");
        assert!(
            parse_config("theory = \"scalar\"\n[tolerances]\nenergy = 0.0\n").is_err()
        );
    }

    #[test]
    fn defaults_validate_for_every_theory() {
        for theory in [
            Theory::PcaDemo,
            Theory::Scalar,
            Theory::Psigma,
            Theory::Yangmills,
            Theory::VerifyAll,
        ] {
            RunConfig::defaults(theory).validate().unwrap();
        }
    }

    #[test]
    fn echo_is_a_parse_fixpoint() {
        let text = r#"
theory = "yangmills"
seed = 11

[grid]
sizes = [8, 8]
spacings = [0.785398163, 0.785398163]
metric = "flat"

[collar]
epsilon = 1.0
dt = 0.005
steps = 200

[yangmills]
algebra = "su2"
a0_profile = "constant"
a0_amplitude = 0.3
amplitude = 0.25
project_gauss = true

[tolerances]
gauss = 1e-8
energy = 1e-6
"#;
        let cfg = parse_config(text).unwrap();
        let echo1 = cfg.echo().unwrap();
        let cfg2 = parse_config(&echo1).unwrap();
        let echo2 = cfg2.echo().unwrap();
        assert_eq!(echo1, echo2);
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn metric_diagonal_and_eta_reach_the_grid() {
        let text = "theory = \"scalar\"\n[grid]\nsizes = [8]\nspacings = [0.5]\nmetric = [2.25]\neta0 = [0.1]\n";
        let cfg = parse_config(text).unwrap();
        let grid = cfg.grid.build().unwrap();
        assert!((grid.metric[0][0] - 2.25).abs() < 1e-15);
        assert!((grid.eta0[0][0] - 0.1).abs() < 1e-15);
        assert!(!grid.is_flat_uniform());
    }
}
