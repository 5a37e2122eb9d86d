//! Experiment configuration files.

use std::path::PathBuf;

use mfeit_core::forward::omega_grid;
use mfeit_core::reconstruct::InversionSettings;
use mfeit_core::{
    build_star_shape, Complex64, CurrentSpec, DomainConfig, Error, FitOptions, FrequencyProfile,
    Resolution, StarShape,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Log
}

impl OmegaSpec {
    pub fn grid(&self) -> Result<Vec<f64>, Error> {
        let ok = self.count >= 1
            && self.min.is_finite()
            && self.max.is_finite()
            && self.min <= self.max
            && (self.spacing == Spacing::Linear || self.min > 0.0);
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "bad frequency grid: {} points on [{}, {}]",
                self.count, self.min, self.max
            )));
        }
        Ok(omega_grid(self.min, self.max, self.count, self.spacing == Spacing::Log))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSpec {
    pub max_poles: usize,
    pub tol: f64,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self {
            max_poles: 16,
            tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub levels: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// Input files for the commands that consume earlier outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub dataset: Option<PathBuf>,
    pub cauchy: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub domain: DomainConfig,
    pub shape: Option<StarShape>,
    #[serde(default = "CurrentSpec::cos_theta")]
    pub current: CurrentSpec,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default = "default_modes")]
    pub n_modes: usize,
    /// Contrasts `[re, im]` for the forward command.
    #[serde(default)]
    pub contrasts: Vec<[f64; 2]>,
    pub profile: Option<FrequencyProfile>,
    pub omega: Option<OmegaSpec>,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fit: FitSpec,
    #[serde(default)]
    pub inversion: InversionSettings,
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub inputs: Inputs,
}

fn default_modes() -> usize {
    60
}

fn missing(what: &str) -> Error {
    Error::InvalidConfig(format!("config needs `{what}` for this command"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.domain.validate()?;
        cfg.inversion.validate()?;
        if cfg.current.is_zero() {
            return Err(Error::InvalidConfig("the injected current is identically zero".into()));
        }
        if !(cfg.eta >= 0.0 && cfg.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta must be nonnegative, got {}", cfg.eta)));
        }
        if let Some(shape) = &cfg.shape {
            build_star_shape(shape.cos_coeffs(), shape.sin_coeffs(), &cfg.domain)?;
        }
        if let (Some(p), Some(o)) = (&cfg.profile, &cfg.omega) {
            p.values(&o.grid()?)?;
        }
        Ok(cfg)
    }

    pub fn shape(&self) -> Result<&StarShape, Error> {
        self.shape.as_ref().ok_or_else(|| missing("shape"))
    }

    pub fn profile(&self) -> Result<(FrequencyProfile, Vec<f64>), Error> {
        let p = self.profile.ok_or_else(|| missing("profile"))?;
        let o = self.omega.as_ref().ok_or_else(|| missing("omega"))?;
        Ok((p, o.grid()?))
    }

    pub fn contrasts(&self) -> Result<Vec<Complex64>, Error> {
        if self.contrasts.is_empty() {
            return Err(missing("contrasts"));
        }
        Ok(self.contrasts.iter().map(|c| Complex64::new(c[0], c[1])).collect())
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_poles: self.fit.max_poles,
            tol: self.fit.tol,
            ..FitOptions::new(&self.domain)
        }
    }

    pub fn sweep(&self) -> Result<&SweepSpec, Error> {
        self.sweep.as_ref().ok_or_else(|| missing("sweep"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::parse(r#"{"shape":{"cos":[0.5]}}"#).unwrap();
        assert_eq!(cfg.n_modes, 60);
        assert_eq!(cfg.current, CurrentSpec::cos_theta());
        assert!(cfg.profile().is_err());
    }

    #[test]
    fn rejects_bad_profile_and_unknown_keys() {
        let bad = r#"{"profile":{"model":"affine","k_r":-1.0,"c":0.0},"omega":{"min":1,"max":2,"count":3}}"#;
        assert!(matches!(ExperimentConfig::parse(bad), Err(Error::InvalidProfile { .. })));
        assert!(matches!(ExperimentConfig::parse(r#"{"shpe":{}}"#), Err(Error::Json(_))));
        let e = ExperimentConfig::parse("{\n  \"eta\": 0.1,\n  oops\n}").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }
}
