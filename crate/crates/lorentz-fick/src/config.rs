//! Declarative experiment configuration (TOML) shared by all subcommands.

use crate::analysis::DConvention;
use crate::params::KineticParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

/// Potential profile selection; only the quartic bump family is shipped.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    QuarticBump { height: f64 },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::QuarticBump { height: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub n_x: usize,
    pub n_theta: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n_x: 100, n_theta: 32 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SamplerSpec {
    pub n_samples: usize,
    /// Backward horizon; `None` takes the default `10 eps^{-lambda} L`.
    pub t_cap: Option<f64>,
    /// Landau Euler-Maruyama step; `None` takes the largest admissible one.
    pub dt: Option<f64>,
    /// Scattering table nodes.
    pub table_points: usize,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec { n_samples: 10_000, t_cap: None, dt: None, table_points: 512 }
    }
}

/// Source of the Landau generator coefficient.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum LandauCoefficientSource {
    /// Potential-derived `landau_coefficient_b` at the configured epsilon
    /// (keeps Boltzmann/Landau consistency for the actual potential).
    #[default]
    FromPotential,
    /// The `mu/2` convention.
    MuHalf,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ExperimentConfig {
    pub params: KineticParams,
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    pub sampler: SamplerSpec,
    /// Omitted seed is drawn at startup and printed, never defaulted silently.
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub d_convention: DConventionSpec,
    pub landau_coefficient: LandauCoefficientSource,
}

/// Serializable mirror of [`DConvention`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum DConventionSpec {
    #[default]
    ComponentNormalized,
    VectorArclength,
}

impl From<DConventionSpec> for DConvention {
    fn from(s: DConventionSpec) -> Self {
        match s {
            DConventionSpec::ComponentNormalized => DConvention::ComponentNormalized,
            DConventionSpec::VectorArclength => DConvention::VectorArclength,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: KineticParams::default(),
            potential: PotentialSpec::default(),
            grid: GridSpec::default(),
            sampler: SamplerSpec::default(),
            seed: None,
            output_dir: None,
            d_convention: DConventionSpec::default(),
            landau_coefficient: LandauCoefficientSource::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate().map_err(|e| ConfigError::Invalid {
            field: "params",
            message: e.to_string(),
        })?;
        let PotentialSpec::QuarticBump { height } = self.potential;
        if height <= 0.0 {
            return Err(ConfigError::Invalid {
                field: "potential.height",
                message: format!("must be positive, got {height}"),
            });
        }
        if self.grid.n_x < 8 || self.grid.n_theta < 4 || self.grid.n_theta % 2 != 0 {
            return Err(ConfigError::Invalid {
                field: "grid",
                message: format!(
                    "need n_x >= 8 and even n_theta >= 4, got {:?}",
                    self.grid
                ),
            });
        }
        if self.sampler.n_samples == 0 || self.sampler.table_points < 16 {
            return Err(ConfigError::Invalid {
                field: "sampler",
                message: format!("need n_samples >= 1, table_points >= 16, got {:?}", self.sampler),
            });
        }
        Ok(())
    }

    /// Hash of the canonical serialization, embedded in every output.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml().as_bytes());
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig {
            seed: Some(42),
            output_dir: Some("out".into()),
            ..Default::default()
        };
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn partial_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "[params]\nepsilon = 0.1\nalpha = 0.1\nlambda = 0.05\nmu = 1.0\nslab_width = 1.0\nrho_left = 1.0\nrho_right = 2.0\n",
        )
        .unwrap();
        assert_eq!(cfg.grid, GridSpec::default());
        assert_eq!(cfg.seed, None);
        assert_eq!(cfg.params.epsilon, 0.1);
    }

    #[test]
    fn invalid_fields_are_reported_with_paths() {
        let mut cfg = ExperimentConfig::default();
        cfg.params.alpha = 0.9;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("params"));
        let mut cfg = ExperimentConfig::default();
        cfg.grid.n_theta = 7;
        assert!(cfg.validate().unwrap_err().to_string().contains("grid"));
    }

    #[test]
    fn hash_distinguishes_configs() {
        let a = ExperimentConfig::default();
        let mut b = ExperimentConfig::default();
        b.params.epsilon = 0.123;
        assert_ne!(a.hash(), b.hash());
    }
}
