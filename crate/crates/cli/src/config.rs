//! JSON run configurations. Unknown fields are hard errors everywhere so
//! a misspelled parameter never silently falls back to a default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use normscape_core::abm::SimConfig;
use normscape_core::game::ClassifyOptions;
use normscape_core::meanfield::{AttractorOptions, GridSpec, LandscapeOptions, TraitDistributions};
use normscape_core::qre::SolverOptions;
use normscape_core::sensitivity::SweepSpec;
use normscape_core::utility::UtilityFamily;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iters: u32,
    pub damping: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverSettings {
            tol: d.tol,
            max_iters: d.max_iters,
            damping: d.damping,
        }
    }
}

impl SolverSettings {
    pub fn to_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            damping: self.damping,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttractorSettings {
    pub epsilon: Option<f64>,
    pub eps_fraction: f64,
    pub require_negative_hessian: bool,
}

impl Default for AttractorSettings {
    fn default() -> Self {
        let d = AttractorOptions::default();
        AttractorSettings {
            epsilon: d.epsilon,
            eps_fraction: d.eps_fraction,
            require_negative_hessian: d.require_negative_hessian,
        }
    }
}

impl AttractorSettings {
    pub fn to_options(&self) -> AttractorOptions {
        AttractorOptions {
            epsilon: self.epsilon,
            eps_fraction: self.eps_fraction,
            require_negative_hessian: self.require_negative_hessian,
        }
    }
}

/// Subjective utility family for the mean-field commands. The risk
/// sensitivity is drawn from the trait distribution, so only the
/// structural parameters appear here.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySettings {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

impl Default for UtilitySettings {
    fn default() -> Self {
        UtilitySettings {
            kind: "risk_neutral".into(),
            omega: None,
            reference: None,
        }
    }
}

impl UtilitySettings {
    pub fn to_family(&self) -> Result<UtilityFamily, CliError> {
        let reject_extras = |name: &str| -> Result<(), CliError> {
            if self.omega.is_some() || self.reference.is_some() {
                Err(CliError::Config(format!(
                    "utility type `{name}` takes no omega/reference fields"
                )))
            } else {
                Ok(())
            }
        };
        match self.kind.as_str() {
            "risk_neutral" => {
                reject_extras("risk_neutral")?;
                Ok(UtilityFamily::RiskNeutral)
            }
            "linex" => {
                reject_extras("linex")?;
                Ok(UtilityFamily::Linex)
            }
            "prospect" => {
                let omega = self.omega.unwrap_or(2.0);
                if omega <= 0.0 {
                    return Err(CliError::Config(format!("prospect omega {omega} must be > 0")));
                }
                Ok(UtilityFamily::Prospect {
                    omega,
                    reference: self.reference.unwrap_or(0.0),
                })
            }
            other => Err(CliError::Config(format!(
                "unknown utility type `{other}` (expected risk_neutral, linex, or prospect)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeConfig {
    pub grid: GridSpec,
    pub traits: TraitDistributions,
    pub utility: UtilitySettings,
    pub nodes: usize,
    pub solver: SolverSettings,
    pub deadlock_corner_label: bool,
    pub attractor: AttractorSettings,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig {
            grid: GridSpec::default(),
            traits: TraitDistributions::default(),
            utility: UtilitySettings::default(),
            nodes: 5,
            solver: SolverSettings::default(),
            deadlock_corner_label: true,
            attractor: AttractorSettings::default(),
        }
    }
}

impl LandscapeConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.nodes == 0 {
            return Err(CliError::Config("nodes must be >= 1".into()));
        }
        if self.grid.nu < 3 || self.grid.nv < 3 {
            return Err(CliError::Config("grid resolution must be >= 3 per axis".into()));
        }
        if self.traits.sigma_lambda <= 0.0 || self.traits.sigma_eta <= 0.0 {
            return Err(CliError::Config("trait sigmas must be > 0".into()));
        }
        Ok(())
    }

    pub fn landscape_options(&self) -> Result<LandscapeOptions, CliError> {
        self.validate()?;
        Ok(LandscapeOptions {
            nodes: self.nodes,
            solver: self.solver.to_options(),
            classify: ClassifyOptions {
                deadlock_corner: self.deadlock_corner_label,
            },
            attractor: self.attractor.to_options(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub landscape: LandscapeConfig,
    /// Ordered loop of (mu_eta, mu_lambda) waypoints.
    pub waypoints: Vec<(f64, f64)>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            landscape: LandscapeConfig::default(),
            waypoints: vec![(0.1, 0.5)],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub base: SimConfig,
    pub sweep: SweepSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            base: SimConfig::default(),
            sweep: SweepSpec::default(),
        }
    }
}

/// Loads and parses a JSON config with field-level diagnostics.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
