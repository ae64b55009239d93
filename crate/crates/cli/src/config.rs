//! Per-command JSON configurations. Unknown fields are rejected.

use std::fs;
use std::path::Path;

use dqd_tomo::dotmodel::DotParams;
use dqd_tomo::measure::NoiseModel;
use dqd_tomo::qmath::{random_density, DensityMatrix, PureState};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliError};

/// Reads `path` as `T`, or returns `T::default()` when no path is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Dot parameters; `epsilon` is ignored because it is swept.
    pub dot: DotParams,
    #[serde(default = "SpectrumConfig::default_eps_min")]
    pub eps_min: f64,
    #[serde(default = "SpectrumConfig::default_eps_max")]
    pub eps_max: f64,
    #[serde(default = "SpectrumConfig::default_points")]
    pub points: usize,
}

impl SpectrumConfig {
    fn default_eps_min() -> f64 {
        0.0
    }
    fn default_eps_max() -> f64 {
        1.5
    }
    fn default_points() -> usize {
        601
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.dot.validate().map_err(config_err)?;
        if !(self.eps_min.is_finite() && self.eps_max.is_finite() && self.eps_min < self.eps_max) {
            return Err(CliError::Config(format!("need eps_min < eps_max, got {} and {}", self.eps_min, self.eps_max)));
        }
        if self.points < 2 {
            return Err(CliError::Config("points must be at least 2".into()));
        }
        Ok(())
    }
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            dot: DotParams::demo(),
            eps_min: Self::default_eps_min(),
            eps_max: Self::default_eps_max(),
            points: Self::default_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuorumConfig {
    #[serde(default = "default_quorum")]
    pub quorum: String,
}

fn default_quorum() -> String {
    "mub".into()
}

impl Default for QuorumConfig {
    fn default() -> Self {
        Self { quorum: default_quorum() }
    }
}

pub fn build_quorum(name: &str) -> Result<dqd_tomo::quorum::Quorum, CliError> {
    match name {
        "mub" => Ok(dqd_tomo::quorum::mub_quorum()?),
        "james" => Ok(dqd_tomo::quorum::james_quorum()?),
        other => Err(CliError::Config(format!("unknown quorum '{other}' (expected mub or james)"))),
    }
}

/// The true state fed to a tomography run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Singlet,
    UpUp,
    UpDown,
    DownUp,
    DownDown,
    MaximallyMixed,
    /// Random density matrix of the given rank.
    Random { seed: u64, rank: usize },
}

impl StateSpec {
    pub fn build(self) -> Result<DensityMatrix, CliError> {
        Ok(match self {
            StateSpec::Singlet => DensityMatrix::from_pure(&PureState::singlet()),
            StateSpec::UpUp => DensityMatrix::from_pure(&PureState::up_up()),
            StateSpec::UpDown => DensityMatrix::from_pure(&PureState::up_down()),
            StateSpec::DownUp => DensityMatrix::from_pure(&PureState::down_up()),
            StateSpec::DownDown => DensityMatrix::from_pure(&PureState::down_down()),
            StateSpec::MaximallyMixed => DensityMatrix::maximally_mixed(),
            StateSpec::Random { seed, rank } => random_density(seed, rank).map_err(config_err)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    #[serde(default = "TomographyConfig::default_state")]
    pub state: StateSpec,
    #[serde(default = "default_quorum")]
    pub quorum: String,
    #[serde(default = "TomographyConfig::default_shots")]
    pub shots: u64,
    /// Fidelity of degraded measurement projectors.
    #[serde(default)]
    pub fidelity: Option<f64>,
    /// Gate-angle noise; projectors are replaced by Monte Carlo averages.
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub reps: Option<usize>,
    #[serde(default)]
    pub exact: bool,
}

impl TomographyConfig {
    fn default_state() -> StateSpec {
        StateSpec::Singlet
    }
    fn default_shots() -> u64 {
        1000
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.shots == 0 {
            return Err(CliError::Config("shots must be positive".into()));
        }
        if let Some(f) = self.fidelity {
            if !(f > 0.5 && f <= 1.0) {
                return Err(CliError::Config(format!("fidelity must lie in (1/2, 1], got {f}")));
            }
        }
        if let Some(n) = &self.noise {
            n.validate().map_err(config_err)?;
            if self.fidelity.is_some() {
                return Err(CliError::Config("fidelity and noise are mutually exclusive".into()));
            }
            if self.quorum != "mub" {
                return Err(CliError::Config("gate noise needs the circuit-based mub quorum".into()));
            }
        }
        if self.reps == Some(0) {
            return Err(CliError::Config("reps must be positive".into()));
        }
        Ok(())
    }
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            state: Self::default_state(),
            quorum: default_quorum(),
            shots: Self::default_shots(),
            fidelity: None,
            noise: None,
            seed: None,
            reps: None,
            exact: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub delta: Vec<f64>,
    pub p_limit: Vec<f64>,
    pub fidelity: Vec<f64>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            delta: vec![0.01, 0.05, 0.1],
            p_limit: vec![0.01, 0.05],
            fidelity: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0],
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.delta.is_empty() || self.p_limit.is_empty() || self.fidelity.is_empty() {
            return Err(CliError::Config("plan grids must be non-empty".into()));
        }
        if let Some(d) = self.delta.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(CliError::Config(format!("delta must be positive, got {d}")));
        }
        if let Some(p) = self.p_limit.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(CliError::Config(format!("p_limit must lie in (0,1), got {p}")));
        }
        if let Some(f) = self.fidelity.iter().find(|f| !(**f >= 0.0 && **f <= 1.0)) {
            return Err(CliError::Config(format!("fidelity must lie in [0,1], got {f}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_spec_forms() {
        let s: StateSpec = serde_json::from_str(r#""singlet""#).unwrap();
        assert_eq!(s, StateSpec::Singlet);
        let s: StateSpec = serde_json::from_str(r#"{"random":{"seed":3,"rank":2}}"#).unwrap();
        assert_eq!(s, StateSpec::Random { seed: 3, rank: 2 });
        assert!(serde_json::from_str::<StateSpec>(r#""bell""#).is_err());
        assert!(StateSpec::Random { seed: 1, rank: 9 }.build().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<TomographyConfig>(r#"{"shots":10,"shotz":5}"#).is_err());
        assert!(serde_json::from_str::<PlanConfig>(r#"{"delta":[0.1],"p_limit":[0.1],"fidelity":[1],"x":0}"#).is_err());
        assert!(serde_json::from_str::<QuorumConfig>(r#"{"quorum":"mub","extra":true}"#).is_err());
        assert!(serde_json::from_str::<SpectrumConfig>(
            r#"{"dot":{"epsilon":0,"U":1,"t":0.1,"h1":[0,0,0],"h2":[0,0,0],"v":1}}"#
        )
        .is_err());
    }

    #[test]
    fn defaults_fill_missing_fields() {
        let c: TomographyConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, TomographyConfig::default());
        let s: SpectrumConfig =
            serde_json::from_str(r#"{"dot":{"epsilon":0,"U":1,"t":0.0,"h1":[0,0,0],"h2":[0,0,0]}}"#).unwrap();
        assert_eq!(s.points, 601);
    }

    #[test]
    fn validation() {
        let mut c = TomographyConfig { fidelity: Some(0.5), ..Default::default() };
        assert!(c.validate().is_err());
        c.fidelity = Some(0.8);
        assert!(c.validate().is_ok());
        c.noise = Some(NoiseModel::uniform(0.0, 0.01, 10).unwrap());
        assert!(c.validate().is_err());
        assert!(build_quorum("nope").is_err());
        let p = PlanConfig { fidelity: vec![1.2], ..Default::default() };
        assert!(p.validate().is_err());
    }
}
