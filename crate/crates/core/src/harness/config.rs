//! TOML run configuration. Unknown keys are errors so a misspelled
//! hypothesis field can never be silently ignored.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::Grid;
use crate::problem::{self, ClosedCoefficient, CoefficientDescriptor, Domain1D, InitialDatum, Modulation, ProblemSpec, TimeProfile};
use crate::timestepper::StepControl;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema_version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// `amplitude · e^{rate t} (1+t)^alpha ln^beta(e+t)` times a spatial modulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub amplitude: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub modulation: Modulation,
    #[serde(default = "unit_weights")]
    pub endpoint_weights: [f64; 2],
}

fn unit_weights() -> [f64; 2] {
    [1.0, 1.0]
}

impl CoefficientConfig {
    pub fn constant(amplitude: f64) -> Self {
        CoefficientConfig { amplitude, rate: 0.0, alpha: 0.0, beta: 0.0, modulation: Modulation::Uniform, endpoint_weights: [1.0, 1.0] }
    }

    pub fn descriptor(&self) -> CoefficientDescriptor {
        CoefficientDescriptor::Closed(ClosedCoefficient {
            profile: TimeProfile { amplitude: self.amplitude, rate: self.rate, alpha: self.alpha, beta: self.beta },
            modulation: self.modulation,
            endpoint_weights: self.endpoint_weights,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumConfig {
    Constant { value: f64 },
    /// `mean + amplitude·cos(πx/L)`
    Cosine { mean: f64, amplitude: f64 },
    /// `scale · ((x² − Lx)/2 + additive_constant)`
    PsiProfile { additive_constant: f64, scale: f64 },
}

impl DatumConfig {
    pub fn datum(&self) -> InitialDatum {
        match *self {
            DatumConfig::Constant { value } => InitialDatum::Constant(value),
            DatumConfig::Cosine { mean, amplitude } => InitialDatum::Cosine { mean, amplitude },
            DatumConfig::PsiProfile { additive_constant, scale } => InitialDatum::PsiProfile { additive_constant, scale },
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            DatumConfig::Constant { value } => DatumConfig::Constant { value: value * factor },
            DatumConfig::Cosine { mean, amplitude } => DatumConfig::Cosine { mean: mean * factor, amplitude: amplitude * factor },
            DatumConfig::PsiProfile { additive_constant, scale } => DatumConfig::PsiProfile { additive_constant, scale: scale * factor },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    pub l: f64,
    #[serde(default = "unit_length")]
    pub length: f64,
    pub c: CoefficientConfig,
    pub k: CoefficientConfig,
    pub u0: DatumConfig,
}

fn unit_length() -> f64 {
    1.0
}

impl ProblemConfig {
    pub fn constant(p: f64, l: f64, c: f64, k: f64, u0: f64) -> Self {
        ProblemConfig {
            p,
            l,
            length: 1.0,
            c: CoefficientConfig::constant(c),
            k: CoefficientConfig::constant(k),
            u0: DatumConfig::Constant { value: u0 },
        }
    }

    pub fn spec(&self) -> Result<ProblemSpec, ConfigError> {
        let domain = Domain1D::new(self.length).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(ProblemSpec { p: self.p, l: self.l, c: self.c.descriptor(), k: self.k.descriptor(), u0: self.u0.datum(), domain })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 400 }
    }
}

/// Which certificates to build and check against the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CertificateRequest {
    /// Every builder whose hypotheses match `(p, l)`.
    Auto,
    Eigen,
    BoundaryLayer,
    OdeSub,
    SmallData { tau: f64, additive_constant: f64 },
    BoundedRatio,
    PsiSub { span: f64 },
    Traveling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    /// `m` in `W(t) = e^{-t/m} U(t)`; defaults to `L²/4`.
    pub m: Option<f64>,
    pub localization_ratio: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig { m: None, localization_ratio: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub csv: bool,
    /// Rows of the functional series kept in the JSON record.
    pub max_series_rows: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, csv: true, max_series_rows: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    pub horizon: f64,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub control: StepControl,
    #[serde(default)]
    pub certificates: Vec<CertificateRequest>,
    #[serde(default)]
    pub monitors: MonitorConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_name() -> String {
    "run".to_string()
}

impl RunConfig {
    pub fn new(name: &str, problem: ProblemConfig, n: usize, horizon: f64) -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            horizon,
            problem,
            grid: GridConfig { n },
            control: StepControl::default(),
            certificates: Vec::new(),
            monitors: MonitorConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs serialize")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion { found: self.schema_version, expected: SCHEMA_VERSION });
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(ConfigError::Invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.grid.n < 8 {
            return Err(ConfigError::Invalid(format!("grid.n must be at least 8, got {}", self.grid.n)));
        }
        self.control.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        problem::validate(&self.spec()?).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn spec(&self) -> Result<ProblemSpec, ConfigError> {
        self.problem.spec()
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.n, self.problem.length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
horizon = 0.5

[problem]
p = 1.0
l = 1.0
c = { amplitude = 0.0 }
k = { amplitude = 0.0 }
u0 = { kind = "cosine", mean = 1.0, amplitude = 0.5 }
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.name, "run");
        assert_eq!(cfg.grid.n, 400);
        assert_eq!(cfg.control, StepControl::default());
        assert_eq!(cfg.problem.length, 1.0);
        assert!(cfg.certificates.is_empty());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        cfg.certificates = vec![CertificateRequest::Eigen, CertificateRequest::SmallData { tau: 1.0, additive_constant: 0.25 }];
        cfg.problem.k.modulation = Modulation::Cosine { depth: 0.5 };
        let back = RunConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("l = 1.0", "l = 1.0\nell = 2.0");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(ConfigError::Parse(_))));
        let bad = MINIMAL.replace("amplitude = 0.0 }\nk", "amplitude = 0.0, rte = 1.0 }\nk");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = MINIMAL.replace("schema_version = 1", "schema_version = 7");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(ConfigError::SchemaVersion { found: 7, .. })));
        let bad = MINIMAL.replace("horizon = 0.5", "horizon = -1.0");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(ConfigError::Invalid(_))));
        let bad = MINIMAL.replace("p = 1.0", "p = -1.0");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(ConfigError::Invalid(_))));
        let bad = MINIMAL.replace("mean = 1.0", "mean = 0.1");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(ConfigError::Invalid(_))));
    }
}
