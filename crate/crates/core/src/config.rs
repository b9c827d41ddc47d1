//! Run configuration, read from TOML or JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expmap::{Profile, FLOW_TOL};
use crate::geometry::{ModelKind, ModelParams};
use crate::verify::CHECK_NAMES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub symbol: SymbolConfig,
    #[serde(default)]
    pub cutoff: CutoffConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub suite: SuiteConfig,
    /// Per-check tolerance overrides, keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub suspended: SuspendedConfig,
    #[serde(default)]
    pub semiclassical: SemiclassicalConfig,
}

fn default_seed() -> u64 {
    7
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("lieq-out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            out_dir: default_out_dir(),
            geometry: GeometryConfig::default(),
            symbol: SymbolConfig::default(),
            cutoff: CutoffConfig::default(),
            flow: FlowConfig::default(),
            suite: SuiteConfig::default(),
            tolerances: BTreeMap::new(),
            suspended: SuspendedConfig::default(),
            semiclassical: SemiclassicalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub kind: ModelKind,
    pub n: usize,
    /// Half-width `L` of the straightened window (line models).
    pub window: f64,
    pub scattering_c: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            kind: ModelKind::Circle,
            n: p.n,
            window: p.window,
            scattering_c: p.scattering_c,
        }
    }
}

impl GeometryConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            n: self.n,
            window: self.window,
            scattering_c: self.scattering_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolConfig {
    /// Registry name, e.g. `"xi"` or `"jbracket_pow:-2"`.
    pub name: String,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        Self { name: "xi".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutoffConfig {
    /// Defaults to `min(r₀/2, 1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub profile: Profile,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            r: None,
            profile: Profile::Smooth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { tol: FLOW_TOL }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    /// Checks to run; all of them when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuspendedConfig {
    pub z_period: f64,
    pub n_z: usize,
}

impl Default for SuspendedConfig {
    fn default() -> Self {
        Self {
            z_period: 20.0,
            n_z: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemiclassicalConfig {
    pub t_ladder: Vec<f64>,
}

impl Default for SemiclassicalConfig {
    fn default() -> Self {
        Self {
            t_ladder: vec![1.0, 0.5, 0.25, 0.125],
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`; `.json` files are parsed as JSON, everything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Names of the selected checks, in suite order.
    pub fn selected_checks(&self) -> Vec<&'static str> {
        match &self.suite.checks {
            None => CHECK_NAMES.to_vec(),
            Some(list) => CHECK_NAMES
                .iter()
                .copied()
                .filter(|c| list.iter().any(|n| n == c))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unknown = |name: &String| !CHECK_NAMES.contains(&name.as_str());
        if let Some(bad) = self.suite.checks.iter().flatten().find(|n| unknown(n)) {
            return Err(Error::UnknownCheck(bad.clone()));
        }
        if let Some(bad) = self.tolerances.keys().find(|n| unknown(n)) {
            return Err(Error::UnknownCheck(bad.clone()));
        }
        if self.tolerances.values().any(|t| t.is_nan()) {
            return Err(Error::InvalidParameter("NaN tolerance".into()));
        }
        if self.geometry.n < 16 {
            return Err(Error::InvalidParameter(format!("geometry.n = {} < 16", self.geometry.n)));
        }
        if !(self.flow.tol > 0.0) {
            return Err(Error::InvalidParameter("flow.tol must be positive".into()));
        }
        if self.suspended.n_z < 2 || !(self.suspended.z_period > 0.0) {
            return Err(Error::NonUniformGroupGrid);
        }
        if self.semiclassical.t_ladder.len() < 2 || self.semiclassical.t_ladder.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::InvalidParameter("semiclassical.t_ladder needs ≥ 2 values in (0, 1]".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.selected_checks().len(), CHECK_NAMES.len());
        let mut custom = cfg.clone();
        custom.geometry.kind = ModelKind::ScLine;
        custom.cutoff.r = Some(0.75);
        custom.suite.checks = Some(vec!["identity".into(), "sobolev".into()]);
        custom.tolerances.insert("identity".into(), 1e-9);
        let text = custom.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), custom);
        let json = custom.to_json_string().unwrap();
        assert_eq!(RunConfig::from_json_str(&json).unwrap(), custom);
    }

    #[test]
    fn parses_the_documented_schema() {
        let text = r#"
            seed = 42
            out_dir = "out"
            [geometry]
            kind = "b_interval"
            n = 64
            window = 6.0
            [symbol]
            name = "jbracket_pow:-2"
            [cutoff]
            r = 0.5
            profile = "smooth"
            [flow]
            tol = 1e-9
            [suite]
            checks = ["identity"]
            [tolerances]
            identity = 0.0
            [suspended]
            z_period = 10.0
            n_z = 8
            [semiclassical]
            t_ladder = [1.0, 0.5]
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.geometry.kind, ModelKind::BInterval);
        assert_eq!(cfg.selected_checks(), vec!["identity"]);
        assert_eq!(cfg.tolerances["identity"], 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::from_toml_str("bogus = 1"), Err(Error::Parse(_))));
        assert!(RunConfig::from_toml_str("[geometry]\ncolour = 1").is_err());
        assert!(RunConfig::from_toml_str("[geometry]\nkind = \"torus\"").is_err());
        assert!(matches!(
            RunConfig::from_toml_str("[suite]\nchecks = [\"nope\"]"),
            Err(Error::UnknownCheck(_))
        ));
        assert!(RunConfig::from_toml_str("[semiclassical]\nt_ladder = [0.0, 1.0]").is_err());
        assert!(RunConfig::from_json_str("{").is_err());
    }

    #[test]
    fn empty_selection_is_empty() {
        let cfg = RunConfig::from_toml_str("[suite]\nchecks = []").unwrap();
        assert!(cfg.selected_checks().is_empty());
    }
}
