//! Declarative scenario configuration (TOML key-tree).
//!
//! One document drives every pipeline stage; the schema is validated
//! before any computation and unknown keys are rejected, so a run is
//! reproducible from its config file alone.  Sections beyond
//! `[background]` are optional and only required by the subcommands that
//! reference them.

use serde::{Deserialize, Serialize};

use crate::barriers::BarrierParams;
use crate::error::{Error, Result};
use crate::flow::{BoxSpec, ForcingProfile, ForcingSpec};
use crate::geometry::{make_cylinder, make_gaussian, make_rounded_cone, Background};
use crate::grid::RadialGrid;
use crate::shooting::ShootConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Defaults to 0 (Gaussian/rounded cone) or −r_max (cylinder).
    pub r_min: Option<f64>,
    pub r_max: f64,
    #[serde(rename = "N")]
    pub n_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundConfig {
    /// "gaussian" | "cylinder" | "rounded_cone"
    pub kind: String,
    /// total dimension (Gaussian)
    pub n: Option<usize>,
    /// link sphere dimension (cylinder)
    pub k: Option<usize>,
    /// opening scale (rounded cone)
    pub r1: Option<f64>,
    /// link curvature (rounded cone), defaults to 1
    pub c_link: Option<f64>,
    pub grid: GridConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub m_modes: usize,
    pub lambda_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "Gamma0")]
    pub gamma0: f64,
    /// "off" | "angular_bump"
    pub profile: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub dtau: f64,
    pub tau0: f64,
    pub tau_max: f64,
    pub forcing: Option<ForcingConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub mu_u: f64,
    pub mu_s: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShootingConfig {
    pub p_bar: f64,
    pub gamma0: f64,
    #[serde(rename = "K_active")]
    pub k_active: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// trajectory sampling stride
    pub stride: Option<usize>,
    /// subset of {"csv", "json"}; both when omitted
    pub formats: Option<Vec<String>>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            stride: None,
            formats: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub background: BackgroundConfig,
    pub operator: Option<OperatorConfig>,
    pub flow: Option<FlowConfig>,
    #[serde(rename = "box")]
    pub box_: Option<BoxConfig>,
    pub shooting: Option<ShootingConfig>,
    pub barriers: Option<BarrierParams>,
    pub output: Option<OutputConfig>,
}

impl ScenarioConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config serialize: {e}")))
    }

    pub fn build_background(&self) -> Result<Background> {
        let b = &self.background;
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| Error::Config(format!("background.{what} required for {}", b.kind)))
        };
        match b.kind.as_str() {
            "gaussian" => {
                let n = b
                    .n
                    .ok_or_else(|| Error::Config("background.n required for gaussian".into()))?;
                let grid = RadialGrid::uniform(
                    b.grid.r_min.unwrap_or(0.0),
                    b.grid.r_max,
                    b.grid.n_nodes,
                )?;
                make_gaussian(n, grid)
            }
            "cylinder" => {
                let k = b
                    .k
                    .ok_or_else(|| Error::Config("background.k required for cylinder".into()))?;
                let grid = RadialGrid::uniform(
                    b.grid.r_min.unwrap_or(-b.grid.r_max),
                    b.grid.r_max,
                    b.grid.n_nodes,
                )?;
                make_cylinder(k, grid)
            }
            "rounded_cone" => {
                let r1 = need(b.r1, "r1")?;
                let grid = RadialGrid::uniform(
                    b.grid.r_min.unwrap_or(0.01 * r1),
                    b.grid.r_max,
                    b.grid.n_nodes,
                )?;
                make_rounded_cone(b.c_link.unwrap_or(1.0), r1, grid)
            }
            other => Err(Error::Config(format!("unknown background kind '{other}'"))),
        }
    }

    pub fn operator(&self) -> Result<&OperatorConfig> {
        self.operator
            .as_ref()
            .ok_or_else(|| Error::Config("missing [operator] section".into()))
    }

    pub fn flow(&self) -> Result<&FlowConfig> {
        self.flow
            .as_ref()
            .ok_or_else(|| Error::Config("missing [flow] section".into()))
    }

    pub fn boxspec(&self) -> Result<BoxSpec> {
        let b = self
            .box_
            .as_ref()
            .ok_or_else(|| Error::Config("missing [box] section".into()))?;
        let f = self.flow()?;
        let spec = BoxSpec {
            lambda_star: self.operator()?.lambda_star,
            mu_u: b.mu_u,
            mu_s: b.mu_s,
            eps0: b.eps0,
            eps1: b.eps1,
            eps2: b.eps2,
            tau0: f.tau0,
            tau_max: f.tau_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn forcing(&self) -> Result<ForcingSpec> {
        let spec = match self.flow()?.forcing.as_ref() {
            None => ForcingSpec::default(),
            Some(fc) => ForcingSpec {
                c0: fc.c0,
                gamma0: fc.gamma0,
                profile: match fc.profile.as_str() {
                    "off" => ForcingProfile::Off,
                    "angular_bump" => ForcingProfile::AngularBump,
                    other => {
                        return Err(Error::Config(format!("unknown forcing profile '{other}'")))
                    }
                },
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn shoot_config(&self) -> Result<ShootConfig> {
        let s = self
            .shooting
            .as_ref()
            .ok_or_else(|| Error::Config("missing [shooting] section".into()))?;
        let cfg = ShootConfig {
            p_bar: s.p_bar,
            gamma0: s.gamma0,
            boxspec: self.boxspec()?,
            forcing: self.forcing()?,
            dtau: self.flow()?.dtau,
            k_active: s.k_active,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn barriers(&self) -> Result<&BarrierParams> {
        self.barriers
            .as_ref()
            .ok_or_else(|| Error::Config("missing [barriers] section".into()))
    }

    pub fn output(&self) -> OutputConfig {
        self.output.clone().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[background]
kind = "cylinder"
k = 2
[background.grid]
r_max = 24.0
N = 801

[operator]
m_modes = 6
lambda_star = -0.25

[flow]
dtau = 2e-3
tau0 = 4.0
tau_max = 24.0
[flow.forcing]
C0 = 1.0
Gamma0 = 100.0
profile = "angular_bump"

[box]
mu_u = 1e-2
mu_s = 1e-2
eps0 = 5e-2
eps1 = 5e-2
eps2 = 5e-2

[shooting]
p_bar = 2.5e-2
gamma0 = 0.9
K_active = 2

[output]
dir = "out"
stride = 25
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ScenarioConfig::from_str(SAMPLE).unwrap();
        let bg = cfg.build_background().unwrap();
        assert_eq!(bg.dim, 3);
        assert_eq!(bg.grid.len(), 801);
        assert_eq!(cfg.operator().unwrap().m_modes, 6);
        let bs = cfg.boxspec().unwrap();
        assert_eq!(bs.tau0, 4.0);
        let sc = cfg.shoot_config().unwrap();
        assert_eq!(sc.k_active, 2);
        assert_eq!(sc.forcing.c0, 1.0);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ScenarioConfig::from_str(SAMPLE).unwrap();
        let text = cfg.to_toml_string().unwrap();
        let cfg2 = ScenarioConfig::from_str(&text).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SAMPLE.replace("stride = 25", "stride = 25\nbogus = 1");
        assert!(ScenarioConfig::from_str(&bad).is_err());
        let bad2 = format!("{SAMPLE}\n[extra]\nx = 1\n");
        assert!(ScenarioConfig::from_str(&bad2).is_err());
    }

    #[test]
    fn missing_sections_reported() {
        let minimal = r#"
[background]
kind = "gaussian"
n = 3
[background.grid]
r_max = 30.0
N = 1501
"#;
        let cfg = ScenarioConfig::from_str(minimal).unwrap();
        cfg.build_background().unwrap();
        assert!(matches!(cfg.boxspec(), Err(Error::Config(_))));
        assert!(matches!(cfg.shoot_config(), Err(Error::Config(_))));
        assert!(matches!(cfg.barriers(), Err(Error::Config(_))));
    }
}
