use serde::{Deserialize, Serialize};

use crate::catalog::{catalog_entry, scenario_entry};
use crate::error::{Error, Result};
use crate::expr::Function;
use crate::geometry::ComplexPoint;
use crate::pipeline::{PipelineParams, Scenario};
use crate::singular_sets::SingularSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Certify,
    Envelope,
    Abp,
    Extend,
    Catalog,
    DemoCounterexample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    One(f64),
    Many(Vec<f64>),
}

impl DeltaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            DeltaSpec::One(d) => vec![*d],
            DeltaSpec::Many(ds) => ds.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: Option<usize>,
    pub delta: Option<DeltaSpec>,
    pub points_per_axis: Option<usize>,
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub json: Option<String>,
    pub csv: Option<String>,
    #[serde(default)]
    pub verbosity: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// Catalog entry, scenario name, or closed-form expression.
    pub target: Option<String>,
    #[serde(default)]
    pub grid: GridConfig,
    /// Singular set for the psh-off test or the inline scenario.
    pub set: Option<SingularSet>,
    /// Inline scenario for `extend` and `abp`.
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub params: PipelineParams,
    #[serde(default)]
    pub output: OutputConfig,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            target: None,
            grid: GridConfig::default(),
            set: None,
            scenario: None,
            params: PipelineParams::default(),
            output: OutputConfig::default(),
            seed: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(self.params.seed)
    }

    /// Range checks that serde cannot express; errors name the field path.
    pub fn validate(&self) -> Result<()> {
        let field = |path: &str, msg: String| Err(Error::Config(format!("{path}: {msg}")));
        if let Some(n) = self.grid.n {
            if n == 0 || n > 4 {
                return field(
                    "grid.n",
                    format!("complex dimension must be between 1 and 4, got {n}"),
                );
            }
        }
        if let Some(p) = self.grid.points_per_axis {
            if p % 2 == 0 {
                return field(
                    "grid.points_per_axis",
                    format!("must be odd so the center is a node, got {p}"),
                );
            }
            if p < 5 {
                return field(
                    "grid.points_per_axis",
                    format!("must be at least 5, got {p}"),
                );
            }
        }
        if let Some(d) = &self.grid.delta {
            let ds = d.values();
            if ds.is_empty() || ds.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                return field("grid.delta", "must be positive and finite".into());
            }
        }
        if let (Some(c), Some(n)) = (&self.grid.center, self.grid.n) {
            if c.len() != 2 * n {
                return field(
                    "grid.center",
                    format!("needs {} coordinates, got {}", 2 * n, c.len()),
                );
            }
        }
        if self.params.m < 8 {
            return field(
                "params.m",
                format!("need at least 8 quadrature nodes, got {}", self.params.m),
            );
        }
        match self.command {
            Command::Certify | Command::Envelope => {
                if self.target.is_none() && self.scenario.is_none() {
                    return field("target", "required for this command".into());
                }
            }
            Command::Extend | Command::Abp => {
                if self.target.is_none() && self.scenario.is_none() {
                    return field(
                        "target",
                        "give a scenario name or an inline scenario".into(),
                    );
                }
            }
            Command::Catalog | Command::DemoCounterexample => {}
        }
        if let Some(t) = &self.target {
            match self.command {
                Command::Extend | Command::Abp if self.scenario.is_none() => {
                    let n = self.grid.n.unwrap_or(2);
                    if scenario_entry(t, n).is_none() {
                        return field("target", format!("unknown scenario {t:?}"));
                    }
                }
                Command::Catalog => {
                    if catalog_entry(t).is_none() {
                        return field("target", format!("unknown catalog entry {t:?}"));
                    }
                }
                Command::Certify | Command::Envelope
                    if catalog_entry(t).is_none() && scenario_entry(t, 1).is_none() =>
                {
                    Function::parse(t).map_err(|e| Error::Config(format!("target: {e}")))?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn center(&self, n: usize) -> Result<ComplexPoint> {
        match &self.grid.center {
            Some(c) => ComplexPoint::new(c.clone()),
            None => Ok(ComplexPoint::origin(n)),
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
