//! Run configuration read from TOML.
//!
//! ```toml
//! [model]
//! kind = "glacial"                 # or "synthetic"
//! preset = "section4-reproduction"
//! free_parameter = "t_plus"        # glacial only: t_plus or t_minus
//! [model.overrides]                # optional, any glacial constant
//! rho = 0.1
//!
//! [surface]                        # optional, overrides a and b
//! a = 1.05
//! b = 1.75
//!
//! [bifurcation]
//! seed_grid = { y = [-1.0, 1.2], z = [-1.0, 1.2], n = 12 }
//! seeds = [[5.08, 0.95, 0.92, -10.0]]
//! point = { x0 = 5.081, y0 = 0.9488, z0 = 0.918, param_value = -10.02 }
//! epsilons = [1e-3, 1e-4]
//!
//! [integration]                    # any IntegrateOptions field, plus:
//! t_max_periods = 200.0
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bifurcation::{seed_grid, Seed};
use crate::error::{Error, Result};
use crate::glacial::{FreeParam, GlacialFamily, GlacialParams};
use crate::integrator::IntegrateOptions;
use crate::psys::ParamFamily;
use crate::synthetic::{SyntheticFamily, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Glacial,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub preset: String,
    #[serde(default)]
    pub free_parameter: Option<String>,
    /// Partial overrides of the preset's constants (glacial) or fields
    /// (synthetic).
    #[serde(default)]
    pub overrides: Option<toml::Table>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedGrid {
    pub y: [f64; 2],
    pub z: [f64; 2],
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub param_value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcationSection {
    #[serde(default)]
    pub seed_grid: Option<SeedGrid>,
    #[serde(default)]
    pub seeds: Vec<[f64; 4]>,
    #[serde(default)]
    pub point: Option<PointSpec>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationSection {
    #[serde(flatten)]
    pub options: IntegrateOptions,
    /// Simulation horizon in predicted periods.
    pub t_max_periods: f64,
    /// Absolute horizon; overrides `t_max_periods` when set.
    pub t_max: Option<f64>,
}

impl Default for IntegrationSection {
    fn default() -> Self {
        IntegrationSection { options: IntegrateOptions::default(), t_max_periods: 200.0, t_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub surface: Option<SurfaceSection>,
    #[serde(default)]
    pub bifurcation: BifurcationSection,
    #[serde(default)]
    pub integration: IntegrationSection,
}

/// The model a configuration resolves to.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResolvedModel {
    Glacial { params: GlacialParams, free_parameter: FreeParam },
    Synthetic { spec: SyntheticSpec },
}

impl ResolvedModel {
    pub fn family(&self) -> Result<Box<dyn ParamFamily>> {
        Ok(match self {
            ResolvedModel::Glacial { params, free_parameter } => {
                Box::new(GlacialFamily::new(params.clone(), *free_parameter)?)
            }
            ResolvedModel::Synthetic { spec } => Box::new(SyntheticFamily { spec: spec.clone() }),
        })
    }
}

fn merge<T: Serialize + for<'de> Deserialize<'de>>(base: &T, overrides: &toml::Table, what: &str) -> Result<T> {
    let mut value = toml::Table::try_from(base).map_err(|e| Error::Config(format!("{what}: {e}")))?;
    for (k, v) in overrides {
        value.insert(k.clone(), v.clone());
    }
    toml::Value::Table(value)
        .try_into()
        .map_err(|e| Error::Config(format!("{what} overrides: {e}")))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: PathBuf::from(path), source })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.bifurcation.seed_grid {
            if g.n == 0 {
                return Err(Error::Config("bifurcation.seed_grid.n must be at least 1".into()));
            }
        }
        for e in &self.bifurcation.epsilons {
            if !(*e > 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("epsilon must be positive, got {e}")));
            }
        }
        let t = &self.integration;
        if !(t.t_max_periods > 0.0) || t.t_max.is_some_and(|v| !(v > 0.0)) {
            return Err(Error::Config("integration horizon must be positive".into()));
        }
        if !(t.options.rtol > 0.0 && t.options.atol > 0.0 && t.options.event_tol > 0.0) {
            return Err(Error::Config("integration tolerances must be positive".into()));
        }
        self.resolve_model()?;
        Ok(())
    }

    pub fn resolve_model(&self) -> Result<ResolvedModel> {
        let m = &self.model;
        match m.kind {
            ModelKind::Glacial => {
                let mut params = GlacialParams::preset(&m.preset)?;
                if let Some(o) = &m.overrides {
                    params = merge(&params, o, "glacial")?;
                }
                if let Some(s) = self.surface {
                    params.a = s.a;
                    params.b = s.b;
                }
                params.validate()?;
                let name = m.free_parameter.as_deref().unwrap_or("t_plus");
                let free_parameter = FreeParam::parse(name)
                    .ok_or_else(|| Error::Config(format!("unknown free parameter '{name}' (expected t_plus or t_minus)")))?;
                Ok(ResolvedModel::Glacial { params, free_parameter })
            }
            ModelKind::Synthetic => {
                if let Some(name) = &m.free_parameter {
                    if name != "shift" {
                        return Err(Error::Config(format!("synthetic models free 'shift', not '{name}'")));
                    }
                }
                let mut spec = SyntheticSpec::preset(&m.preset)?;
                if let Some(o) = &m.overrides {
                    spec = merge(&spec, o, "synthetic")?;
                }
                if let Some(s) = self.surface {
                    spec.a = s.a;
                    spec.b = s.b;
                }
                spec.build()?;
                Ok(ResolvedModel::Synthetic { spec })
            }
        }
    }

    /// Explicit seeds followed by the grid seeds.
    pub fn seeds(&self, family: &dyn ParamFamily) -> Result<Vec<Seed>> {
        let b = &self.bifurcation;
        let mut out: Vec<Seed> = b.seeds.iter().map(|s| Seed { x: s[0], y: s[1], z: s[2], param: s[3] }).collect();
        if let Some(g) = b.seed_grid {
            out.extend(seed_grid(family, (g.y[0], g.y[1]), (g.z[0], g.z[1]), g.n));
        }
        if out.is_empty() {
            return Err(Error::Config("no seeds: give bifurcation.seeds or bifurcation.seed_grid".into()));
        }
        Ok(out)
    }
}
