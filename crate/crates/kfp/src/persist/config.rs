//! TOML run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fnv1a, PersistError};
use crate::cell::CorrectorOptions;
use crate::experiments::HomExperimentConfig;
use crate::hetpoly::ScanOptions;
use crate::langevin::{HistogramSpec, LangevinConfig};
use crate::poly::SelfTestConfig;
use crate::spectral::{CosineTerm, Friction, FrictionTerm, Model, Potential};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub dim: usize,
    /// Cosine terms `amplitude * cos(2 pi k.x + phase)` of the potential.
    #[serde(default)]
    pub potential: Vec<CosineTerm>,
    /// Mean friction matrix; identity when absent.
    #[serde(default)]
    pub friction: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub friction_terms: Vec<FrictionTerm>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            dim: 1,
            potential: Vec::new(),
            friction: None,
            friction_terms: Vec::new(),
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model, PersistError> {
        let potential = Potential::new(self.dim, self.potential.clone())?;
        let mean = self.friction.clone().unwrap_or_else(|| Friction::identity(self.dim).mean_rows().to_vec());
        let friction = Friction::new(mean, self.friction_terms.clone())?;
        Ok(Model::new(potential, friction)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellSpec {
    pub order: u32,
    pub nx: usize,
    pub nv: usize,
    pub tol: f64,
}

impl Default for CellSpec {
    fn default() -> Self {
        CellSpec {
            order: 2,
            nx: 16,
            nv: 64,
            tol: 1e-10,
        }
    }
}

impl CellSpec {
    pub fn options(&self) -> CorrectorOptions {
        CorrectorOptions::new(self.order, self.nx, self.nv).with_tol(self.tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSpec {
    pub n_traj: usize,
    pub t_final: f64,
    pub batches: usize,
    pub record_every: f64,
    /// Step size; the largest stable step dividing one when absent.
    pub dt: Option<f64>,
    pub histogram: HistogramSpec,
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec {
            n_traj: 10_000,
            t_final: 20.0,
            batches: 50,
            record_every: 1.0,
            dt: None,
            histogram: HistogramSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogSpec {
    pub times: Vec<f64>,
    pub t0: Vec<f64>,
    pub n_traj: usize,
    pub batches: usize,
    pub record_every: f64,
    pub histogram: HistogramSpec,
}

impl Default for HomogSpec {
    fn default() -> Self {
        let base = HomExperimentConfig::standard(100_000, 0);
        HomogSpec {
            times: base.times,
            t0: base.t0,
            n_traj: base.n_traj,
            batches: base.batches,
            record_every: base.record_every,
            histogram: base.histogram,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularitySpec {
    /// Approximant degrees; each is compared with a target one degree higher.
    pub degrees: Vec<u32>,
    /// Smallest radius is `c * m + 2`.
    pub c: f64,
    pub outer: usize,
    pub solutions: bool,
}

impl Default for RegularitySpec {
    fn default() -> Self {
        RegularitySpec {
            degrees: vec![0, 1, 2],
            c: 8.0,
            outer: 256,
            solutions: true,
        }
    }
}

/// Everything a command needs. All sections have defaults, so an empty file
/// is the free one-dimensional model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory, relative to the working directory.
    pub out: String,
    pub model: ModelSpec,
    pub cells: CellSpec,
    pub mc: McSpec,
    pub homog: HomogSpec,
    pub regularity: RegularitySpec,
    pub selftest: SelfTestConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: "results".into(),
            model: ModelSpec::default(),
            cells: CellSpec::default(),
            mc: McSpec::default(),
            homog: HomogSpec::default(),
            regularity: RegularitySpec::default(),
            selftest: SelfTestConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self, PersistError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| PersistError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PersistError> {
        let text = std::fs::read_to_string(path).map_err(|e| PersistError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// FNV-1a of the canonical TOML form, leaving out the output directory.
    pub fn hash(&self) -> u64 {
        let keyed = RunConfig {
            out: String::new(),
            ..self.clone()
        };
        fnv1a(keyed.to_toml().as_bytes())
    }

    /// Builds the model, which checks positivity of the friction and the
    /// shape of every term.
    pub fn validate(&self) -> Result<(), PersistError> {
        self.model.build()?;
        let bad = |m: String| Err(PersistError::Config(m));
        if self.cells.order < 1 || self.cells.nv < 1 {
            return bad("cells.order and cells.nv must be at least one".into());
        }
        if !(self.cells.tol > 0.0) {
            return bad(format!("cells.tol must be positive, got {}", self.cells.tol));
        }
        if self.mc.n_traj == 0 || self.mc.batches == 0 || !(self.mc.t_final > 0.0) || !(self.mc.record_every > 0.0) {
            return bad("mc budget entries must be positive".into());
        }
        if let Some(dt) = self.mc.dt {
            if !(dt > 0.0) {
                return bad(format!("mc.dt must be positive, got {dt}"));
            }
        }
        self.homog_config().validate().or_else(|e| bad(format!("homog: {e}")))?;
        if self.regularity.outer < 16 {
            return bad("regularity.outer must be at least 16".into());
        }
        Ok(())
    }

    pub fn langevin(&self, model: &Model) -> LangevinConfig {
        let mut cfg = LangevinConfig::for_model(model, self.mc.t_final, self.mc.n_traj, self.seed);
        if let Some(dt) = self.mc.dt {
            cfg.dt = dt;
        }
        cfg.batches = self.mc.batches.min(self.mc.n_traj);
        cfg.record_every = self.mc.record_every;
        cfg.histogram = self.mc.histogram;
        cfg
    }

    pub fn homog_config(&self) -> HomExperimentConfig {
        HomExperimentConfig {
            times: self.homog.times.clone(),
            t0: self.homog.t0.clone(),
            n_traj: self.homog.n_traj,
            seed: self.seed,
            batches: self.homog.batches,
            record_every: self.homog.record_every,
            histogram: self.homog.histogram,
        }
    }

    pub fn scan_options(&self, degree: u32) -> ScanOptions {
        let mut opts = ScanOptions::standard(degree, self.regularity.c, self.regularity.outer, self.seed);
        opts.solutions = self.regularity.solutions;
        opts
    }
}
