use std::path::{Path, PathBuf};

use patcharray::em::SolverConfig;
use patcharray::experiments::StudyConfig;
use patcharray::geometry::{ArrayLayout, FeedSpec, PatchDesign, StackUp};
use patcharray::optimizer::{CostWeights, GaConfig, GeneBounds};
use patcharray::simulation::SceneConfig;
use patcharray::Error;
use serde::{Deserialize, Serialize};

/// Frequency window of `simulate` and of the optimized design's final sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepWindow {
    pub f_start: f64,
    pub f_stop: f64,
    pub n_points: usize,
}

impl Default for SweepWindow {
    fn default() -> Self {
        SweepWindow { f_start: 7.5, f_stop: 9.5, n_points: 41 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Objective {
    pub f0: f64,
    pub weights: CostWeights,
    /// Abort when more than this fraction of a generation fails to simulate.
    pub max_failure_fraction: f64,
}

impl Default for Objective {
    fn default() -> Self {
        Objective { f0: 8.55, weights: CostWeights::default(), max_failure_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of every random choice; overrides `optimizer.seed` when set.
    pub seed: Option<u64>,
    pub design: PatchDesign,
    pub layout: ArrayLayout,
    pub feed: Option<FeedSpec>,
    pub stack: StackUp,
    pub solver: SolverConfig,
    pub sweep: SweepWindow,
    pub study: StudyConfig,
    pub optimizer: GaConfig,
    pub bounds: GeneBounds,
    pub objective: Objective,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string().trim_end().to_string()))
    }

    pub fn scene(&self) -> SceneConfig {
        SceneConfig { design: self.design, layout: self.layout, feed: self.feed, stack: self.stack }
    }

    pub fn ga(&self) -> GaConfig {
        GaConfig { seed: self.seed.unwrap_or(self.optimizer.seed), ..self.optimizer.clone() }
    }

    /// Full validation, including a geometry build, before any solver call.
    pub fn validate(&self) -> Result<(), Error> {
        self.scene().build()?;
        self.solver.validate()?;
        let w = &self.sweep;
        if !(w.f_start > 0.0 && w.f_start < w.f_stop) {
            return Err(Error::config("sweep.f_start", format!("need 0 < f_start < f_stop (got {}, {})", w.f_start, w.f_stop)));
        }
        if w.n_points < 2 {
            return Err(Error::config("sweep.n_points", format!("must be >= 2 (got {})", w.n_points)));
        }
        self.study.validate()?;
        self.ga().validate().map_err(|m| Error::config("optimizer", m))?;
        self.bounds.validate().map_err(|m| Error::config("bounds", m))?;
        if self.bounds.dim() != 5 {
            return Err(Error::config("bounds", "needs five genes (w, l, ins, h1, h2)"));
        }
        let o = &self.objective;
        if !(o.f0 > 0.0) {
            return Err(Error::config("objective.f0", "must be > 0"));
        }
        if !(o.weights.reflection >= 0.0 && o.weights.coupling >= 0.0) {
            return Err(Error::config("objective.weights", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&o.max_failure_fraction) {
            return Err(Error::config("objective.max_failure_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs serialize to TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
        assert_eq!(c.design, PatchDesign::BASELINE);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::parse("[design]\nwidth = 3.0\n").unwrap_err();
        assert!(e.to_string().contains("width"), "{e}");
        assert!(RunConfig::parse("colour = 1\n").is_err());
        assert!(RunConfig::parse("[solver]\nquad = 3\n").is_err());
    }

    #[test]
    fn roundtrips_through_toml() {
        let mut c = RunConfig::default();
        c.design = PatchDesign::PUBLISHED_OPTIMUM;
        c.seed = Some(7);
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn geometry_bounds_are_named() {
        let c = RunConfig::parse("[design]\nh1 = 4.725\n").unwrap();
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("design.h1"), "{e}");
    }

    #[test]
    fn example_config_parses() {
        let text = include_str!("../../../patcharray.example.toml");
        let c = RunConfig::parse(text).unwrap();
        c.validate().unwrap();
    }
}
