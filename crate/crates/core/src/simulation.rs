//! Scene description plus cached frequency sweeps: the entry point used by
//! the studies, the optimizer and the command line.

use serde::{Deserialize, Serialize};

use crate::cache::{content_hash, ResultCache, CACHE_VERSION};
use crate::em::{solve_frequencies, MomProblem, SParamRow, SParamTable, SolverConfig};
use crate::error::{GeometryError, Result};
use crate::geometry::{build_scene, ArrayLayout, FeedSpec, PatchDesign, SceneGeometry, StackUp};

/// Everything needed to build the array geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub design: PatchDesign,
    pub layout: ArrayLayout,
    /// Feed line; synthesized from the stack-up (50 ohm strip) when absent.
    pub feed: Option<FeedSpec>,
    pub stack: StackUp,
}

impl SceneConfig {
    pub fn feed_spec(&self) -> FeedSpec {
        self.feed.unwrap_or_else(|| FeedSpec::synthesized(&self.stack))
    }

    pub fn build(&self) -> Result<SceneGeometry, GeometryError> {
        build_scene(&self.design, &self.layout, &self.feed_spec(), &self.stack)
    }

    pub fn with_design(&self, design: PatchDesign) -> Self {
        SceneConfig { design, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub triangles: usize,
    pub unknowns: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub table: SParamTable,
    pub eps_eff: f64,
    pub trace_width: f64,
    pub mesh: MeshStats,
    /// Frequencies actually solved (cache misses).
    pub solver_calls: usize,
    pub cache_hits: usize,
}

#[derive(Serialize)]
struct PointKey<'a> {
    version: u32,
    scene: &'a SceneGeometry,
    solver: &'a SolverConfig,
    frequency_ghz: f64,
}

/// Cache key of one frequency point: the resolved geometry, every solver
/// setting and the frequency.
pub fn point_key(scene: &SceneGeometry, solver: &SolverConfig, frequency_ghz: f64) -> String {
    content_hash(&PointKey { version: CACHE_VERSION, scene, solver, frequency_ghz })
}

/// S-parameters of the scene at `frequencies`, reusing and filling the
/// cache when one is given.
pub fn simulate(
    scene_cfg: &SceneConfig,
    solver: &SolverConfig,
    frequencies: &[f64],
    cache: Option<&ResultCache>,
) -> Result<SimulationOutput> {
    let scene = scene_cfg.build()?;
    let problem = MomProblem::new(&scene, solver)?;
    let keys: Vec<String> = frequencies.iter().map(|&f| point_key(&scene, solver, f)).collect();
    let mut rows: Vec<Option<SParamRow>> = keys.iter().map(|k| cache.and_then(|c| c.get(k))).collect();
    let missing: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].is_none()).collect();
    if !missing.is_empty() {
        let freqs: Vec<f64> = missing.iter().map(|&i| frequencies[i]).collect();
        let solved = solve_frequencies(&problem, &freqs)?;
        for (&i, row) in missing.iter().zip(solved.rows) {
            if let Some(c) = cache {
                c.put(&keys[i], &row)?;
            }
            rows[i] = Some(row);
        }
    }
    Ok(SimulationOutput {
        table: SParamTable { z0: solver.z0, rows: rows.into_iter().map(|r| r.expect("all points filled")).collect() },
        eps_eff: problem.eps_eff,
        trace_width: scene_cfg.feed_spec().trace_width,
        mesh: MeshStats { vertices: problem.mesh.vertices.len(), triangles: problem.mesh.triangles.len(), unknowns: problem.unknowns() },
        solver_calls: missing.len(),
        cache_hits: frequencies.len() - missing.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> SolverConfig {
        SolverConfig { max_edge_len: 2.4, ..SolverConfig::default() }
    }

    #[test]
    fn warm_cache_is_bit_identical_and_solver_free() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultCache::open(dir.path()).unwrap();
        let scene = SceneConfig::default();
        let freqs = [8.0, 8.5];
        let cold = simulate(&scene, &coarse(), &freqs, Some(&cache)).unwrap();
        assert_eq!((cold.solver_calls, cold.cache_hits), (2, 0));
        let warm = simulate(&scene, &coarse(), &freqs, Some(&cache)).unwrap();
        assert_eq!((warm.solver_calls, warm.cache_hits), (0, 2));
        assert_eq!(cold.table, warm.table);
        // A partially overlapping grid only solves the new point.
        let more = simulate(&scene, &coarse(), &[8.5, 9.0], Some(&cache)).unwrap();
        assert_eq!(more.solver_calls, 1);
        let fresh = simulate(&scene, &coarse(), &[8.5], None).unwrap();
        assert_eq!(fresh.table.rows[0], more.table.rows[0]);
    }

    #[test]
    fn keys_cover_design_solver_and_frequency() {
        let scene = SceneConfig::default().build().unwrap();
        let other = SceneConfig::default().with_design(PatchDesign::BASELINE.with_concavity(0.25, 0.0)).build().unwrap();
        let s = SolverConfig::default();
        let k = point_key(&scene, &s, 8.55);
        assert_eq!(k, point_key(&scene, &s, 8.55));
        assert_ne!(k, point_key(&other, &s, 8.55));
        assert_ne!(k, point_key(&scene, &coarse(), 8.55));
        assert_ne!(k, point_key(&scene, &SolverConfig { quadrature_points: 7, ..s.clone() }, 8.55));
        assert_ne!(k, point_key(&scene, &s, 8.5500001));
    }

    #[test]
    fn invalid_design_is_a_geometry_error() {
        let mut d = PatchDesign::BASELINE;
        d.h1 = d.l / 2.0;
        let err = simulate(&SceneConfig::default().with_design(d), &coarse(), &[8.0], None).unwrap_err();
        assert!(matches!(err, crate::Error::Geometry(GeometryError::Invalid { ref key, .. }) if key == "design.h1"));
    }
}
