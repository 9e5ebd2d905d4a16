//! Method-of-moments solver for the array: mixed-potential EFIE over RWG
//! functions in a homogeneous effective medium above a PEC ground plane.
//!
//! The layered substrate is replaced by a single medium with the
//! quasi-static effective permittivity of a microstrip of the patch width
//! on the full stack height (Hammerstad):
//!
//! ```text
//! eps_eff = (eps_r + 1)/2 + (eps_r - 1)/2 * (1 + 12 h / W)^(-1/2),  h = d1 + d2
//! ```
//!
//! The ground plane is handled exactly by image theory. Ports are
//! delta-gap sources on the ground edge of each vertical probe strip.

mod assembly;
pub mod integrals;
pub mod linalg;
pub mod quadrature;
mod symmetry;
pub mod touchstone;

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, SolverError};
use crate::geometry::{SceneGeometry, StackUp, PORT_COUNT};
use crate::mesh::{build_rwg, triangulate, Point3, RwgBasis, TriMesh, DEFAULT_MAX_EDGE_MM};
use assembly::{assemble_rows, Geometry, Medium};
use linalg::{mat4_from_fn, mat4_inverse, mat4_mul, Lu};
pub use linalg::{spectral_norm, Mat4};
use symmetry::{Symmetry, CHARACTERS};

pub use assembly::{C0, EPS0, MU0};

static ASSEMBLY_CALLS: AtomicU64 = AtomicU64::new(0);

/// Number of impedance-matrix assemblies performed by this process.
pub fn assembly_calls() -> u64 {
    ASSEMBLY_CALLS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Points of the triangle quadrature rule: 1, 3, 4 or 7.
    pub quadrature_points: usize,
    /// Analytic 1/R extraction on near triangle pairs. Coincident pairs
    /// always use it.
    pub singularity_extraction: bool,
    /// Overrides the quasi-static effective permittivity when set.
    pub eps_eff: Option<f64>,
    /// Reference impedance, ohm.
    pub z0: f64,
    /// Relative pivot magnitude below which the matrix counts as singular.
    pub pivot_tolerance: f64,
    /// Pairs closer than this many triangle sizes use extraction.
    pub near_factor: f64,
    /// Mesh size bound, mm.
    pub max_edge_len: f64,
    /// Use the four-fold mirror symmetry when the scene has it.
    pub use_symmetry: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            quadrature_points: 4,
            singularity_extraction: true,
            eps_eff: None,
            z0: 50.0,
            pivot_tolerance: 1e-13,
            near_factor: 2.5,
            max_edge_len: DEFAULT_MAX_EDGE_MM,
            use_symmetry: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if quadrature::rule(self.quadrature_points).is_none() {
            return Err(SolverError::Config(format!(
                "solver.quadrature_points must be one of 1, 3, 4, 7 (got {})",
                self.quadrature_points
            )));
        }
        if !(self.z0 > 0.0 && self.z0.is_finite()) {
            return Err(SolverError::Config(format!("solver.z0 must be positive (got {})", self.z0)));
        }
        if let Some(e) = self.eps_eff {
            if !(e >= 1.0 && e.is_finite()) {
                return Err(SolverError::Config(format!("solver.eps_eff must be >= 1 (got {e})")));
            }
        }
        if !(self.pivot_tolerance >= 0.0 && self.pivot_tolerance < 1.0) {
            return Err(SolverError::Config(format!("solver.pivot_tolerance must be in [0, 1) (got {})", self.pivot_tolerance)));
        }
        if !(self.near_factor >= 0.0 && self.near_factor.is_finite()) {
            return Err(SolverError::Config(format!("solver.near_factor must be non-negative (got {})", self.near_factor)));
        }
        if !(self.max_edge_len > 0.0 && self.max_edge_len.is_finite()) {
            return Err(SolverError::Config(format!("solver.max_edge_len must be positive (got {})", self.max_edge_len)));
        }
        Ok(())
    }
}

/// Quasi-static effective permittivity of a microstrip of width `width`
/// on a substrate of height `d1 + d2` (both mm).
pub fn effective_permittivity(stack: &StackUp, width: f64) -> f64 {
    let h = stack.d1 + stack.d2;
    let er = stack.eps_r;
    (er + 1.0) / 2.0 + (er - 1.0) / 2.0 / (1.0 + 12.0 * h / width).sqrt()
}

/// Free-space Green's function with the PEC ground image:
/// `g(R) - g(R_img)`, `g(R) = exp(-jkR) / (4 pi R)`. Points in metres.
pub fn green_kernel(r: Point3, rp: Point3, k: f64) -> Complex64 {
    let d = |a: Point3, b: Point3| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let img = [rp[0], rp[1], -rp[2]];
    assembly::g(k, d(r, rp)) - assembly::g(k, d(r, img))
}

/// Width of the first patch polygon along x (mm).
pub fn patch_width(scene: &SceneGeometry) -> f64 {
    let p = &scene.polygons[0];
    let lo = p.vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
    let hi = p.vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZMatrix {
    pub frequency_ghz: f64,
    pub n: usize,
    /// Row-major entries.
    pub data: Vec<Complex64>,
}

impl ZMatrix {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// max |Z - Z^T| / max |Z|
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                scale = scale.max(self.get(i, j).norm());
                worst = worst.max((self.get(i, j) - self.get(j, i)).norm());
            }
        }
        worst / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SParamRow {
    pub frequency_ghz: f64,
    pub s: Mat4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SParamTable {
    pub z0: f64,
    pub rows: Vec<SParamRow>,
}

/// Mesh, basis and precomputed geometry of one scene; reused across
/// frequencies.
#[derive(Debug, Clone)]
pub struct MomProblem {
    pub mesh: TriMesh,
    pub basis: RwgBasis,
    pub eps_eff: f64,
    pub mu_r: f64,
    geometry: Geometry,
    symmetry: Option<Symmetry>,
    pivot_tolerance: f64,
    z0: f64,
}

impl MomProblem {
    pub fn new(scene: &SceneGeometry, cfg: &SolverConfig) -> Result<Self, Error> {
        cfg.validate()?;
        let mesh = triangulate(scene, cfg.max_edge_len)?;
        let basis = build_rwg(&mesh, scene)?;
        Self::from_mesh(scene, mesh, basis, cfg)
    }

    pub fn from_mesh(scene: &SceneGeometry, mesh: TriMesh, basis: RwgBasis, cfg: &SolverConfig) -> Result<Self, Error> {
        cfg.validate()?;
        let eps_eff = cfg.eps_eff.unwrap_or_else(|| effective_permittivity(&scene.stack, patch_width(scene)));
        let geometry =
            Geometry::new(&mesh, &basis, cfg.quadrature_points, cfg.near_factor, cfg.singularity_extraction);
        let symmetry = if cfg.use_symmetry { Symmetry::detect(&mesh, &basis, scene) } else { None };
        Ok(MomProblem {
            mesh,
            basis,
            eps_eff,
            mu_r: scene.stack.mu_r,
            geometry,
            symmetry,
            pivot_tolerance: cfg.pivot_tolerance,
            z0: cfg.z0,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.basis.len()
    }

    /// True when port matrices use the block-diagonal symmetric path.
    pub fn is_symmetric(&self) -> bool {
        self.symmetry.is_some()
    }

    /// Wavenumber in the effective medium, rad/m.
    pub fn wavenumber(&self, frequency_ghz: f64) -> f64 {
        self.medium(frequency_ghz).k
    }

    fn medium(&self, frequency_ghz: f64) -> Medium {
        Medium::new(frequency_ghz * 1e9, self.eps_eff, self.mu_r)
    }

    /// 4x4 port impedance matrix at one frequency, through the symmetric
    /// path when available.
    pub fn port_impedance(&self, frequency_ghz: f64) -> Result<Mat4, SolverError> {
        let y = match &self.symmetry {
            Some(sym) => self.symmetric_admittance(sym, frequency_ghz)?,
            None => {
                let z = assemble_impedance(self, frequency_ghz);
                port_admittance_dense(self, &z)?
            }
        };
        admittance_to_impedance(&y)
    }

    fn symmetric_admittance(&self, sym: &Symmetry, frequency_ghz: f64) -> Result<Mat4, SolverError> {
        ASSEMBLY_CALLS.fetch_add(1, Ordering::Relaxed);
        let n = self.basis.len();
        let n0 = sym.reps.len();
        let rows = assemble_rows(&self.geometry, &self.medium(frequency_ghz), &sym.reps, n);
        // C_g[i][j] = sigma * Z[rep_i, orbit_g(rep_j)], symmetrized.
        let mut blocks: Vec<Vec<Complex64>> = Vec::with_capacity(4);
        for orbit in &sym.orbit {
            let mut c = vec![Complex64::new(0.0, 0.0); n0 * n0];
            for i in 0..n0 {
                for (j, &(col, sign)) in orbit.iter().enumerate() {
                    c[i * n0 + j] = rows[i * n + col] * sign;
                }
            }
            for i in 0..n0 {
                for j in i + 1..n0 {
                    let avg = (c[i * n0 + j] + c[j * n0 + i]) * 0.5;
                    c[i * n0 + j] = avg;
                    c[j * n0 + i] = avg;
                }
            }
            blocks.push(c);
        }
        let np = sym.port_rep;
        let l = self.basis.edges[self.basis.port_edges[0]].length;
        let mut diag = [Complex64::new(0.0, 0.0); 4];
        for (chi, chars) in CHARACTERS.iter().enumerate() {
            let mut m = vec![Complex64::new(0.0, 0.0); n0 * n0];
            for (g, block) in blocks.iter().enumerate() {
                for (x, &b) in m.iter_mut().zip(block) {
                    *x += b * chars[g];
                }
            }
            let lu = Lu::factor(m, n0, self.pivot_tolerance)?;
            let mut e = vec![Complex64::new(0.0, 0.0); n0];
            e[np] = Complex64::new(1.0, 0.0);
            diag[chi] = lu.solve(&e)[np];
        }
        Ok(mat4_from_fn(|q, p| {
            let (gq, gp) = (sym.port_group[q], sym.port_group[p]);
            (0..4).map(|chi| diag[chi] * (CHARACTERS[chi][gq] * CHARACTERS[chi][gp])).sum::<Complex64>() * (l * l / 4.0)
        }))
    }

    fn port_length(&self, port: usize) -> f64 {
        self.basis.edges[self.basis.port_edges[port]].length
    }
}

/// Dense Galerkin impedance matrix of the problem at one frequency,
/// symmetrized as `(Z + Z^T) / 2`.
pub fn assemble_impedance(problem: &MomProblem, frequency_ghz: f64) -> ZMatrix {
    let mut z = assemble_impedance_unsymmetrized(problem, frequency_ghz);
    let n = z.n;
    for i in 0..n {
        for j in i + 1..n {
            let avg = (z.data[i * n + j] + z.data[j * n + i]) * 0.5;
            z.data[i * n + j] = avg;
            z.data[j * n + i] = avg;
        }
    }
    z
}

/// Assembly as computed, before symmetrization; the asymmetry it shows is
/// the near-field quadrature error.
pub fn assemble_impedance_unsymmetrized(problem: &MomProblem, frequency_ghz: f64) -> ZMatrix {
    ASSEMBLY_CALLS.fetch_add(1, Ordering::Relaxed);
    let n = problem.basis.len();
    let rows: Vec<usize> = (0..n).collect();
    let data = assemble_rows(&problem.geometry, &problem.medium(frequency_ghz), &rows, n);
    ZMatrix { frequency_ghz, n, data }
}

fn check_port(problem: &MomProblem, port: usize) -> Result<usize, SolverError> {
    if port == 0 || port > problem.basis.port_edges.len() {
        return Err(SolverError::BadPort { port });
    }
    Ok(port - 1)
}

/// Current coefficients for a 1 V delta-gap source at `port` (1-based).
pub fn excite_and_solve(z: &ZMatrix, port: usize, problem: &MomProblem) -> Result<Vec<Complex64>, SolverError> {
    let p = check_port(problem, port)?;
    let lu = Lu::factor(z.data.clone(), z.n, problem.pivot_tolerance)?;
    Ok(lu.solve(&excitation(problem, p)))
}

fn excitation(problem: &MomProblem, p: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); problem.basis.len()];
    v[problem.basis.port_edges[p]] = Complex64::new(problem.port_length(p), 0.0);
    v
}

fn port_admittance_dense(problem: &MomProblem, z: &ZMatrix) -> Result<Mat4, SolverError> {
    let lu = Lu::factor(z.data.clone(), z.n, problem.pivot_tolerance)?;
    let mut y = [[Complex64::new(0.0, 0.0); 4]; 4];
    for p in 0..PORT_COUNT {
        let i = lu.solve(&excitation(problem, p));
        for q in 0..PORT_COUNT {
            y[q][p] = i[problem.basis.port_edges[q]] * problem.port_length(q);
        }
    }
    Ok(y)
}

fn admittance_to_impedance(y: &Mat4) -> Result<Mat4, SolverError> {
    let scale = y.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(SolverError::IllDefinedImpedance);
    }
    mat4_inverse(y).map_err(|_| SolverError::IllDefinedImpedance)
}

/// Port impedance matrix from a dense impedance matrix: each port is
/// driven in turn with the others shorted, giving the admittance matrix
/// `Y[i][j] = I_i / V_j` (port currents through the gap edges), whose
/// inverse is the open-circuit impedance matrix.
pub fn port_impedance_matrix(problem: &MomProblem, z: &ZMatrix) -> Result<Mat4, SolverError> {
    admittance_to_impedance(&port_admittance_dense(problem, z)?)
}

/// `S = (Zp - Z0 I)(Zp + Z0 I)^-1`
pub fn z_to_s(zp: &Mat4, z0: f64) -> Result<Mat4, SolverError> {
    let eye = |i: usize, j: usize| if i == j { z0 } else { 0.0 };
    let minus = mat4_from_fn(|i, j| zp[i][j] - eye(i, j));
    let plus = mat4_from_fn(|i, j| zp[i][j] + eye(i, j));
    Ok(mat4_mul(&minus, &mat4_inverse(&plus)?))
}

/// `n_points` uniformly spaced frequencies from `f_start` to `f_stop` (GHz).
pub fn frequency_grid(f_start: f64, f_stop: f64, n_points: usize) -> Vec<f64> {
    let step = (f_stop - f_start) / (n_points - 1) as f64;
    (0..n_points).map(|i| if i + 1 == n_points { f_stop } else { f_start + step * i as f64 }).collect()
}

/// S-parameters of the problem at each frequency.
pub fn solve_frequencies(problem: &MomProblem, frequencies: &[f64]) -> Result<SParamTable, SolverError> {
    let mut rows = Vec::with_capacity(frequencies.len());
    for &f in frequencies {
        let annotate = |e: SolverError| SolverError::AtFrequency { frequency_ghz: f, source: Box::new(e) };
        let zp = problem.port_impedance(f).map_err(annotate)?;
        let s = z_to_s(&zp, problem.z0).map_err(annotate)?;
        rows.push(SParamRow { frequency_ghz: f, s });
    }
    Ok(SParamTable { z0: problem.z0, rows })
}

pub fn frequency_sweep(
    scene: &SceneGeometry,
    cfg: &SolverConfig,
    f_start: f64,
    f_stop: f64,
    n_points: usize,
) -> Result<SParamTable, Error> {
    if !(f_start < f_stop) || n_points < 2 || !(f_start > 0.0) {
        return Err(SolverError::Config(format!(
            "sweep needs 0 < f_start < f_stop and n_points >= 2 (got {f_start}, {f_stop}, {n_points})"
        ))
        .into());
    }
    let problem = MomProblem::new(scene, cfg)?;
    Ok(solve_frequencies(&problem, &frequency_grid(f_start, f_stop, n_points))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub frequency_ghz: f64,
    /// Interpolated minimum of |S_pp| (linear).
    pub magnitude: f64,
    /// False when the discrete minimum sits on the first or last sample.
    pub bracketed: bool,
}

/// Minimum of |S_pp| over the table, refined by a parabola through the
/// discrete minimum and its neighbours.
pub fn find_resonance(table: &SParamTable, port: usize) -> Result<Resonance, SolverError> {
    if port == 0 || port > PORT_COUNT {
        return Err(SolverError::BadPort { port });
    }
    if table.rows.is_empty() {
        return Err(SolverError::Config("empty S-parameter table".into()));
    }
    let p = port - 1;
    let mag: Vec<f64> = table.rows.iter().map(|r| r.s[p][p].norm()).collect();
    let f: Vec<f64> = table.rows.iter().map(|r| r.frequency_ghz).collect();
    let i = (0..mag.len()).fold(0, |best, i| if mag[i] < mag[best] { i } else { best });
    if i == 0 || i + 1 == mag.len() {
        return Ok(Resonance { frequency_ghz: f[i], magnitude: mag[i], bracketed: false });
    }
    let (x0, x1, x2) = (f[i - 1], f[i], f[i + 1]);
    let (y0, y1, y2) = (mag[i - 1], mag[i], mag[i + 1]);
    // Vertex of the interpolating parabola (divided differences).
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a > 0.0) {
        return Ok(Resonance { frequency_ghz: x1, magnitude: y1, bracketed: true });
    }
    let b = d01 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    let yv = y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1);
    Ok(Resonance { frequency_ghz: xv, magnitude: yv.max(0.0), bracketed: true })
}

/// `20 log10 |z|`
pub fn db(z: Complex64) -> f64 {
    20.0 * z.norm().log10()
}

pub fn phase_deg(z: Complex64) -> f64 {
    z.arg() * 180.0 / PI
}

/// Largest |S_ij - S_ji| over a table.
pub fn max_reciprocity_error(table: &SParamTable) -> f64 {
    table
        .rows
        .iter()
        .flat_map(|r| (0..4).flat_map(move |i| (0..4).map(move |j| (r.s[i][j] - r.s[j][i]).norm())))
        .fold(0.0, f64::max)
}

/// Largest spectral norm of S over a table.
pub fn max_spectral_norm(table: &SParamTable) -> f64 {
    table.rows.iter().map(|r| spectral_norm(&r.s)).fold(0.0, f64::max)
}
