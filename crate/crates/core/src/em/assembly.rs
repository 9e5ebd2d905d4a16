//! Galerkin assembly of the mixed-potential EFIE over RWG functions.
//!
//! Work is organised per (test triangle, source triangle) pair. For a test
//! point r the source integrals `S = int G` and `Sv = int (r' - c) G` are
//! formed once, and every RWG pairing of the two triangles follows from
//! four aggregated moments, so a pair costs the same regardless of how many
//! basis functions share it. The ground plane enters through image source
//! triangles (z -> -z) carrying the factor -1 on both potentials, which is
//! the correct image for horizontal and vertical current alike.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::integrals::{cross, dot, norm, potential_integrals, scale, sub};
use super::quadrature;
use crate::mesh::{Point3, RwgBasis, TriMesh};

pub const C0: f64 = 299_792_458.0;
pub const MU0: f64 = 4.0e-7 * PI;
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone)]
pub(crate) struct TriGeom {
    pub v: [Point3; 3],
    pub normal: Point3,
    pub area: f64,
    pub centroid: Point3,
    pub size: f64,
    /// Quadrature points with weights summing to one.
    pub points: Vec<(Point3, f64)>,
    /// Denser test points for near pairs: the 7-point rule on each of the
    /// four midpoint-subdivision children.
    pub near_points: Vec<(Point3, f64)>,
}

impl TriGeom {
    pub fn new(v: [Point3; 3], rule: &[quadrature::QuadPoint]) -> Self {
        let c = cross(sub(v[1], v[0]), sub(v[2], v[0]));
        let twice = norm(c);
        let centroid = [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
            (v[0][2] + v[1][2] + v[2][2]) / 3.0,
        ];
        let size = (0..3).map(|i| norm(sub(v[i], v[(i + 1) % 3]))).fold(0.0, f64::max);
        let points = map_rule(&v, rule, 1.0);
        let mid = |a: Point3, b: Point3| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
        let (m01, m12, m20) = (mid(v[0], v[1]), mid(v[1], v[2]), mid(v[2], v[0]));
        let fine = quadrature::rule(7).unwrap();
        let near_points = [[v[0], m01, m20], [m01, v[1], m12], [m20, m12, v[2]], [m12, m20, m01]]
            .iter()
            .flat_map(|child| map_rule(child, fine, 0.25))
            .collect();
        TriGeom { v, normal: scale(c, 1.0 / twice), area: 0.5 * twice, centroid, size, points, near_points }
    }

    pub fn image(&self) -> Self {
        let r = |p: Point3| [p[0], p[1], -p[2]];
        TriGeom {
            v: self.v.map(r),
            normal: [-self.normal[0], -self.normal[1], self.normal[2]],
            area: self.area,
            centroid: r(self.centroid),
            size: self.size,
            points: self.points.iter().map(|&(p, w)| (r(p), w)).collect(),
            near_points: self.near_points.iter().map(|&(p, w)| (r(p), w)).collect(),
        }
    }
}

fn map_rule(v: &[Point3; 3], rule: &[quadrature::QuadPoint], weight: f64) -> Vec<(Point3, f64)> {
    rule.iter()
        .map(|&(l, w)| {
            (
                [
                    l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                    l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
                    l[0] * v[0][2] + l[1] * v[1][2] + l[2] * v[2][2],
                ],
                w * weight,
            )
        })
        .collect()
}

/// Basis functions supported on a triangle: (basis, local free vertex, sign).
pub(crate) type Support = Vec<(usize, usize, f64)>;

pub(crate) fn supports(mesh: &TriMesh, basis: &RwgBasis) -> Vec<Support> {
    let mut out: Vec<Support> = vec![Vec::new(); mesh.triangles.len()];
    let local = |t: usize, v: usize| mesh.triangles[t].iter().position(|&x| x == v).unwrap();
    for (n, e) in basis.edges.iter().enumerate() {
        out[e.plus.0].push((n, local(e.plus.0, e.plus.1), 1.0));
        if let Some((t, v)) = e.minus {
            out[t].push((n, local(t, v), -1.0));
        }
    }
    out
}

/// Frequency-independent data shared by every assembly of one problem.
#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    pub tris: Vec<TriGeom>,
    pub images: Vec<TriGeom>,
    pub supports: Vec<Support>,
    pub lengths: Vec<f64>,
    pub near_factor: f64,
    pub extraction: bool,
}

impl Geometry {
    pub fn new(mesh: &TriMesh, basis: &RwgBasis, points: usize, near_factor: f64, extraction: bool) -> Self {
        let rule = quadrature::rule(points).expect("validated quadrature rule");
        let tris: Vec<TriGeom> =
            mesh.triangles.iter().map(|t| TriGeom::new(t.map(|v| mesh.vertices[v]), rule)).collect();
        let images = tris.iter().map(TriGeom::image).collect();
        Geometry {
            tris,
            images,
            supports: supports(mesh, basis),
            lengths: basis.edges.iter().map(|e| e.length).collect(),
            near_factor,
            extraction,
        }
    }
}

/// Medium constants at one frequency.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Medium {
    pub k: f64,
    /// j*omega*mu
    pub vector: Complex64,
    /// -j/(omega*eps)
    pub scalar: Complex64,
}

impl Medium {
    pub fn new(frequency_hz: f64, eps_eff: f64, mu_r: f64) -> Self {
        let omega = 2.0 * PI * frequency_hz;
        let mu = MU0 * mu_r;
        let eps = EPS0 * eps_eff;
        Medium { k: omega * (mu * eps).sqrt(), vector: J * (omega * mu), scalar: -J / (omega * eps) }
    }
}

/// `e^{-jkR} / (4 pi R)`
#[inline]
pub(crate) fn g(k: f64, r: f64) -> Complex64 {
    let (s, c) = (k * r).sin_cos();
    Complex64::new(c, -s) / (4.0 * PI * r)
}

/// `(e^{-jkR} - 1) / (4 pi R)`, finite at R = 0.
#[inline]
fn g_smooth(k: f64, r: f64) -> Complex64 {
    if r * k < 1e-6 {
        return Complex64::new(-0.5 * k * k * r, -k) / (4.0 * PI);
    }
    let half = 0.5 * k * r;
    let s = half.sin();
    Complex64::new(-2.0 * s * s, -(k * r).sin()) / (4.0 * PI * r)
}

/// Source integrals at observation point `r`: (int G, int (r' - origin) G).
#[inline]
fn source_integrals(src: &TriGeom, r: Point3, origin: Point3, k: f64, near: bool) -> (Complex64, [Complex64; 3]) {
    let mut s = ZERO;
    let mut sv = [ZERO; 3];
    if near {
        for &(p, w) in &src.points {
            let gs = g_smooth(k, norm(sub(r, p))) * (w * src.area);
            s += gs;
            let d = sub(p, origin);
            for c in 0..3 {
                sv[c] += gs * d[c];
            }
        }
        let pi = potential_integrals(&src.v, src.normal, r);
        let inv = 1.0 / (4.0 * PI);
        s += pi.one_over_r * inv;
        let rel = sub(pi.rho, origin);
        for c in 0..3 {
            sv[c] += (rel[c] * pi.one_over_r + pi.rho_over_r[c]) * inv;
        }
    } else {
        for &(p, w) in &src.points {
            let gv = g(k, norm(sub(r, p))) * (w * src.area);
            s += gv;
            let d = sub(p, origin);
            for c in 0..3 {
                sv[c] += gv * d[c];
            }
        }
    }
    (s, sv)
}

/// Contributions of test triangle `p` to the rows of its basis functions:
/// `strip[n][a]` is the reaction between the RWG kernel anchored at local
/// vertex `a` of `p` (without its sign and length) and basis `n`.
pub(crate) fn test_triangle_strip(geo: &Geometry, p: usize, medium: &Medium, n_basis: usize) -> Vec<[Complex64; 3]> {
    let mut strip = vec![[ZERO; 3]; n_basis];
    let tp = &geo.tris[p];
    let origin = tp.centroid;
    let pa: [Point3; 3] = tp.v.map(|v| sub(v, origin));
    for (image, sources) in [(false, &geo.tris), (true, &geo.images)] {
        let img_sign = if image { -1.0 } else { 1.0 };
        for (q, src) in sources.iter().enumerate() {
            let support = &geo.supports[q];
            if support.is_empty() {
                continue;
            }
            let dist = norm(sub(tp.centroid, src.centroid));
            let coincident = !image && q == p;
            let near = coincident || (geo.extraction && dist < geo.near_factor * tp.size.max(src.size));
            let mut x1 = ZERO;
            let mut xs = ZERO;
            let mut xr = [ZERO; 3];
            let mut xv = [ZERO; 3];
            let test_points = if near { &tp.near_points } else { &tp.points };
            for &(r, w) in test_points {
                let (s, sv) = source_integrals(src, r, origin, medium.k, near);
                let rr = sub(r, origin);
                x1 += (sv[0] * rr[0] + sv[1] * rr[1] + sv[2] * rr[2]) * w;
                xs += s * w;
                for c in 0..3 {
                    xr[c] += s * (rr[c] * w);
                    xv[c] += sv[c] * w;
                }
            }
            let inv4a = 1.0 / (4.0 * src.area);
            let phi = xs / src.area * medium.scalar;
            for &(n, b, sign) in support {
                let qb = sub(src.v[b], origin);
                let qxr = xr[0] * qb[0] + xr[1] * qb[1] + xr[2] * qb[2];
                let coeff = img_sign * sign * geo.lengths[n];
                let entry = &mut strip[n];
                for a in 0..3 {
                    let pxv = xv[0] * pa[a][0] + xv[1] * pa[a][1] + xv[2] * pa[a][2];
                    let av = (x1 - qxr - pxv + xs * dot(pa[a], qb)) * inv4a;
                    entry[a] += (medium.vector * av + phi) * coeff;
                }
            }
        }
    }
    strip
}

/// Rows `rows` of the impedance matrix (all columns), row-major.
/// Test triangles are processed in parallel; the scatter into rows is
/// sequential in triangle order, so the result is schedule independent.
pub(crate) fn assemble_rows(geo: &Geometry, medium: &Medium, rows: &[usize], n_basis: usize) -> Vec<Complex64> {
    let mut row_of = vec![usize::MAX; n_basis];
    for (i, &m) in rows.iter().enumerate() {
        row_of[m] = i;
    }
    let tests: Vec<usize> = (0..geo.tris.len())
        .filter(|&p| geo.supports[p].iter().any(|&(m, _, _)| row_of[m] != usize::MAX))
        .collect();
    let mut out = vec![ZERO; rows.len() * n_basis];
    for chunk in tests.chunks(32) {
        let strips: Vec<Vec<[Complex64; 3]>> =
            chunk.par_iter().map(|&p| test_triangle_strip(geo, p, medium, n_basis)).collect();
        for (&p, strip) in chunk.iter().zip(&strips) {
            for &(m, a, sign) in &geo.supports[p] {
                let i = row_of[m];
                if i == usize::MAX {
                    continue;
                }
                let f = sign * geo.lengths[m];
                let row = &mut out[i * n_basis..(i + 1) * n_basis];
                for (z, s) in row.iter_mut().zip(strip) {
                    *z += s[a] * f;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_kernel_limits() {
        let k = 180.0;
        let z = g_smooth(k, 0.0);
        assert!((z - Complex64::new(0.0, -k / (4.0 * PI))).norm() < 1e-12);
        for r in [1e-9, 1e-6, 1e-3, 1e-2] {
            let direct = (Complex64::new(0.0, -k * r).exp() - 1.0) / (4.0 * PI * r);
            assert!((g_smooth(k, r) - direct).norm() <= 1e-7 * direct.norm(), "r = {r}");
        }
    }

    #[test]
    fn image_triangle_is_mirrored() {
        let t = TriGeom::new([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]], quadrature::rule(3).unwrap());
        let i = t.image();
        assert_eq!(i.v[1], [1.0, 0.0, -1.0]);
        // Normal still consistent with vertex order.
        let c = cross(sub(i.v[1], i.v[0]), sub(i.v[2], i.v[0]));
        assert!(dot(c, i.normal) > 0.0);
        assert_eq!(i.points.len(), 3);
    }
}
