//! Triangulation of scene conductors and RWG edge basis functions.
//!
//! Horizontal polygons are meshed by [`refine::mesh_polygon`] in a canonical
//! frame (reflected into the positive quadrant, vertex list rotated to its
//! lexicographically smallest vertex) and mapped back, so mirror-image
//! conductors receive bitwise mirror-image meshes. Port probes are
//! structured strips stitched to the vertices their feed mesh placed on
//! the probe edge.

mod refine;
mod rwg;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::MeshError;
use crate::geometry::{ConductorRole, Plane, Point2, Polygon, SceneGeometry};

pub use rwg::{build_rwg, RwgBasis, RwgEdge};

pub(crate) use refine::min_angle_deg;
#[cfg(test)]
use refine::max_edge as max_edge_2d;

/// Default size bound, mm.
pub const DEFAULT_MAX_EDGE_MM: f64 = 1.2;
/// Minimum interior angle enforced on planar conductors, degrees.
pub const MIN_ANGLE_DEG: f64 = 20.0;

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    /// Vertex coordinates in metres.
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
    /// Scene polygon each triangle was generated from.
    pub triangle_polygon: Vec<usize>,
}

impl TriMesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let u = sub(pb, pa);
        let v = sub(pc, pa);
        let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
    }

    /// Total triangle area per scene polygon, m^2.
    pub fn polygon_areas(&self, polygon_count: usize) -> Vec<f64> {
        let mut out = vec![0.0; polygon_count];
        for t in 0..self.triangles.len() {
            out[self.triangle_polygon[t]] += self.triangle_area(t);
        }
        out
    }

    pub fn edge_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.triangles.iter().flat_map(move |&[a, b, c]| {
            [(a, b), (b, c), (c, a)].map(|(u, v)| norm(sub(self.vertices[u], self.vertices[v])))
        })
    }

    /// Unique undirected edges with the triangles that use them.
    pub fn edge_map(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                map.entry((u.min(v), u.max(v))).or_default().push(t);
            }
        }
        map
    }

    /// Connected components over shared edges, as lists of triangles.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.triangles.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for tris in self.edge_map().values() {
            for w in tris.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for t in 0..self.triangles.len() {
            let r = find(&mut parent, t);
            groups.entry(r).or_default().push(t);
        }
        groups.into_values().collect()
    }
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: Point3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

const MM: f64 = 1e-3;

fn to_metres(p: [f64; 3]) -> Point3 {
    [p[0] * MM, p[1] * MM, p[2] * MM]
}

/// Canonical frame of a horizontal polygon: reflection signs and the
/// rotation applied to the reflected vertex list.
fn canonical(poly: &Polygon) -> (f64, f64, Vec<Point2>) {
    let n = poly.vertices.len() as f64;
    let cx = poly.vertices.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = poly.vertices.iter().map(|p| p[1]).sum::<f64>() / n;
    let sx = if cx < 0.0 { -1.0 } else { 1.0 };
    let sy = if cy < 0.0 { -1.0 } else { 1.0 };
    let mut v: Vec<Point2> = poly.vertices.iter().map(|p| [sx * p[0], sy * p[1]]).collect();
    if sx * sy < 0.0 {
        v.reverse();
    }
    let start = (0..v.len()).min_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap()).unwrap();
    v.rotate_left(start);
    (sx, sy, v)
}

struct PolygonMesh {
    /// Vertices in mm, world frame.
    points: Vec<Point3>,
    triangles: Vec<[usize; 3]>,
}

fn mesh_horizontal(index: usize, poly: &Polygon, max_edge_len: f64) -> Result<PolygonMesh, MeshError> {
    let Plane::Horizontal { z } = poly.plane else { unreachable!() };
    let (sx, sy, canon) = canonical(poly);
    let planar = refine::mesh_polygon(&canon, max_edge_len, MIN_ANGLE_DEG)
        .map_err(|reason| MeshError::Unmeshable { polygon: index, reason })?;
    let points = planar.points.iter().map(|p| [sx * p[0], sy * p[1], z]).collect();
    let flip = sx * sy < 0.0;
    let triangles = planar.triangles.iter().map(|&[a, b, c]| if flip { [a, c, b] } else { [a, b, c] }).collect();
    Ok(PolygonMesh { points, triangles })
}

/// Conforming triangulation of every conductor in the scene.
///
/// Patches and feeds obey `max_edge_len` (mm) and the [`MIN_ANGLE_DEG`]
/// bound; probes are two-or-more-triangle strips whose single base edge is
/// the port edge.
pub fn triangulate(scene: &SceneGeometry, max_edge_len: f64) -> Result<TriMesh, MeshError> {
    if !(max_edge_len > 0.0) || !max_edge_len.is_finite() {
        return Err(MeshError::Parameter(format!("max_edge_len must be positive (got {max_edge_len})")));
    }
    let planar: Vec<Option<Result<PolygonMesh, MeshError>>> = scene
        .polygons
        .par_iter()
        .enumerate()
        .map(|(i, p)| match p.plane {
            Plane::Horizontal { .. } => Some(mesh_horizontal(i, p, max_edge_len)),
            Plane::Vertical { .. } => None,
        })
        .collect();

    let mut mesh = TriMesh { vertices: Vec::new(), triangles: Vec::new(), triangle_polygon: Vec::new() };
    let mut offsets = vec![usize::MAX; scene.polygons.len()];
    let mut ends = vec![usize::MAX; scene.polygons.len()];
    for (i, entry) in planar.into_iter().enumerate() {
        let Some(result) = entry else { continue };
        let pm = result?;
        offsets[i] = mesh.vertices.len();
        mesh.vertices.extend(pm.points.iter().map(|&p| to_metres(p)));
        for t in pm.triangles {
            mesh.triangles.push(t.map(|v| v + offsets[i]));
            mesh.triangle_polygon.push(i);
        }
        ends[i] = mesh.vertices.len();
    }

    for (i, probe) in scene.polygons.iter().enumerate() {
        let Plane::Vertical { .. } = probe.plane else { continue };
        if probe.label != ConductorRole::Probe {
            return Err(MeshError::Unmeshable { polygon: i, reason: "only probes may be vertical".into() });
        }
        let port = scene
            .ports
            .iter()
            .find(|p| p.probe == i)
            .ok_or_else(|| MeshError::Unmeshable { polygon: i, reason: "probe is not attached to a port".into() })?;
        let feed = &scene.polygons[port.feed];
        let Plane::Horizontal { z } = feed.plane else {
            return Err(MeshError::Unmeshable { polygon: i, reason: "feed is not horizontal".into() });
        };
        let lo = offsets[port.feed];
        if lo == usize::MAX {
            return Err(MeshError::Unmeshable { polygon: i, reason: "feed mesh missing".into() });
        }
        let hi = ends[port.feed];
        // Walk the probe edge from the end that corresponds to the canonical
        // element's first endpoint, so mirrored probes get mirrored strips.
        let (mut ea, mut eb) = feed.edge(port.feed_edge);
        let (sx, sy) = crate::geometry::ELEMENT_SIGNS[feed.element];
        if sx * sy < 0.0 {
            std::mem::swap(&mut ea, &mut eb);
        }
        let len = ((eb[0] - ea[0]).powi(2) + (eb[1] - ea[1]).powi(2)).sqrt();
        let tol = 1e-9 * len.max(1.0);
        let mut top: Vec<(f64, usize)> = (lo..hi)
            .filter_map(|v| {
                let p = mesh.vertices[v];
                let q = [p[0] / MM, p[1] / MM];
                let cross = (eb[0] - ea[0]) * (q[1] - ea[1]) - (eb[1] - ea[1]) * (q[0] - ea[0]);
                let s = ((q[0] - ea[0]).powi(2) + (q[1] - ea[1]).powi(2)).sqrt();
                (cross.abs() <= tol * len && s < len + tol).then_some((s, v))
            })
            .collect();
        top.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if top.len() < 2 {
            return Err(MeshError::Unmeshable { polygon: i, reason: "feed edge has no mesh vertices".into() });
        }
        let b0 = mesh.vertices.len();
        mesh.vertices.push(to_metres([ea[0], ea[1], 0.0]));
        mesh.vertices.push(to_metres([eb[0], eb[1], 0.0]));
        for t in probe_strip(&top, len, z, b0, b0 + 1) {
            mesh.triangles.push(t);
            mesh.triangle_polygon.push(i);
        }
    }
    Ok(mesh)
}

/// Fan the strip between the base edge (b0, b1) and the top vertices,
/// choosing the apex that maximizes the smallest angle.
fn probe_strip(top: &[(f64, usize)], len: f64, height: f64, b0: usize, b1: usize) -> Vec<[usize; 3]> {
    let k = top.len() - 1;
    let pt = |s: f64, z: f64| -> Point2 { [s, z] };
    let build = |j: usize| {
        let mut tris = vec![([b0, b1, top[j].1], [pt(0.0, 0.0), pt(len, 0.0), pt(top[j].0, height)])];
        for i in 0..j {
            tris.push((
                [b0, top[i + 1].1, top[i].1],
                [pt(0.0, 0.0), pt(top[i + 1].0, height), pt(top[i].0, height)],
            ));
        }
        for i in j..k {
            tris.push((
                [b1, top[i + 1].1, top[i].1],
                [pt(len, 0.0), pt(top[i + 1].0, height), pt(top[i].0, height)],
            ));
        }
        tris
    };
    let quality =
        |tris: &[([usize; 3], [Point2; 3])]| tris.iter().map(|(_, p)| min_angle_deg(p[0], p[1], p[2])).fold(180.0, f64::min);
    let best = (0..=k)
        .max_by(|&a, &b| quality(&build(a)).partial_cmp(&quality(&build(b))).unwrap().then(b.cmp(&a)))
        .unwrap();
    build(best).into_iter().map(|(t, _)| t).collect()
}

/// Plain-text mesh dump:
///
/// ```text
/// # patcharray mesh v1
/// vertices <n>
/// <index> <x_m> <y_m> <z_m>
/// triangles <m>
/// <index> <v0> <v1> <v2> <polygon>
/// basis <k>
/// <index> <va> <vb> <plus_triangle> <minus_triangle|-1> <length_m>
/// ports <p>
/// <port> <basis_index>
/// ```
pub fn dump_mesh(mesh: &TriMesh, basis: Option<&RwgBasis>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# patcharray mesh v1");
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{i} {:.12e} {:.12e} {:.12e}", v[0], v[1], v[2]);
    }
    let _ = writeln!(s, "triangles {}", mesh.triangles.len());
    for (i, t) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {} {}", t[0], t[1], t[2], mesh.triangle_polygon[i]);
    }
    if let Some(b) = basis {
        let _ = writeln!(s, "basis {}", b.edges.len());
        for (i, e) in b.edges.iter().enumerate() {
            let minus = e.minus.map(|m| m.0 as i64).unwrap_or(-1);
            let _ = writeln!(s, "{i} {} {} {} {} {:.12e}", e.vertices[0], e.vertices[1], e.plus.0, minus, e.length);
        }
        let _ = writeln!(s, "ports {}", b.port_edges.len());
        for (p, idx) in b.port_edges.iter().enumerate() {
            let _ = writeln!(s, "{} {}", p + 1, idx);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_scene, ArrayLayout, FeedSpec, PatchDesign, StackUp};

    pub(crate) fn scene(design: &PatchDesign) -> SceneGeometry {
        let stack = StackUp::default();
        build_scene(design, &ArrayLayout::default(), &FeedSpec::synthesized(&stack), &stack).unwrap()
    }

    #[test]
    fn baseline_patch_area_and_bounds() {
        let s = scene(&PatchDesign::BASELINE);
        let m = triangulate(&s, 1.2).unwrap();
        let areas = m.polygon_areas(s.polygons.len());
        for (i, p) in s.polygons.iter().enumerate() {
            let exact = p.area() * 1e-6;
            assert!((areas[i] - exact).abs() <= 1e-9 * exact, "polygon {i}: {} vs {exact}", areas[i]);
        }
        assert!((areas[0] * 1e6 - 109.1475).abs() < 1e-6);
        for t in 0..m.triangles.len() {
            let p = m.triangle_polygon[t];
            assert!(m.triangle_area(t) > 1e-18);
            if s.polygons[p].label == ConductorRole::Probe {
                continue;
            }
            let [a, b, c] = m.triangles[t];
            let q = |v: usize| [m.vertices[v][0] * 1e3, m.vertices[v][1] * 1e3];
            assert!(max_edge_2d(q(a), q(b), q(c)) <= 1.2 * (1.0 + 1e-9));
            assert!(min_angle_deg(q(a), q(b), q(c)) >= MIN_ANGLE_DEG);
        }
    }

    #[test]
    fn euler_characteristic_per_component() {
        let s = scene(&PatchDesign::PUBLISHED_OPTIMUM);
        let m = triangulate(&s, 1.2).unwrap();
        let comps = m.components();
        // Four patches plus four feed+probe pieces.
        assert_eq!(comps.len(), 8);
        for comp in comps {
            let mut verts = std::collections::BTreeSet::new();
            let mut edges = std::collections::BTreeSet::new();
            for &t in &comp {
                let [a, b, c] = m.triangles[t];
                verts.extend([a, b, c]);
                for (u, v) in [(a, b), (b, c), (c, a)] {
                    edges.insert((u.min(v), u.max(v)));
                }
            }
            assert_eq!(verts.len() as i64 - edges.len() as i64 + comp.len() as i64, 1);
        }
    }

    #[test]
    fn mirrored_elements_have_mirrored_meshes() {
        let s = scene(&PatchDesign::PUBLISHED_OPTIMUM);
        let m = triangulate(&s, 1.2).unwrap();
        let key = |p: Point3| [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
        let set: std::collections::HashSet<_> = m
            .triangles
            .iter()
            .map(|t| {
                let mut k = t.map(|v| key(m.vertices[v]));
                k.sort();
                k
            })
            .collect();
        for t in &m.triangles {
            let mut k = t.map(|v| {
                let p = m.vertices[v];
                key([-p[0], p[1], p[2]])
            });
            k.sort();
            assert!(set.contains(&k));
        }
    }

    #[test]
    fn refinement_quadruples_roughly() {
        let s = scene(&PatchDesign::BASELINE);
        let coarse = triangulate(&s, 2.4).unwrap();
        let fine = triangulate(&s, 1.2).unwrap();
        assert!(fine.triangles.len() >= 2 * coarse.triangles.len());
        let total = |m: &TriMesh| m.polygon_areas(12).iter().sum::<f64>();
        assert!((total(&coarse) - total(&fine)).abs() <= 1e-9 * total(&fine));
    }

    #[test]
    fn dump_lists_sections() {
        let s = scene(&PatchDesign::BASELINE);
        let m = triangulate(&s, 2.4).unwrap();
        let b = build_rwg(&m, &s).unwrap();
        let text = dump_mesh(&m, Some(&b));
        assert!(text.starts_with("# patcharray mesh v1\nvertices "));
        assert!(text.contains(&format!("\ntriangles {}\n", m.triangles.len())));
        assert!(text.contains(&format!("\nbasis {}\n", b.edges.len())));
        assert!(text.contains("\nports 4\n"));
    }

    #[test]
    fn rejects_bad_size() {
        let s = scene(&PatchDesign::BASELINE);
        assert!(matches!(triangulate(&s, 0.0), Err(MeshError::Parameter(_))));
    }
}
