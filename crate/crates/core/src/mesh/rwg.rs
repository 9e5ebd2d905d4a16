use serde::{Deserialize, Serialize};

use super::{norm, sub, TriMesh};
use crate::error::MeshError;
use crate::geometry::SceneGeometry;

/// One Rao-Wilton-Glisson basis function.
///
/// On the plus triangle the current is `l/(2A+) (r - v+)`, on the minus
/// triangle `l/(2A-) (v- - r)`, where `v+-` are the vertices opposite the
/// shared edge. Edges lying on the ground plane (z = 0) carry a half basis
/// with no minus triangle: its mirror image below the ground plane is
/// supplied by the image kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwgEdge {
    pub vertices: [usize; 2],
    /// (triangle, free vertex).
    pub plus: (usize, usize),
    pub minus: Option<(usize, usize)>,
    /// Edge length, m.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwgBasis {
    pub edges: Vec<RwgEdge>,
    /// Basis index of the delta-gap edge of port 1..4 (entry 0 is port 1).
    pub port_edges: Vec<usize>,
}

impl RwgBasis {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

fn free_vertex(tri: [usize; 3], a: usize, b: usize) -> usize {
    tri.into_iter().find(|&v| v != a && v != b).unwrap()
}

/// One basis per interior edge plus one ground-junction half basis per
/// probe base edge; ordered by (min vertex, max vertex).
pub fn build_rwg(mesh: &TriMesh, scene: &SceneGeometry) -> Result<RwgBasis, MeshError> {
    let mut edges = Vec::new();
    for ((a, b), tris) in mesh.edge_map() {
        let length = norm(sub(mesh.vertices[a], mesh.vertices[b]));
        match tris.as_slice() {
            [p, m] => {
                let (p, m) = (*p.min(m), *p.max(m));
                edges.push(RwgEdge {
                    vertices: [a, b],
                    plus: (p, free_vertex(mesh.triangles[p], a, b)),
                    minus: Some((m, free_vertex(mesh.triangles[m], a, b))),
                    length,
                });
            }
            [t] if mesh.vertices[a][2] == 0.0 && mesh.vertices[b][2] == 0.0 => {
                edges.push(RwgEdge {
                    vertices: [a, b],
                    plus: (*t, free_vertex(mesh.triangles[*t], a, b)),
                    minus: None,
                    length,
                });
            }
            [_] => {}
            _ => return Err(MeshError::NonManifoldEdge(a, b)),
        }
    }
    let mut port_edges = Vec::with_capacity(scene.ports.len());
    for port in &scene.ports {
        let idx = edges
            .iter()
            .position(|e| e.minus.is_none() && mesh.triangle_polygon[e.plus.0] == port.probe)
            .ok_or(MeshError::PortEdgeNotFound { port: port.port })?;
        port_edges.push(idx);
    }
    Ok(RwgBasis { edges, port_edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Plane, PortRef, StackUp};
    use crate::mesh::tests::scene;
    use crate::mesh::triangulate;

    fn square(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> (TriMesh, SceneGeometry) {
        let n = triangles.len();
        let mesh = TriMesh { vertices, triangles, triangle_polygon: vec![0; n] };
        let scene = SceneGeometry { stack: StackUp::default(), polygons: vec![], ports: vec![] };
        (mesh, scene)
    }

    #[test]
    fn two_triangle_square() {
        let z = 1e-3;
        let (m, s) = square(vec![[0.0, 0.0, z], [1.0, 0.0, z], [1.0, 1.0, z], [0.0, 1.0, z]], vec![[0, 1, 2], [0, 2, 3]]);
        let b = build_rwg(&m, &s).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.edges[0].vertices, [0, 2]);
        assert_eq!(b.edges[0].plus, (0, 1));
        assert_eq!(b.edges[0].minus, Some((1, 3)));
        assert!((b.edges[0].length - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn four_triangle_square() {
        let z = 1e-3;
        let (m, s) = square(
            vec![[0.0, 0.0, z], [1.0, 0.0, z], [1.0, 1.0, z], [0.0, 1.0, z], [0.5, 0.5, z]],
            vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
        );
        assert_eq!(build_rwg(&m, &s).unwrap().len(), 4);
    }

    #[test]
    fn non_manifold_rejected() {
        let z = 1e-3;
        let (m, s) = square(
            vec![[0.0, 0.0, z], [1.0, 0.0, z], [0.0, 1.0, z], [0.0, -1.0, z], [0.0, 0.0, 2.0 * z]],
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        );
        assert_eq!(build_rwg(&m, &s), Err(MeshError::NonManifoldEdge(0, 1)));
    }

    #[test]
    fn missing_port_edge_reported() {
        let z = 1e-3;
        let (m, mut s) = square(vec![[0.0, 0.0, z], [1.0, 0.0, z], [1.0, 1.0, z]], vec![[0, 1, 2]]);
        s.ports.push(PortRef { port: 1, probe: 5, feed: 0, feed_edge: 0 });
        assert_eq!(build_rwg(&m, &s), Err(MeshError::PortEdgeNotFound { port: 1 }));
    }

    #[test]
    fn baseline_adjacency_exhaustive() {
        let s = scene(&crate::geometry::PatchDesign::BASELINE);
        let m = triangulate(&s, 1.2).unwrap();
        let b = build_rwg(&m, &s).unwrap();
        // Exhaustive scan: count triangles touching each basis edge.
        for e in &b.edges {
            let touching = m
                .triangles
                .iter()
                .filter(|t| t.contains(&e.vertices[0]) && t.contains(&e.vertices[1]))
                .count();
            let expected = if e.minus.is_some() { 2 } else { 1 };
            assert_eq!(touching, expected);
        }
        let mut seen = std::collections::HashMap::new();
        for t in &m.triangles {
            for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *seen.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        assert!(seen.values().all(|&c| c <= 2));
        let interior = seen.values().filter(|&&c| c == 2).count();
        assert_eq!(b.len(), interior + 4);
        for (p, &idx) in b.port_edges.iter().enumerate() {
            let e = &b.edges[idx];
            assert!(e.minus.is_none());
            assert!(matches!(s.polygons[m.triangle_polygon[e.plus.0]].plane, Plane::Vertical { .. }));
            assert_eq!(s.polygons[m.triangle_polygon[e.plus.0]].element, p);
        }
    }

    #[test]
    fn deterministic_ordering() {
        let s = scene(&crate::geometry::PatchDesign::PUBLISHED_OPTIMUM);
        let a = build_rwg(&triangulate(&s, 1.5).unwrap(), &s).unwrap();
        let b = build_rwg(&triangulate(&s, 1.5).unwrap(), &s).unwrap();
        assert_eq!(a, b);
        assert!(a.edges.windows(2).all(|w| w[0].vertices < w[1].vertices));
    }
}
