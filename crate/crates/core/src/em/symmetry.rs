//! Block diagonalization for scenes that are mirror symmetric about the
//! x = 0 and y = 0 planes.
//!
//! Every basis function is the image of a representative in the (+, +)
//! quadrant under one of the four reflections g = (sx, sy). With the signs
//! of the reflected bases absorbed, the impedance matrix is a group
//! convolution `Z[(g, m), (h, n)] = C_{gh}[m, n]`, and the characters
//! `chi(sx, sy) = sx^a sy^b` split it into four independent blocks
//! `sum_g chi(g) C_g`, each a quarter the size of the full system.

use std::collections::HashMap;

use crate::geometry::{SceneGeometry, ELEMENT_SIGNS};
use crate::mesh::{RwgBasis, TriMesh};

/// Reflection group in the order e, Rx, Ry, RxRy.
pub(crate) const GROUP: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)];

/// Character table: `CHARACTERS[chi][g]`.
pub(crate) const CHARACTERS: [[f64; 4]; 4] =
    [[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, -1.0], [1.0, 1.0, -1.0, -1.0], [1.0, -1.0, -1.0, 1.0]];

#[derive(Debug, Clone)]
pub(crate) struct Symmetry {
    /// Representative bases, ascending.
    pub reps: Vec<usize>,
    /// `orbit[g][i]` = (basis index, sign) of the image of `reps[i]` under g.
    pub orbit: [Vec<(usize, f64)>; 4],
    /// Position in `reps` of the port-carrying representative.
    pub port_rep: usize,
    /// Group element taking the representative element to port p's element.
    pub port_group: [usize; 4],
}

fn group_index(s: (f64, f64)) -> usize {
    GROUP.iter().position(|&g| g == s).unwrap()
}

impl Symmetry {
    /// Detect exact mirror symmetry of the mesh and basis; `None` when the
    /// scene does not have it.
    pub fn detect(mesh: &TriMesh, basis: &RwgBasis, scene: &SceneGeometry) -> Option<Symmetry> {
        if scene.ports.len() != 4 {
            return None;
        }
        let key = |p: [f64; 3]| [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
        let reflect = |p: [f64; 3], g: (f64, f64)| [g.0 * p[0], g.1 * p[1], p[2]];
        let edge_key = |a: [f64; 3], b: [f64; 3]| {
            let (ka, kb) = (key(a), key(b));
            if ka <= kb {
                (ka, kb)
            } else {
                (kb, ka)
            }
        };
        let mut index = HashMap::with_capacity(basis.len());
        for (n, e) in basis.edges.iter().enumerate() {
            index.insert(edge_key(mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]), n);
        }
        let reps: Vec<usize> = basis
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
                a[0] + b[0] > 0.0 && a[1] + b[1] > 0.0
            })
            .map(|(n, _)| n)
            .collect();
        if reps.len() * 4 != basis.len() {
            return None;
        }
        let mut orbit: [Vec<(usize, f64)>; 4] = Default::default();
        for (gi, &g) in GROUP.iter().enumerate() {
            for &n in &reps {
                let e = &basis.edges[n];
                let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
                let &m = index.get(&edge_key(reflect(a, g), reflect(b, g)))?;
                let target = &basis.edges[m];
                let free = key(reflect(mesh.vertices[e.plus.1], g));
                let sign = if key(mesh.vertices[target.plus.1]) == free {
                    1.0
                } else if target.minus.map(|t| key(mesh.vertices[t.1])) == Some(free) {
                    -1.0
                } else {
                    return None;
                };
                if e.minus.is_some() != target.minus.is_some() {
                    return None;
                }
                orbit[gi].push((m, sign));
            }
        }
        // The representative element is the one in the (+, +) quadrant.
        let rep_element = ELEMENT_SIGNS.iter().position(|&s| s == (1.0, 1.0))?;
        let rep_port = basis.port_edges[rep_element];
        let port_rep = reps.iter().position(|&n| n == rep_port)?;
        let mut port_group = [0; 4];
        for p in 0..4 {
            let g = group_index(ELEMENT_SIGNS[p]);
            if orbit[g][port_rep] != (basis.port_edges[p], 1.0) {
                return None;
            }
            port_group[p] = g;
        }
        Some(Symmetry { reps, orbit, port_rep, port_group })
    }
}
