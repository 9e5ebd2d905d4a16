//! Quality triangulation of a single simple polygon.
//!
//! Boundary edges are pre-split to the size bound, the interior is seeded
//! with a triangular lattice, and the Delaunay triangulation is refined in
//! the style of Ruppert: encroached boundary segments are split at their
//! midpoints, then circumcentres of triangles that are too large or too
//! skinny are inserted until every triangle meets both bounds. Insertion is
//! Bowyer-Watson over exact `orient2d`/`incircle` predicates, so the result
//! depends only on the input coordinates.
//!
//! Input corners below 60 degrees get the usual treatment: segments touching
//! them are split on concentric power-of-two shells around the corner, so the
//! two sides meet at equal radii instead of ping-ponging, and skinny
//! triangles whose shortest edge has shrunk below a small floor are left as
//! they are (their angle is forced by the corner).

use std::collections::HashMap;

use crate::geometry::{coord, point_in_polygon, signed_area, Point2};

#[derive(Debug, Clone)]
pub(crate) struct PlanarMesh {
    pub points: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
}

/// Skinny triangles with a shortest edge below this fraction of the size
/// bound are not refined further.
const MIN_EDGE_FRACTION: f64 = 1.0 / 256.0;

struct Delaunay {
    points: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    alive: Vec<bool>,
    dead: usize,
    lookup: HashMap<[u64; 2], usize>,
}

impl Delaunay {
    fn new(lo: Point2, hi: Point2) -> Self {
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let r = 64.0 * span;
        let points = vec![[c[0] - 2.0 * r, c[1] - r], [c[0] + 2.0 * r, c[1] - r], [c[0], c[1] + 2.0 * r]];
        Self { points, triangles: vec![[0, 1, 2]], alive: vec![true], dead: 0, lookup: HashMap::new() }
    }

    fn is_super(&self, v: usize) -> bool {
        v < 3
    }

    /// Insert `p`; returns its index (existing index for duplicates).
    fn insert(&mut self, p: Point2) -> usize {
        let key = [p[0].to_bits(), p[1].to_bits()];
        if let Some(&i) = self.lookup.get(&key) {
            return i;
        }
        let idx = self.points.len();
        self.points.push(p);
        self.lookup.insert(key, idx);

        let pc = coord(p);
        let mut cavity = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if !self.alive[t] {
                continue;
            }
            let [a, b, c] = *tri;
            let inside =
                robust::incircle(coord(self.points[a]), coord(self.points[b]), coord(self.points[c]), pc) > 0.0;
            if inside {
                cavity.push(t);
            }
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for &t in &cavity {
            let [a, b, c] = self.triangles[t];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                *edge_count.entry((u.min(v), u.max(v))).or_default() += 1;
            }
        }
        let mut new_tris = Vec::new();
        for &t in &cavity {
            let [a, b, c] = self.triangles[t];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if edge_count[&(u.min(v), u.max(v))] == 1 {
                    new_tris.push([u, v, idx]);
                }
            }
            self.alive[t] = false;
        }
        self.dead += cavity.len();
        for t in new_tris {
            self.triangles.push(t);
            self.alive.push(true);
        }
        if self.dead > 4 * self.triangles.len() / 5 {
            self.compact();
        }
        idx
    }

    fn compact(&mut self) {
        let mut kept = Vec::with_capacity(self.triangles.len() - self.dead);
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.alive[t] {
                kept.push(*tri);
            }
        }
        self.alive = vec![true; kept.len()];
        self.triangles = kept;
        self.dead = 0;
    }

    fn live(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.triangles.iter().enumerate().filter(|(t, _)| self.alive[*t]).map(|(_, tri)| *tri)
    }
}

fn dist2(a: Point2, b: Point2) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Strictly inside the diametral circle of segment (a, b).
fn encroaches(a: Point2, b: Point2, p: Point2) -> bool {
    (p[0] - a[0]) * (p[0] - b[0]) + (p[1] - a[1]) * (p[1] - b[1]) < 0.0
}

fn segment_distance(a: Point2, b: Point2, p: Point2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist2(p, [a[0] + t * ab[0], a[1] + t * ab[1]]).sqrt()
}

fn circumcenter(a: Point2, b: Point2, c: Point2) -> Point2 {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    [a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d]
}

/// Smallest interior angle in degrees.
pub(crate) fn min_angle_deg(a: Point2, b: Point2, c: Point2) -> f64 {
    let la = dist2(b, c);
    let lb = dist2(a, c);
    let lc = dist2(a, b);
    let angle = |opp: f64, s1: f64, s2: f64| {
        let cos = ((s1 + s2 - opp) / (2.0 * (s1 * s2).sqrt())).clamp(-1.0, 1.0);
        cos.acos().to_degrees()
    };
    angle(la, lb, lc).min(angle(lb, la, lc)).min(angle(lc, la, lb))
}

pub(crate) fn max_edge(a: Point2, b: Point2, c: Point2) -> f64 {
    dist2(a, b).max(dist2(b, c)).max(dist2(c, a)).sqrt()
}

/// Where to split segment `a`-`b`: the midpoint, or, when exactly one end
/// is a sharp corner, the power-of-two distance from that corner nearest to
/// half the length.
fn split_point(a: Point2, b: Point2, sharp: &[Point2]) -> Point2 {
    let at_a = sharp.contains(&a);
    let at_b = sharp.contains(&b);
    if at_a == at_b {
        return [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    }
    let (apex, other) = if at_a { (a, b) } else { (b, a) };
    let len = dist2(apex, other).sqrt();
    let r = 2f64.powf((len / 2.0).log2().round());
    let t = r / len;
    [apex[0] + t * (other[0] - apex[0]), apex[1] + t * (other[1] - apex[1])]
}

/// Interior angle of the polygon at each vertex, degrees.
fn corner_angles(poly: &[Point2]) -> Vec<f64> {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let p = poly[(i + n - 1) % n];
            let q = poly[i];
            let r = poly[(i + 1) % n];
            let a1 = (p[1] - q[1]).atan2(p[0] - q[0]);
            let a2 = (r[1] - q[1]).atan2(r[0] - q[0]);
            let mut ang = (a1 - a2).to_degrees();
            while ang < 0.0 {
                ang += 360.0;
            }
            while ang >= 360.0 {
                ang -= 360.0;
            }
            ang
        })
        .collect()
}

/// Triangulate the counter-clockwise simple polygon `poly` so that every
/// edge is at most `max_edge_len` and every angle at least `min_angle`
/// degrees (angles forced by sharp input corners excepted).
pub(crate) fn mesh_polygon(poly: &[Point2], max_edge_len: f64, min_angle: f64) -> Result<PlanarMesh, String> {
    if poly.len() < 3 {
        return Err("fewer than 3 vertices".into());
    }
    if !(max_edge_len > 0.0) {
        return Err("max edge length must be positive".into());
    }
    let lo = [
        poly.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        poly.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
    ];
    let hi = [
        poly.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
        poly.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
    ];
    let mut dt = Delaunay::new(lo, hi);

    // Boundary, split uniformly to the size bound.
    let n = poly.len();
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut ring = Vec::new();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let len = dist2(a, b).sqrt();
        let parts = ((len / max_edge_len) - 1e-9).ceil().max(1.0) as usize;
        for k in 0..parts {
            let t = k as f64 / parts as f64;
            ring.push(if k == 0 { a } else { [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])] });
        }
    }
    let ring_idx: Vec<usize> = ring.iter().map(|&p| dt.insert(p)).collect();
    for i in 0..ring_idx.len() {
        segments.push((ring_idx[i], ring_idx[(i + 1) % ring_idx.len()]));
    }

    // Interior lattice, kept clear of every boundary diametral circle.
    let spacing = 0.9 * max_edge_len;
    let row = spacing * 3f64.sqrt() / 2.0;
    let clearance = 0.55 * max_edge_len;
    let rows = ((hi[1] - lo[1]) / row).floor() as usize;
    let cols = ((hi[0] - lo[0]) / spacing).floor() as usize + 1;
    for j in 1..=rows {
        let y = lo[1] + j as f64 * row;
        let shift = if j % 2 == 0 { 0.0 } else { spacing / 2.0 };
        for i in 0..=cols {
            let p = [lo[0] + shift + i as f64 * spacing, y];
            if !point_in_polygon(poly, p) {
                continue;
            }
            let clear = (0..n).all(|e| segment_distance(poly[e], poly[(e + 1) % n], p) > clearance);
            if clear {
                dt.insert(p);
            }
        }
    }

    // Vertices of sharp input corners: skinny triangles there are exempt.
    let angles = corner_angles(poly);
    let sharp_pts: Vec<Point2> = (0..n).filter(|&i| angles[i] < 60.0).map(|i| poly[i]).collect();
    let sharp: Vec<usize> = sharp_pts.iter().map(|&p| dt.insert(p)).collect();
    let min_edge = MIN_EDGE_FRACTION * max_edge_len;
    // Generous multiple of the point count a size-bounded mesh needs.
    let area = signed_area(poly).abs();
    let max_insertions = 50 * (ring.len() + (area / (max_edge_len * max_edge_len)).ceil() as usize) + 10_000;

    let mut insertions = 0usize;
    loop {
        if insertions > max_insertions {
            return Err("refinement did not converge".into());
        }
        // 1. Split every encroached segment.
        let mut split_any = false;
        let mut s = 0;
        while s < segments.len() {
            let (a, b) = segments[s];
            let (pa, pb) = (dt.points[a], dt.points[b]);
            let encroached = dt
                .points
                .iter()
                .enumerate()
                .skip(3)
                .any(|(v, &p)| v != a && v != b && encroaches(pa, pb, p));
            if encroached {
                let m = dt.insert(split_point(pa, pb, &sharp_pts));
                segments[s] = (a, m);
                segments.insert(s + 1, (m, b));
                insertions += 1;
                split_any = true;
            } else {
                s += 1;
            }
        }
        if split_any {
            continue;
        }

        // 2. Find the first bad triangle inside the polygon.
        let bad = dt.live().find(|&[a, b, c]| {
            if dt.is_super(a) || dt.is_super(b) || dt.is_super(c) {
                return false;
            }
            let (pa, pb, pc) = (dt.points[a], dt.points[b], dt.points[c]);
            let cen = [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0];
            if !point_in_polygon(poly, cen) {
                return false;
            }
            if max_edge(pa, pb, pc) > max_edge_len * (1.0 + 1e-12) {
                return true;
            }
            if min_angle_deg(pa, pb, pc) >= min_angle {
                return false;
            }
            if dist2(pa, pb).min(dist2(pb, pc)).min(dist2(pc, pa)).sqrt() < min_edge {
                return false;
            }
            // Skinny triangles nested in a sharp input corner are left alone.
            ![a, b, c].iter().any(|v| sharp.contains(v))
        });
        let Some([a, b, c]) = bad else { break };
        let (pa, pb, pc) = (dt.points[a], dt.points[b], dt.points[c]);
        let cc = circumcenter(pa, pb, pc);
        let hit: Vec<usize> = segments
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| encroaches(dt.points[u], dt.points[v], cc))
            .map(|(i, _)| i)
            .collect();
        if !hit.is_empty() {
            for &i in hit.iter().rev() {
                let (u, v) = segments[i];
                let (pu, pv) = (dt.points[u], dt.points[v]);
                let m = dt.insert(split_point(pu, pv, &sharp_pts));
                segments[i] = (u, m);
                segments.insert(i + 1, (m, v));
            }
        } else if point_in_polygon(poly, cc) {
            dt.insert(cc);
        } else {
            // Circumcentre outside but no segment encroached: split the
            // longest edge instead.
            let edges = [(a, b), (b, c), (c, a)];
            let &(u, v) = edges
                .iter()
                .max_by(|x, y| {
                    dist2(dt.points[x.0], dt.points[x.1]).partial_cmp(&dist2(dt.points[y.0], dt.points[y.1])).unwrap()
                })
                .unwrap();
            let (pu, pv) = (dt.points[u], dt.points[v]);
            let seg = segments.iter().position(|&s| s == (u, v) || s == (v, u));
            let m = if seg.is_some() {
                dt.insert(split_point(pu, pv, &sharp_pts))
            } else {
                dt.insert([(pu[0] + pv[0]) / 2.0, (pu[1] + pv[1]) / 2.0])
            };
            if let Some(i) = seg {
                let (s0, s1) = segments[i];
                segments[i] = (s0, m);
                segments.insert(i + 1, (m, s1));
            }
        }
        insertions += 1;
    }

    // Collect interior triangles and renumber the used points.
    let mut remap = vec![usize::MAX; dt.points.len()];
    let mut points = Vec::new();
    let mut triangles = Vec::new();
    for [a, b, c] in dt.live() {
        if dt.is_super(a) || dt.is_super(b) || dt.is_super(c) {
            continue;
        }
        let (pa, pb, pc) = (dt.points[a], dt.points[b], dt.points[c]);
        let cen = [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0];
        if !point_in_polygon(poly, cen) {
            continue;
        }
        let mut tri = [0; 3];
        for (k, v) in [a, b, c].into_iter().enumerate() {
            if remap[v] == usize::MAX {
                remap[v] = points.len();
                points.push(dt.points[v]);
            }
            tri[k] = remap[v];
        }
        triangles.push(tri);
    }
    if triangles.is_empty() {
        return Err("no interior triangles".into());
    }
    Ok(PlanarMesh { points, triangles })
}
