//! Parametric geometry of the 2x2 proximity-fed concave patch array.
//!
//! All lengths in this module are millimetres. The layer stack is
//! ground (z = 0) / dielectric `d1` / feed layer (z = d1) / dielectric `d2` /
//! patch layer (z = d1 + d2).
//!
//! Elements and ports are numbered row by row, looking down on the array:
//!
//! ```text
//!        y
//!        ^
//!   1    |    2        port 1: (-dx/2, +dy/2)   port 2: (+dx/2, +dy/2)
//!  ------+------> x
//!   3    |    4        port 3: (-dx/2, -dy/2)   port 4: (+dx/2, -dy/2)
//! ```
//!
//! Reflection x -> -x swaps ports 1<->2 and 3<->4, reflection y -> -y swaps
//! ports 1<->3 and 2<->4. Every element is the exact (bitwise) mirror image
//! of element 2, which lives in the positive quadrant.

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

pub type Point2 = [f64; 2];

/// Number of elements along each array axis.
pub const ARRAY_SIZE: usize = 2;
pub const PORT_COUNT: usize = ARRAY_SIZE * ARRAY_SIZE;

/// Reflection signs (x, y) that carry the positive-quadrant element onto
/// element `index` (0-based port order).
pub const ELEMENT_SIGNS: [(f64, f64); PORT_COUNT] = [(-1.0, 1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StackUp {
    /// Ground to feed layer, mm.
    pub d1: f64,
    /// Feed layer to patch layer, mm.
    pub d2: f64,
    pub eps_r: f64,
    pub mu_r: f64,
}

impl Default for StackUp {
    fn default() -> Self {
        Self { d1: 0.5, d2: 0.5, eps_r: 3.0, mu_r: 1.0 }
    }
}

impl StackUp {
    pub fn validate(&self) -> Result<(), GeometryError> {
        check(self.d1 > 0.0, "stack.d1", format!("must be > 0 (got {})", self.d1))?;
        check(self.d2 > 0.0, "stack.d2", format!("must be > 0 (got {})", self.d2))?;
        check(self.eps_r >= 1.0, "stack.eps_r", format!("must be >= 1 (got {})", self.eps_r))?;
        check(self.mu_r >= 1.0, "stack.mu_r", format!("must be >= 1 (got {})", self.mu_r))?;
        Ok(())
    }

    pub fn feed_z(&self) -> f64 {
        self.d1
    }

    pub fn patch_z(&self) -> f64 {
        self.d1 + self.d2
    }
}

/// The five design variables of one (concave) patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchDesign {
    /// Patch width along x, mm.
    pub w: f64,
    /// Patch length along y (resonant dimension), mm.
    pub l: f64,
    /// Notch depth on the two sides of length `w`, mm.
    pub h1: f64,
    /// Notch depth on the two sides of length `l`, mm.
    pub h2: f64,
    /// Overlap of the feed line under the patch, measured along y, mm.
    pub ins: f64,
}

impl PatchDesign {
    /// Rectangular reference patch of the baseline array.
    pub const BASELINE: PatchDesign = PatchDesign { w: 11.55, l: 9.45, h1: 0.0, h2: 0.0, ins: 2.5 };

    /// Published optimum of the concave array.
    pub const PUBLISHED_OPTIMUM: PatchDesign = PatchDesign { w: 9.213, l: 10.103, h1: 1.527, h2: 1.601, ins: 2.531 };

    pub fn validate(&self) -> Result<(), GeometryError> {
        check(self.w > 0.0, "design.w", format!("must be > 0 (got {})", self.w))?;
        check(self.l > 0.0, "design.l", format!("must be > 0 (got {})", self.l))?;
        check(
            self.h1 >= 0.0 && self.h1 < self.l / 2.0,
            "design.h1",
            format!("must satisfy 0 <= h1 < L/2 = {} (got {})", self.l / 2.0, self.h1),
        )?;
        check(
            self.h2 >= 0.0 && self.h2 < self.w / 2.0,
            "design.h2",
            format!("must satisfy 0 <= h2 < W/2 = {} (got {})", self.w / 2.0, self.h2),
        )?;
        check(
            self.ins >= 0.0 && self.ins <= self.l,
            "design.ins",
            format!("must satisfy 0 <= ins <= L = {} (got {})", self.l, self.ins),
        )?;
        Ok(())
    }

    /// Area of the concave outline, W*L - W*h1 - L*h2.
    pub fn area(&self) -> f64 {
        self.w * self.l - self.w * self.h1 - self.l * self.h2
    }

    pub fn with_concavity(mut self, h1: f64, h2: f64) -> Self {
        self.h1 = h1;
        self.h2 = h2;
        self
    }
}

impl Default for PatchDesign {
    fn default() -> Self {
        Self::BASELINE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayLayout {
    /// Centre-to-centre spacing along x, mm.
    pub dx: f64,
    /// Centre-to-centre spacing along y, mm.
    pub dy: f64,
}

impl Default for ArrayLayout {
    fn default() -> Self {
        Self { dx: 14.08, dy: 20.55 }
    }
}

impl ArrayLayout {
    pub fn validate(&self, design: &PatchDesign) -> Result<(), GeometryError> {
        check(self.dx > 0.0, "layout.dx", format!("must be > 0 (got {})", self.dx))?;
        check(self.dy > 0.0, "layout.dy", format!("must be > 0 (got {})", self.dy))?;
        check(
            self.dx > design.w,
            "layout.dx",
            format!("element footprints overlap along x: dx = {} must exceed W = {}", self.dx, design.w),
        )?;
        check(
            self.dy > design.l,
            "layout.dy",
            format!("element footprints overlap along y: dy = {} must exceed L = {}", self.dy, design.l),
        )?;
        Ok(())
    }

    /// Centre of element `index` (0-based port order).
    pub fn element_center(&self, index: usize) -> Point2 {
        let (sx, sy) = ELEMENT_SIGNS[index];
        [sx * self.dx / 2.0, sy * self.dy / 2.0]
    }
}

/// L-shaped proximity feed. The terminal leg runs along -y under the patch,
/// the second leg runs outward along x and ends at the vertical port probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedSpec {
    /// Strip width, mm.
    pub trace_width: f64,
    /// Terminal-leg length from the patch edge to the bend centreline, mm.
    pub leg1_len: f64,
    /// Second-leg length from the terminal-leg centreline to the probe, mm.
    pub leg2_len: f64,
}

impl FeedSpec {
    pub const DEFAULT_LEG1: f64 = 6.0;
    pub const DEFAULT_LEG2: f64 = 8.0;

    /// Default feed whose strip width is synthesized for a 50 ohm line on
    /// the lower dielectric.
    pub fn synthesized(stack: &StackUp) -> Self {
        Self {
            trace_width: microstrip_width(50.0, stack.eps_r, stack.d1),
            leg1_len: Self::DEFAULT_LEG1,
            leg2_len: Self::DEFAULT_LEG2,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        check(self.trace_width > 0.0, "feed.trace_width", format!("must be > 0 (got {})", self.trace_width))?;
        check(
            self.leg1_len > self.trace_width / 2.0,
            "feed.leg1_len",
            format!("must exceed half the trace width (got {})", self.leg1_len),
        )?;
        check(
            self.leg2_len > self.trace_width / 2.0,
            "feed.leg2_len",
            format!("must exceed half the trace width (got {})", self.leg2_len),
        )?;
        Ok(())
    }
}

/// Microstrip strip width (same unit as `height`) giving characteristic
/// impedance `z0` on a substrate of permittivity `eps_r`.
///
/// Wheeler/Hammerstad synthesis: with
/// `A = z0/60 * sqrt((er+1)/2) + (er-1)/(er+1) * (0.23 + 0.11/er)`,
/// `w/h = 8 e^A / (e^{2A} - 2)` when that ratio is below 2, otherwise
/// `B = 377 pi / (2 z0 sqrt(er))` and
/// `w/h = 2/pi [B - 1 - ln(2B-1) + (er-1)/(2er) (ln(B-1) + 0.39 - 0.61/er)]`.
pub fn microstrip_width(z0: f64, eps_r: f64, height: f64) -> f64 {
    let a = z0 / 60.0 * ((eps_r + 1.0) / 2.0).sqrt() + (eps_r - 1.0) / (eps_r + 1.0) * (0.23 + 0.11 / eps_r);
    let narrow = 8.0 * a.exp() / ((2.0 * a).exp() - 2.0);
    let ratio = if narrow < 2.0 {
        narrow
    } else {
        let b = 377.0 * std::f64::consts::PI / (2.0 * z0 * eps_r.sqrt());
        2.0 / std::f64::consts::PI
            * (b - 1.0 - (2.0 * b - 1.0).ln()
                + (eps_r - 1.0) / (2.0 * eps_r) * ((b - 1.0).ln() + 0.39 - 0.61 / eps_r))
    };
    ratio * height
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConductorRole {
    Patch,
    Feed,
    Probe,
}

/// Plane a polygon lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Plane {
    /// Vertices are (x, y) at height `z`.
    Horizontal { z: f64 },
    /// Vertical plane through `origin` containing the unit horizontal
    /// `direction`; vertices are (s, z) with world point
    /// `origin + s * direction` at height `z`.
    Vertical { origin: Point2, direction: Point2 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
    pub plane: Plane,
    pub label: ConductorRole,
    /// Array element (0-based port order) the conductor belongs to.
    pub element: usize,
}

impl Polygon {
    pub fn horizontal(vertices: Vec<Point2>, z: f64, label: ConductorRole, element: usize) -> Self {
        Self { vertices, plane: Plane::Horizontal { z }, label, element }
    }

    /// Signed shoelace area, positive for counter-clockwise vertex order.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn z(&self) -> Option<f64> {
        match self.plane {
            Plane::Horizontal { z } => Some(z),
            Plane::Vertical { .. } => None,
        }
    }

    pub fn edge(&self, index: usize) -> (Point2, Point2) {
        let n = self.vertices.len();
        (self.vertices[index % n], self.vertices[(index + 1) % n])
    }

    /// Lift an in-plane point to world coordinates (mm).
    pub fn to_world(&self, p: Point2) -> [f64; 3] {
        match self.plane {
            Plane::Horizontal { z } => [p[0], p[1], z],
            Plane::Vertical { origin, direction } => {
                [origin[0] + p[0] * direction[0], origin[1] + p[0] * direction[1], p[1]]
            }
        }
    }

    /// Mirror image under x -> sx*x, y -> sy*y, keeping counter-clockwise
    /// order in the polygon's own frame.
    pub fn reflected(&self, sx: f64, sy: f64, element: usize) -> Polygon {
        match self.plane {
            Plane::Horizontal { z } => {
                let mut vertices: Vec<Point2> = self.vertices.iter().map(|p| [sx * p[0], sy * p[1]]).collect();
                if sx * sy < 0.0 {
                    vertices.reverse();
                }
                Polygon { vertices, plane: Plane::Horizontal { z }, label: self.label, element }
            }
            // (s, z) coordinates are unchanged; the frame itself is mirrored.
            Plane::Vertical { origin, direction } => Polygon {
                vertices: self.vertices.clone(),
                plane: Plane::Vertical {
                    origin: [sx * origin[0], sy * origin[1]],
                    direction: [sx * direction[0], sy * direction[1]],
                },
                label: self.label,
                element,
            },
        }
    }

    /// Strict point-in-polygon test (even-odd rule); boundary points are
    /// reported as outside.
    pub fn contains(&self, p: Point2) -> bool {
        point_in_polygon(&self.vertices, p)
    }

    /// First self-intersection found, as a pair of edge indices.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = self.edge(i);
                let (c, d) = self.edge(j);
                if segments_intersect(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

pub fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc / 2.0
}

pub(crate) fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

pub(crate) fn coord(p: Point2) -> robust::Coord<f64> {
    robust::Coord { x: p[0], y: p[1] }
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed segment intersection (touching counts).
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn segments_cross_properly(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

pub fn point_in_polygon(vertices: &[Point2], p: Point2) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if orient(a, b, p) == 0.0 && on_segment(a, b, p) {
            return false;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// True when the interiors of two simple polygons intersect.
pub fn polygons_overlap(a: &[Point2], b: &[Point2]) -> bool {
    let (na, nb) = (a.len(), b.len());
    for i in 0..na {
        for j in 0..nb {
            if segments_cross_properly(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb]) {
                return true;
            }
        }
    }
    // Containment, or boundaries that coincide without crossing: probe with
    // vertices and edge midpoints.
    fn probes(poly: &[Point2]) -> impl Iterator<Item = Point2> + '_ {
        let n = poly.len();
        (0..n).flat_map(move |i| {
            let p = poly[i];
            let q = poly[(i + 1) % n];
            [p, [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]]
        })
    }
    if probes(a).any(|p| point_in_polygon(b, p)) || probes(b).any(|p| point_in_polygon(a, p)) {
        return true;
    }
    let ca = centroid(a);
    let cb = centroid(b);
    point_in_polygon(b, ca) && point_in_polygon(a, ca) || point_in_polygon(a, cb) && point_in_polygon(b, cb)
}

fn centroid(v: &[Point2]) -> Point2 {
    let n = v.len() as f64;
    [v.iter().map(|p| p[0]).sum::<f64>() / n, v.iter().map(|p| p[1]).sum::<f64>() / n]
}

/// Concave patch outline centred at the origin.
///
/// The two sides of length W (parallel to x) get a V notch of depth `h1`
/// with its apex at the side midpoint; the two sides of length L get depth
/// `h2`. Zero-depth apexes are omitted, so a plain rectangle has 4 vertices.
/// Vertices run counter-clockwise from (-W/2, -L/2).
pub fn concave_outline(design: &PatchDesign) -> Result<Polygon, GeometryError> {
    design.validate()?;
    let (hw, hl) = (design.w / 2.0, design.l / 2.0);
    let mut v = Vec::with_capacity(8);
    v.push([-hw, -hl]);
    if design.h1 > 0.0 {
        v.push([0.0, -hl + design.h1]);
    }
    v.push([hw, -hl]);
    if design.h2 > 0.0 {
        v.push([hw - design.h2, 0.0]);
    }
    v.push([hw, hl]);
    if design.h1 > 0.0 {
        v.push([0.0, hl - design.h1]);
    }
    v.push([-hw, hl]);
    if design.h2 > 0.0 {
        v.push([-hw + design.h2, 0.0]);
    }
    Ok(Polygon::horizontal(v, 0.0, ConductorRole::Patch, 0))
}

/// Index of the feed-polygon edge the port probe attaches to.
pub const FEED_PROBE_EDGE: usize = 3;

/// L-shaped feed of element `element_index`, at z = d1.
///
/// For the positive-quadrant element the terminal leg is centred on the
/// patch centreline x = dx/2 and runs from the tip (ins inside the patch
/// footprint) up to the bend; the second leg runs toward +x and ends at the
/// probe edge (edge [`FEED_PROBE_EDGE`]). Other elements are mirror images.
pub fn feed_outline(
    design: &PatchDesign,
    feed: &FeedSpec,
    layout: &ArrayLayout,
    stack: &StackUp,
    element_index: usize,
) -> Result<Polygon, GeometryError> {
    design.validate()?;
    feed.validate()?;
    if element_index >= PORT_COUNT {
        return Err(GeometryError::Invalid { key: "element_index".into(), message: format!("{element_index} >= 4") });
    }
    let [cx, cy] = layout.element_center(1);
    let hw = feed.trace_width / 2.0;
    let tip = cy + design.l / 2.0 - design.ins;
    let bend = cy + design.l / 2.0 + feed.leg1_len;
    let end = cx + feed.leg2_len;
    let canonical = Polygon::horizontal(
        vec![
            [cx - hw, tip],
            [cx + hw, tip],
            [cx + hw, bend - hw],
            [end, bend - hw],
            [end, bend + hw],
            [cx - hw, bend + hw],
        ],
        stack.feed_z(),
        ConductorRole::Feed,
        1,
    );
    // The probe sits at x = end; it must clear the patch footprint.
    if end - cx <= design.w / 2.0 && bend - hw <= cy + design.l / 2.0 {
        return Err(GeometryError::ProbeUnderPatch { element: element_index });
    }
    let (sx, sy) = ELEMENT_SIGNS[element_index];
    let reflected = canonical.reflected(sx, sy, element_index);
    // Reversal for a single reflection shifts the probe edge; rotate it back
    // so that FEED_PROBE_EDGE is valid for every element.
    Ok(if sx * sy < 0.0 { rotate_to_edge(reflected, 1) } else { reflected })
}

// After reversal, old edge k becomes edge (n - 2 - k) mod n. For the
// 6-vertex feed and k = 3 that is edge 1, so rotate by (1 - 3) mod 6.
fn rotate_to_edge(mut poly: Polygon, current: usize) -> Polygon {
    let n = poly.vertices.len();
    let shift = (current + n - FEED_PROBE_EDGE) % n;
    poly.vertices.rotate_left(shift);
    poly
}

/// Vertical port strip under the probe edge of `feed`, from ground to d1.
pub fn probe_outline(feed: &Polygon, stack: &StackUp) -> Polygon {
    let (a, b) = feed.edge(FEED_PROBE_EDGE);
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let direction = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
    Polygon {
        vertices: vec![[0.0, 0.0], [len, 0.0], [len, stack.d1], [0.0, stack.d1]],
        plane: Plane::Vertical { origin: a, direction },
        label: ConductorRole::Probe,
        element: feed.element,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortRef {
    /// 1-based port number.
    pub port: usize,
    /// Index of the probe polygon in [`SceneGeometry::polygons`].
    pub probe: usize,
    /// Index of the feed polygon the probe attaches to.
    pub feed: usize,
    /// Edge of the feed polygon shared with the probe's top edge.
    pub feed_edge: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGeometry {
    pub stack: StackUp,
    /// Patches (elements 0..4), then feeds, then probes.
    pub polygons: Vec<Polygon>,
    pub ports: Vec<PortRef>,
}

/// Assemble the full 2x2 array: patches at (+-dx/2, +-dy/2) with their feeds
/// and port probes, mirror symmetric about both axes.
pub fn build_scene(
    design: &PatchDesign,
    layout: &ArrayLayout,
    feed: &FeedSpec,
    stack: &StackUp,
) -> Result<SceneGeometry, GeometryError> {
    stack.validate()?;
    design.validate()?;
    layout.validate(design)?;
    feed.validate()?;
    if feed.trace_width / 2.0 >= layout.dx / 2.0 {
        return Err(GeometryError::Invalid {
            key: "feed.trace_width".into(),
            message: "feed strip would cross the array symmetry plane".into(),
        });
    }

    let outline = concave_outline(design)?;
    let [cx, cy] = layout.element_center(1);
    let canonical_patch = Polygon::horizontal(
        outline.vertices.iter().map(|p| [p[0] + cx, p[1] + cy]).collect(),
        stack.patch_z(),
        ConductorRole::Patch,
        1,
    );

    let mut patches = Vec::with_capacity(PORT_COUNT);
    let mut feeds = Vec::with_capacity(PORT_COUNT);
    let mut probes = Vec::with_capacity(PORT_COUNT);
    for (e, &(sx, sy)) in ELEMENT_SIGNS.iter().enumerate() {
        patches.push(canonical_patch.reflected(sx, sy, e));
        let f = feed_outline(design, feed, layout, stack, e)?;
        probes.push(probe_outline(&f, stack));
        feeds.push(f);
    }
    let mut polygons = patches;
    polygons.extend(feeds);
    polygons.extend(probes);
    let ports = (0..PORT_COUNT)
        .map(|e| PortRef { port: e + 1, probe: 2 * PORT_COUNT + e, feed: PORT_COUNT + e, feed_edge: FEED_PROBE_EDGE })
        .collect();
    let scene = SceneGeometry { stack: *stack, polygons, ports };

    let violations = validate_scene(&scene);
    if let Some(v) = violations.into_iter().next() {
        return Err(GeometryError::Scene(v));
    }
    Ok(scene)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooFewVertices { polygon: usize },
    DuplicateVertex { polygon: usize, vertex: usize },
    NotCounterClockwise { polygon: usize },
    SelfIntersection { polygon: usize, edges: (usize, usize) },
    WrongLayer { polygon: usize, expected: f64 },
    Overlap { first: usize, second: usize },
    ProbeUnderPatch { probe: usize, patch: usize },
    BadPortReference { port: usize },
    PortCount { found: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::TooFewVertices { polygon } => write!(f, "polygon {polygon} has fewer than 3 vertices"),
            Violation::DuplicateVertex { polygon, vertex } => {
                write!(f, "polygon {polygon} repeats vertex {vertex}")
            }
            Violation::NotCounterClockwise { polygon } => write!(f, "polygon {polygon} is not counter-clockwise"),
            Violation::SelfIntersection { polygon, edges } => {
                write!(f, "polygon {polygon} self-intersects at edges {} and {}", edges.0, edges.1)
            }
            Violation::WrongLayer { polygon, expected } => {
                write!(f, "polygon {polygon} is not on its layer (expected z = {expected} mm)")
            }
            Violation::Overlap { first, second } => write!(f, "polygons {first} and {second} overlap on one layer"),
            Violation::ProbeUnderPatch { probe, patch } => write!(f, "probe {probe} lies under patch {patch}"),
            Violation::BadPortReference { port } => write!(f, "port {port} references a missing probe or feed"),
            Violation::PortCount { found } => write!(f, "scene has {found} ports, expected 4"),
        }
    }
}

/// Collect every reason the scene cannot be simulated. Never fails.
pub fn validate_scene(scene: &SceneGeometry) -> Vec<Violation> {
    let mut out = Vec::new();
    let stack = &scene.stack;
    for (i, poly) in scene.polygons.iter().enumerate() {
        let n = poly.vertices.len();
        if n < 3 {
            out.push(Violation::TooFewVertices { polygon: i });
            continue;
        }
        if let Some(k) = (0..n).find(|&k| poly.vertices[k] == poly.vertices[(k + 1) % n]) {
            out.push(Violation::DuplicateVertex { polygon: i, vertex: k });
        }
        if poly.signed_area() <= 0.0 {
            out.push(Violation::NotCounterClockwise { polygon: i });
        }
        if let Some(edges) = poly.self_intersection() {
            out.push(Violation::SelfIntersection { polygon: i, edges });
        }
        match (poly.label, poly.plane) {
            (ConductorRole::Patch, Plane::Horizontal { z }) if z == stack.patch_z() => {}
            (ConductorRole::Feed, Plane::Horizontal { z }) if z == stack.feed_z() => {}
            (ConductorRole::Probe, Plane::Vertical { .. }) => {
                let zmin = poly.vertices.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
                let zmax = poly.vertices.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
                if zmin != 0.0 || zmax != stack.d1 {
                    out.push(Violation::WrongLayer { polygon: i, expected: stack.d1 });
                }
            }
            (ConductorRole::Patch, _) => out.push(Violation::WrongLayer { polygon: i, expected: stack.patch_z() }),
            (ConductorRole::Feed, _) => out.push(Violation::WrongLayer { polygon: i, expected: stack.feed_z() }),
            (ConductorRole::Probe, _) => out.push(Violation::WrongLayer { polygon: i, expected: stack.d1 }),
        }
    }

    let horizontal: Vec<(usize, &Polygon)> = scene
        .polygons
        .iter()
        .enumerate()
        .filter(|(_, p)| p.vertices.len() >= 3 && p.z().is_some())
        .collect();
    for (a, (i, pi)) in horizontal.iter().enumerate() {
        for (j, pj) in horizontal.iter().skip(a + 1) {
            if pi.z() == pj.z() && polygons_overlap(&pi.vertices, &pj.vertices) {
                out.push(Violation::Overlap { first: *i, second: *j });
            }
        }
    }

    for (i, probe) in scene.polygons.iter().enumerate() {
        if probe.label != ConductorRole::Probe || probe.vertices.len() < 2 {
            continue;
        }
        let base: Vec<Point2> = probe
            .vertices
            .iter()
            .map(|&p| {
                let w = probe.to_world([p[0], 0.0]);
                [w[0], w[1]]
            })
            .collect();
        for (j, patch) in scene.polygons.iter().enumerate() {
            if patch.label != ConductorRole::Patch {
                continue;
            }
            let under = base.iter().any(|&p| patch.contains(p))
                || base.windows(2).any(|s| {
                    let m = [(s[0][0] + s[1][0]) / 2.0, (s[0][1] + s[1][1]) / 2.0];
                    patch.contains(m)
                });
            if under {
                out.push(Violation::ProbeUnderPatch { probe: i, patch: j });
            }
        }
    }

    for port in &scene.ports {
        let ok = scene.polygons.get(port.probe).is_some_and(|p| p.label == ConductorRole::Probe)
            && scene
                .polygons
                .get(port.feed)
                .is_some_and(|p| p.label == ConductorRole::Feed && port.feed_edge < p.vertices.len());
        if !ok {
            out.push(Violation::BadPortReference { port: port.port });
        }
    }
    if scene.ports.len() != PORT_COUNT {
        out.push(Violation::PortCount { found: scene.ports.len() });
    }
    out
}

/// JSON geometry export. Keys:
/// `stack` {d1, d2, eps_r, mu_r} (mm); `polygons`: list of
/// {index, label, element, plane, vertices_mm, world_vertices_mm};
/// `ports`: list of {port, probe, feed, feed_edge}.
pub fn scene_to_json(scene: &SceneGeometry) -> serde_json::Value {
    let polygons: Vec<serde_json::Value> = scene
        .polygons
        .iter()
        .enumerate()
        .map(|(i, p)| {
            serde_json::json!({
                "index": i,
                "label": p.label,
                "element": p.element,
                "plane": p.plane,
                "vertices_mm": p.vertices,
                "world_vertices_mm": p.vertices.iter().map(|&v| p.to_world(v)).collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::json!({
        "stack": scene.stack,
        "polygons": polygons,
        "ports": scene.ports,
    })
}

fn check(ok: bool, key: &str, message: String) -> Result<(), GeometryError> {
    if ok {
        Ok(())
    } else {
        Err(GeometryError::Invalid { key: key.to_string(), message })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn baseline_scene() -> SceneGeometry {
        let stack = StackUp::default();
        build_scene(&PatchDesign::BASELINE, &ArrayLayout::default(), &FeedSpec::synthesized(&stack), &stack).unwrap()
    }

    // Shoelace evaluated independently of `signed_area`.
    fn shoelace(v: &[Point2]) -> f64 {
        let mut s = 0.0;
        for k in 0..v.len() {
            let (a, b) = (v[k], v[(k + 1) % v.len()]);
            s += (b[0] - a[0]) * (b[1] + a[1]);
        }
        -s / 2.0
    }

    #[test]
    fn rectangle_outline() {
        let d = PatchDesign { w: 11.55, l: 9.45, h1: 0.0, h2: 0.0, ins: 0.0 };
        let p = concave_outline(&d).unwrap();
        assert_eq!(p.vertices, vec![[-5.775, -4.725], [5.775, -4.725], [5.775, 4.725], [-5.775, 4.725]]);
        assert!((p.area() - 109.1475).abs() < 1e-9);
    }

    #[test]
    fn width_notch_outline() {
        let d = PatchDesign { w: 11.55, l: 9.45, h1: 1.0, h2: 0.0, ins: 0.0 };
        let p = concave_outline(&d).unwrap();
        assert_eq!(p.vertices.len(), 6);
        assert!((shoelace(&p.vertices) - 97.5975).abs() < 1e-9);
    }

    #[test]
    fn published_optimum_outline() {
        let p = concave_outline(&PatchDesign::PUBLISHED_OPTIMUM).unwrap();
        assert_eq!(p.vertices.len(), 8);
        let expected = 9.213 * 10.103 - 9.213 * 1.527 - 10.103 * 1.601;
        assert!((shoelace(&p.vertices) - expected).abs() < 1e-9);
        assert!((expected - 62.836).abs() < 1e-3);
        assert!(p.self_intersection().is_none());
    }

    #[test]
    fn notch_bounds_rejected() {
        let d = PatchDesign { h1: 9.45 / 2.0, ..PatchDesign::BASELINE };
        let err = concave_outline(&d).unwrap_err();
        assert!(err.to_string().contains("design.h1"), "{err}");
        let d = PatchDesign { h2: 11.55 / 2.0, ..PatchDesign::BASELINE };
        assert!(concave_outline(&d).unwrap_err().to_string().contains("design.h2"));
    }

    #[test]
    fn feed_tip_flush_at_zero_overlap() {
        let stack = StackUp::default();
        let layout = ArrayLayout::default();
        let feed = FeedSpec::synthesized(&stack);
        let d = PatchDesign { ins: 0.0, ..PatchDesign::BASELINE };
        let f = feed_outline(&d, &feed, &layout, &stack, 1).unwrap();
        let patch_top = layout.dy / 2.0 + d.l / 2.0;
        let tip = f.vertices.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        assert_eq!(tip, patch_top);
    }

    #[test]
    fn feed_mirror_pairs() {
        let stack = StackUp::default();
        let layout = ArrayLayout::default();
        let feed = FeedSpec::synthesized(&stack);
        let d = PatchDesign::BASELINE;
        let f0 = feed_outline(&d, &feed, &layout, &stack, 0).unwrap();
        let f1 = feed_outline(&d, &feed, &layout, &stack, 1).unwrap();
        let mut mirrored: Vec<Point2> = f1.vertices.iter().map(|p| [-p[0], p[1]]).collect();
        mirrored.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut v0 = f0.vertices.clone();
        v0.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(mirrored, v0);
        // Probe edge is the same physical edge in every element.
        for e in 0..4 {
            let f = feed_outline(&d, &feed, &layout, &stack, e).unwrap();
            let (a, b) = f.edge(FEED_PROBE_EDGE);
            assert_eq!(a[0], b[0], "probe edge of element {e} must be perpendicular to x");
            assert!(a[0].abs() > layout.dx / 2.0 + 1.0);
        }
    }

    #[test]
    fn trace_width_synthesis() {
        // 50 ohm on eps_r = 3, h = 0.5 mm: w/h ~ 2.51.
        let w = microstrip_width(50.0, 3.0, 0.5);
        assert!((w - 1.257).abs() < 5e-3, "{w}");
        // Alumina reference: 50 ohm on eps_r = 9.8 is w/h ~ 0.95.
        let w = microstrip_width(50.0, 9.8, 1.0);
        assert!((w - 0.95).abs() < 0.03, "{w}");
    }

    #[test]
    fn baseline_scene_layout() {
        let scene = baseline_scene();
        assert_eq!(scene.polygons.len(), 12);
        assert!(validate_scene(&scene).is_empty());
        let layout = ArrayLayout::default();
        let gap = layout.dx - PatchDesign::BASELINE.w;
        assert!((gap - 2.53).abs() < 1e-12);
        let xs: Vec<f64> = scene.polygons[1].vertices.iter().map(|p| p[0]).collect();
        let xmin = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((2.0 * xmin - gap).abs() < 1e-12);
    }

    #[test]
    fn scene_mirror_invariance() {
        let scene = baseline_scene();
        let key = |p: &Polygon| {
            let mut pts: Vec<[u64; 3]> = p
                .vertices
                .iter()
                .map(|&v| {
                    let w = p.to_world(v);
                    [w[0].to_bits(), w[1].to_bits(), w[2].to_bits()]
                })
                .collect();
            pts.sort();
            pts
        };
        for (sx, sy, perm) in [(-1.0, 1.0, [1, 0, 3, 2]), (1.0, -1.0, [2, 3, 0, 1])] {
            for (i, p) in scene.polygons.iter().enumerate() {
                let img = p.reflected(sx, sy, p.element);
                let e = perm[p.element];
                let base = i - i % 4;
                assert_eq!(key(&img), key(&scene.polygons[base + e]), "polygon {i}");
            }
        }
    }

    #[test]
    fn zero_gap_rejected() {
        let stack = StackUp::default();
        let layout = ArrayLayout { dx: 11.55, dy: 20.55 };
        let err = build_scene(&PatchDesign::BASELINE, &layout, &FeedSpec::synthesized(&stack), &stack).unwrap_err();
        assert!(err.to_string().contains("layout.dx"), "{err}");
    }

    #[test]
    fn three_ports_reported() {
        let mut scene = baseline_scene();
        scene.ports.pop();
        assert_eq!(validate_scene(&scene), vec![Violation::PortCount { found: 3 }]);
    }

    #[test]
    fn translated_patch_overlap_reported() {
        let mut scene = baseline_scene();
        // Shift patch 0 (top-left) onto patch 1 (top-right) partially.
        for v in &mut scene.polygons[0].vertices {
            v[0] += 6.0;
        }
        let v = validate_scene(&scene);
        assert_eq!(v, vec![Violation::Overlap { first: 0, second: 1 }]);
        // Overlapping two pairs gives one violation per pair.
        for v in &mut scene.polygons[2].vertices {
            v[0] += 6.0;
        }
        let v = validate_scene(&scene);
        assert_eq!(
            v,
            vec![Violation::Overlap { first: 0, second: 1 }, Violation::Overlap { first: 2, second: 3 }]
        );
    }

    #[test]
    fn json_export_keys() {
        let scene = baseline_scene();
        let j = scene_to_json(&scene);
        assert_eq!(j["polygons"].as_array().unwrap().len(), 12);
        assert_eq!(j["ports"].as_array().unwrap().len(), 4);
        assert_eq!(j["polygons"][8]["plane"]["kind"], "vertical");
        assert_eq!(j["stack"]["eps_r"], 3.0);
    }

    fn valid_design() -> impl Strategy<Value = PatchDesign> {
        (5.0..15.0f64, 5.0..15.0f64, 0.0..0.999f64, 0.0..0.999f64, 0.0..1.0f64).prop_map(|(w, l, a, b, c)| {
            PatchDesign { w, l, h1: a * l / 2.0, h2: b * w / 2.0, ins: c * l }
        })
    }

    proptest! {
        #[test]
        fn outline_area_identity(d in valid_design()) {
            let p = concave_outline(&d).unwrap();
            prop_assert!((shoelace(&p.vertices) - d.area()).abs() <= 1e-9);
            prop_assert!(p.signed_area() > 0.0);
            prop_assert!(p.self_intersection().is_none());
        }

        #[test]
        fn area_decreases_with_depth(d in valid_design(), t in 0.01..0.5f64) {
            let deeper1 = PatchDesign { h1: d.h1 + t * (d.l / 2.0 - d.h1), ..d };
            let deeper2 = PatchDesign { h2: d.h2 + t * (d.w / 2.0 - d.h2), ..d };
            let a = concave_outline(&d).unwrap().area();
            prop_assert!(concave_outline(&deeper1).unwrap().area() < a);
            prop_assert!(concave_outline(&deeper2).unwrap().area() < a);
        }
    }
}
