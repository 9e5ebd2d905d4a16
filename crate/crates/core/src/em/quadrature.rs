//! Symmetric Dunavant rules on the triangle, in barycentric coordinates
//! with weights normalized to sum to one.

/// (barycentric coordinates, weight)
pub type QuadPoint = ([f64; 3], f64);

const RULE1: [QuadPoint; 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];

const RULE3: [QuadPoint; 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

// Degree 3; note the negative centroid weight.
const RULE4: [QuadPoint; 4] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], -27.0 / 48.0),
    ([0.6, 0.2, 0.2], 25.0 / 48.0),
    ([0.2, 0.6, 0.2], 25.0 / 48.0),
    ([0.2, 0.2, 0.6], 25.0 / 48.0),
];

const A1: f64 = 0.059_715_871_789_770;
const B1: f64 = 0.470_142_064_105_115;
const W1: f64 = 0.132_394_152_788_506;
const A2: f64 = 0.797_426_985_353_087;
const B2: f64 = 0.101_286_507_323_456;
const W2: f64 = 0.125_939_180_544_827;

// Degree 5.
const RULE7: [QuadPoint; 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([A1, B1, B1], W1),
    ([B1, A1, B1], W1),
    ([B1, B1, A1], W1),
    ([A2, B2, B2], W2),
    ([B2, A2, B2], W2),
    ([B2, B2, A2], W2),
];

/// Rule with the given number of points (1, 3, 4 or 7).
pub fn rule(points: usize) -> Option<&'static [QuadPoint]> {
    match points {
        1 => Some(&RULE1),
        3 => Some(&RULE3),
        4 => Some(&RULE4),
        7 => Some(&RULE7),
        _ => None,
    }
}

/// Polynomial degree integrated exactly by each rule.
pub fn degree(points: usize) -> Option<usize> {
    match points {
        1 => Some(1),
        3 => Some(2),
        4 => Some(3),
        7 => Some(5),
        _ => None,
    }
}
