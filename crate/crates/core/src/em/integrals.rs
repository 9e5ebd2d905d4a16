//! Closed-form potential integrals over a flat triangle:
//!
//! ```text
//! I1   = int_T 1 / |r - r'| dS'
//! Irho = int_T (rho' - rho) / |r - r'| dS'
//! ```
//!
//! where `rho` is the projection of the observation point onto the plane of
//! the triangle. These are the standard edge-sum formulas for a constant and
//! a linear source density; they remain finite for observation points on the
//! triangle itself.

use crate::mesh::Point3;

#[inline]
pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn scale(a: Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialIntegrals {
    pub one_over_r: f64,
    pub rho_over_r: Point3,
    /// Projection of the observation point onto the triangle plane.
    pub rho: Point3,
}

/// `normal` must be the unit normal with respect to which `tri` is
/// counter-clockwise.
pub fn potential_integrals(tri: &[Point3; 3], normal: Point3, r: Point3) -> PotentialIntegrals {
    let d = dot(normal, sub(r, tri[0]));
    let abs_d = d.abs();
    let rho = sub(r, scale(normal, d));
    let mut i1 = 0.0;
    let mut irho = [0.0; 3];
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let edge = sub(b, a);
        let len = norm(edge);
        let t = scale(edge, 1.0 / len);
        let u = cross(t, normal);
        let p0 = dot(sub(a, rho), u);
        let lp = dot(sub(b, rho), t);
        let lm = dot(sub(a, rho), t);
        let r0sq = p0 * p0 + d * d;
        let rp = norm(sub(r, b));
        let rm = norm(sub(r, a));
        // Observation point on the line through the edge: every term that
        // involves the edge vanishes except the lR terms below.
        let degenerate = r0sq <= 1e-28 * len * len;
        let log = if degenerate {
            0.0
        } else {
            // R +- l computed without cancellation: (R + l)(R - l) = R0^2.
            let f = |l: f64, rr: f64| if l >= 0.0 { rr + l } else { r0sq / (rr - l) };
            (f(lp, rp) / f(lm, rm)).ln()
        };
        i1 += p0 * log;
        if abs_d > 0.0 && !degenerate {
            i1 -= abs_d * ((p0 * lp / (r0sq + abs_d * rp)).atan() - (p0 * lm / (r0sq + abs_d * rm)).atan());
        }
        let coeff = 0.5 * (r0sq * log + lp * rp - lm * rm);
        for k in 0..3 {
            irho[k] += u[k] * coeff;
        }
    }
    PotentialIntegrals { one_over_r: i1, rho_over_r: irho, rho }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: split the triangle at the projected observation
    // point and integrate in polar coordinates around it, where the 1/R
    // singularity is cancelled by the Jacobian.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    }

    fn polar_oracle(tri: &[Point3; 3], r: Point3) -> (f64, Point3) {
        let n = {
            let c = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
            scale(c, 1.0 / norm(c))
        };
        let d = dot(n, sub(r, tri[0]));
        let rho = sub(r, scale(n, d));
        let gl = gauss_legendre(48);
        let (mut i1, mut iv) = (0.0, [0.0; 3]);
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            // Sub-triangle (rho, a, b) mapped as rho + s*((1-t)(a-rho) + t(b-rho)).
            let ea = sub(a, rho);
            let eb = sub(b, rho);
            let sign = dot(cross(ea, eb), n).signum();
            let jac = norm(cross(ea, eb));
            if jac == 0.0 {
                continue;
            }
            for &(xt, wt) in &gl {
                let t = 0.5 * (xt + 1.0);
                for &(xs, ws) in &gl {
                    let s = 0.5 * (xs + 1.0);
                    let v = [
                        s * ((1.0 - t) * ea[0] + t * eb[0]),
                        s * ((1.0 - t) * ea[1] + t * eb[1]),
                        s * ((1.0 - t) * ea[2] + t * eb[2]),
                    ];
                    let rr = (dot(v, v) + d * d).sqrt();
                    let w = 0.25 * wt * ws * jac * s * sign;
                    i1 += w / rr;
                    for k in 0..3 {
                        iv[k] += w * v[k] / rr;
                    }
                }
            }
        }
        (i1, iv)
    }

    fn check(tri: [Point3; 3], r: Point3) {
        let c = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
        let n = scale(c, 1.0 / norm(c));
        let got = potential_integrals(&tri, n, r);
        let (i1, iv) = polar_oracle(&tri, r);
        assert!((got.one_over_r - i1).abs() <= 1e-9 * i1.abs(), "I1 {} vs {}", got.one_over_r, i1);
        let scale_v = norm(iv).max(1e-3 * i1);
        for k in 0..3 {
            assert!((got.rho_over_r[k] - iv[k]).abs() <= 1e-8 * scale_v, "Irho[{k}] {:?} vs {:?}", got.rho_over_r, iv);
        }
    }

    const TRI: [Point3; 3] = [[0.0, 0.0, 0.0], [1.0, 0.1, 0.0], [0.3, 0.8, 0.0]];

    #[test]
    fn observation_at_centroid_in_plane() {
        check(TRI, [1.3 / 3.0, 0.3, 0.0]);
    }

    #[test]
    fn observation_above_and_outside() {
        check(TRI, [0.2, 0.3, 0.25]);
        check(TRI, [1.5, -0.4, -0.3]);
        check(TRI, [2.0, 2.0, 0.0]);
    }

    #[test]
    fn tilted_triangle() {
        let tri = [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.2, 0.7]];
        check(tri, [0.0, 0.4, 0.3]);
        check(tri, [0.5, 0.4, 0.3]);
    }

    #[test]
    fn observation_on_edge_line_is_finite() {
        let c = cross(sub(TRI[1], TRI[0]), sub(TRI[2], TRI[0]));
        let n = scale(c, 1.0 / norm(c));
        let got = potential_integrals(&TRI, n, [-0.5, -0.05, 0.0]);
        assert!(got.one_over_r.is_finite() && got.rho_over_r.iter().all(|v| v.is_finite()));
        check(TRI, [-0.5, -0.05, 0.0]);
    }

    #[test]
    fn orientation_of_normal_matters_only_through_ccw_contract() {
        // Reversed vertex order with the reversed normal gives the same result.
        let rev = [TRI[0], TRI[2], TRI[1]];
        let r = [0.3, 0.2, 0.1];
        let a = potential_integrals(&TRI, [0.0, 0.0, 1.0], r);
        let b = potential_integrals(&rev, [0.0, 0.0, -1.0], r);
        assert!((a.one_over_r - b.one_over_r).abs() < 1e-14);
    }
}
