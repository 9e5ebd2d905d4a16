use num_complex::Complex64;

use crate::error::SolverError;

/// Row-major LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factor the `n x n` row-major matrix `a`. A pivot whose magnitude is
    /// at most `tolerance` times the largest entry of `a` is treated as zero.
    pub fn factor(mut a: Vec<Complex64>, n: usize, tolerance: f64) -> Result<Lu, SolverError> {
        assert_eq!(a.len(), n * n);
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n).map(|i| (i, a[i * n + k].norm())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(pmax > tolerance * scale) || !pmax.is_finite() {
                let condition = diag_ratio(&a, n, k);
                return Err(SolverError::Singular { pivot: k, condition });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = a[k * n + k].inv();
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n + k + 1..k * n + n];
            for row in tail.chunks_exact_mut(n) {
                let f = row[k] * inv;
                row[k] = f;
                if f != Complex64::new(0.0, 0.0) {
                    for (x, &u) in row[k + 1..].iter_mut().zip(pivot_row) {
                        *x -= f * u;
                    }
                }
            }
        }
        Ok(Lu { n, lu: a, perm })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: Complex64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Ratio of largest to smallest |U_ii|: a cheap condition indicator.
    pub fn condition_estimate(&self) -> f64 {
        diag_ratio(&self.lu, self.n, self.n)
    }
}

fn diag_ratio(a: &[Complex64], n: usize, upto: usize) -> f64 {
    let d: Vec<f64> = (0..upto.min(n)).map(|i| a[i * n + i].norm()).collect();
    let max = d.iter().copied().fold(0.0, f64::max);
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    if upto < n || min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub type Mat4 = [[Complex64; 4]; 4];

pub fn mat4_from_fn(f: impl Fn(usize, usize) -> Complex64) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| f(i, j)))
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    mat4_from_fn(|i, j| (0..4).map(|k| a[i][k] * b[k][j]).sum())
}

pub fn mat4_inverse(a: &Mat4) -> Result<Mat4, SolverError> {
    let flat: Vec<Complex64> = a.iter().flatten().copied().collect();
    let lu = Lu::factor(flat, 4, 1e-14)?;
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for j in 0..4 {
        let mut e = [Complex64::new(0.0, 0.0); 4];
        e[j] = Complex64::new(1.0, 0.0);
        let col = lu.solve(&e);
        for i in 0..4 {
            out[i][j] = col[i];
        }
    }
    Ok(out)
}

/// Largest singular value of a 4x4 complex matrix: square root of the top
/// eigenvalue of `A^H A`, found by cyclic Jacobi on its real 8x8 embedding.
pub fn spectral_norm(a: &Mat4) -> f64 {
    let h = mat4_from_fn(|i, j| (0..4).map(|k| a[k][i].conj() * a[k][j]).sum());
    let mut m = [[0.0f64; 8]; 8];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = h[i][j].re;
            m[i + 4][j + 4] = h[i][j].re;
            m[i][j + 4] = -h[i][j].im;
            m[i + 4][j] = h[i][j].im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..8).flat_map(|i| (0..8).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        let diag: f64 = (0..8).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..8 {
            for q in p + 1..8 {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..8 {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..8 {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..8).map(|i| m[i][i]).fold(0.0, f64::max).sqrt()
}
