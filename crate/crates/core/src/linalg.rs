//! Small dense complex linear algebra used throughout the crate.
//!
//! 2×2 matrices get a dedicated value type with closed-form norms; general
//! square systems go through LU with partial pivoting, and null vectors of
//! (numerically) singular matrices through elimination with complete
//! pivoting.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Mul, Sub};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        Mat2([[a, ZERO], [ZERO, b]])
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let d = self.det();
        if d.norm() == 0.0 || !d.is_finite() {
            return Err(Error::Singular);
        }
        let [[a, b], [c, e]] = self.0;
        Ok(Mat2([[e / d, -b / d], [-c / d, a / d]]))
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// Largest singular value, from `σ² = (‖A‖_F² ± √(‖A‖_F⁴ − 4|det A|²)) / 2`.
    pub fn spectral_norm(&self) -> f64 {
        let f = self.frobenius_sq();
        let d = self.det().norm();
        let disc = (f * f - 4.0 * d * d).max(0.0).sqrt();
        (0.5 * (f + disc)).sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Mat2 {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|c| *c *= s);
        m
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = self.0;
        let b = rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut m = self;
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] -= rhs.0[i][j];
            }
        }
        m
    }
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense matrix–vector product.
pub fn matvec(m: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// LU factorization with partial pivoting, kept for repeated solves.
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factor a square matrix. Exactly zero pivots are replaced by a tiny
    /// value so that inverse iteration on an exact eigenvalue still works.
    pub fn new(m: &DMatrix<Complex64>) -> Lu {
        let n = m.nrows();
        let mut lu = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                lu[i * n + j] = m[(i, j)];
            }
        }
        let scale = lu.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&a, &b| lu[a * n + k].norm().total_cmp(&lu[b * n + k].norm()))
                .unwrap();
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            if lu[k * n + k].norm() == 0.0 {
                lu[k * n + k] = Complex64::new(f64::EPSILON * scale * 1e-3, 0.0);
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                for j in (k + 1)..n {
                    let t = lu[k * n + j];
                    lu[i * n + j] -= factor * t;
                }
            }
        }
        Lu { n, lu, perm }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.lu[i * n + j] * x[j];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let t = self.lu[i * n + j] * x[j];
                x[i] -= t;
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Unit null vector of a square matrix of (numerical) corank one, by
/// Gaussian elimination with complete pivoting. The last pivot is treated
/// as zero; the free variable is set to one and the rest back-substituted.
///
/// Returns the vector and the ratio of the discarded pivot to the largest
/// pivot, a cheap indicator of how close the matrix is to corank two.
pub fn null_vector(m: &DMatrix<Complex64>) -> (Vec<Complex64>, f64) {
    let n = m.nrows();
    let mut a: Vec<Complex64> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut max_pivot = 0.0f64;
    for k in 0..n.saturating_sub(1) {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for i in k..n {
            for j in k..n {
                let v = a[i * n + j].norm();
                if v > best {
                    best = v;
                    pr = i;
                    pc = j;
                }
            }
        }
        max_pivot = max_pivot.max(best);
        if pr != k {
            for j in 0..n {
                a.swap(k * n + j, pr * n + j);
            }
        }
        if pc != k {
            for i in 0..n {
                a.swap(i * n + k, i * n + pc);
            }
            col_perm.swap(k, pc);
        }
        let pivot = a[k * n + k];
        if pivot.norm() == 0.0 {
            continue;
        }
        for i in (k + 1)..n {
            let factor = a[i * n + k] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in k..n {
                let t = a[k * n + j];
                a[i * n + j] -= factor * t;
            }
        }
    }
    let last = a[n * n - 1].norm();
    let mut y = vec![ZERO; n];
    y[n - 1] = ONE;
    for i in (0..n - 1).rev() {
        let mut s = ZERO;
        for j in (i + 1)..n {
            s += a[i * n + j] * y[j];
        }
        let pivot = a[i * n + i];
        y[i] = if pivot.norm() == 0.0 { ZERO } else { -s / pivot };
    }
    let mut x = vec![ZERO; n];
    for (k, &c) in col_perm.iter().enumerate() {
        x[c] = y[k];
    }
    let nrm = vec_norm(&x);
    x.iter_mut().for_each(|c| *c /= nrm);
    let ratio = if max_pivot > 0.0 { last / max_pivot } else { 0.0 };
    (x, ratio)
}

/// Orthonormalize the columns in place (modified Gram–Schmidt, applied
/// twice for stability).
pub fn orthonormalize(cols: &mut [Vec<Complex64>]) {
    for _ in 0..2 {
        for k in 0..cols.len() {
            for j in 0..k {
                let (head, tail) = cols.split_at_mut(k);
                let proj: Complex64 = head[j]
                    .iter()
                    .zip(tail[0].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for (x, a) in tail[0].iter_mut().zip(head[j].iter()) {
                    *x -= proj * a;
                }
            }
            let nrm = vec_norm(&cols[k]);
            cols[k].iter_mut().for_each(|c| *c /= nrm);
        }
    }
}

/// Largest singular value of a dense (possibly rectangular) matrix.
pub fn largest_singular_value(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Smallest singular value of a square matrix.
pub fn smallest_singular_value(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of a 2×2 matrix.
pub fn eigenvalues_2x2(m: &Mat2) -> [Complex64; 2] {
    let [[a, b], [c, d]] = m.0;
    let half_tr = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    [half_tr + disc, half_tr - disc]
}
