//! Fixed-size 2-D linear algebra and the K×2 least-squares solve used by the
//! velocity estimator.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn diag(a: f64, b: f64) -> Self {
        Mat2([[a, 0.0], [0.0, b]])
    }

    /// `a bᵀ`
    pub fn outer(a: Vec2, b: Vec2) -> Self {
        Mat2([[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]])
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[r][c]
    }

    pub fn transpose(&self) -> Self {
        let m = self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        let m = self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// `vᵀ M v`
    pub fn quad_form(&self, v: Vec2) -> f64 {
        dot(v, self.mul_vec(v))
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = self.0;
        Some(Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]))
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let a = self.0[0][0];
        let d = self.0[1][1];
        let b = 0.5 * (self.0[0][1] + self.0[1][0]);
        let mean = 0.5 * (a + d);
        let r = (0.5 * (a - d)).hypot(b);
        (mean - r, mean + r)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        let mut out = [[0.0; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Mat2(out)
    }
}

/// Singular values of an upper-triangular 2×2 matrix `[[a, b], [0, d]]`,
/// returned as (smaller, larger).
fn triangular_singular_values(a: f64, b: f64, d: f64) -> (f64, f64) {
    // σ₁σ₂ = |ad|, σ₁² + σ₂² = a² + b² + d²
    let s = a * a + b * b + d * d;
    let p = (a * d).abs();
    let disc = ((s - 2.0 * p) * (s + 2.0 * p)).max(0.0).sqrt();
    let hi = (0.5 * (s + disc)).sqrt();
    let lo = if hi > 0.0 { p / hi } else { 0.0 };
    (lo, hi)
}

/// Result of a K×2 least-squares solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeastSquares {
    pub solution: Vec2,
    pub residual_norm: f64,
}

/// Relative singular-value threshold below which the design matrix is treated
/// as rank 1.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Minimizes ‖A x − b‖₂ for a K×2 design matrix given as rows, using
/// Householder QR on the two columns.
pub fn solve_least_squares(rows: &[Vec2], rhs: &[f64]) -> Result<LeastSquares> {
    let k = rows.len();
    if rhs.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: rhs.len(),
        });
    }
    if k < 2 {
        return Err(Error::InsufficientDetections(k));
    }

    let mut a: Vec<Vec2> = rows.to_vec();
    let mut y: Vec<f64> = rhs.to_vec();
    let mut r = [[0.0; 2]; 2];

    for col in 0..2 {
        let alpha_sq: f64 = a[col..].iter().map(|row| row[col] * row[col]).sum();
        let alpha = alpha_sq.sqrt();
        if alpha == 0.0 {
            r[col][col] = 0.0;
            continue;
        }
        let alpha = if a[col][col] > 0.0 { -alpha } else { alpha };
        // v = x − αe₁, stored in a scratch vector
        let mut v: Vec<f64> = a[col..].iter().map(|row| row[col]).collect();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq > 0.0 {
            for c in col..2 {
                let proj: f64 = v.iter().zip(&a[col..]).map(|(vi, row)| vi * row[c]).sum();
                let f = 2.0 * proj / vnorm_sq;
                for (vi, row) in v.iter().zip(a[col..].iter_mut()) {
                    row[c] -= f * vi;
                }
            }
            let proj: f64 = v.iter().zip(&y[col..]).map(|(vi, yi)| vi * yi).sum();
            let f = 2.0 * proj / vnorm_sq;
            for (vi, yi) in v.iter().zip(y[col..].iter_mut()) {
                *yi -= f * vi;
            }
        }
        r[col][col] = a[col][col];
        if col == 0 {
            r[0][1] = a[0][1];
        }
    }

    let (lo, hi) = triangular_singular_values(r[0][0], r[0][1], r[1][1]);
    let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(ratio >= RANK_TOLERANCE) {
        return Err(Error::SingularGeometry { ratio });
    }

    let x1 = y[1] / r[1][1];
    let x0 = (y[0] - r[0][1] * x1) / r[0][0];
    let solution = [x0, x1];

    let residual_norm = rows
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let e = dot(*row, solution) - b;
            e * e
        })
        .sum::<f64>()
        .sqrt();

    Ok(LeastSquares {
        solution,
        residual_norm,
    })
}
