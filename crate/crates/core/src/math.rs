//! Small fixed-size vector/matrix types used throughout the solver.
//!
//! The solver state is millions of 3-vectors; these are deliberately plain
//! `Copy` types over `[f64; 3]` rather than a linear-algebra crate, so the
//! hot loops stay allocation-free and easy to audit.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3([
            self.0[1] * other.0[2] - self.0[2] * other.0[1],
            self.0[2] * other.0[0] - self.0[0] * other.0[2],
            self.0[0] * other.0[1] - self.0[1] * other.0[0],
        ])
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Outer product self ⊗ other.
    pub fn outer(self, other: Vec3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.0[i] * other.0[j];
            }
        }
        Mat3(m)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        self.0[0] += o.0[0];
        self.0[1] += o.0[1];
        self.0[2] += o.0[2];
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3([self.0[0] / s, self.0[1] / s, self.0[2] / s])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn identity() -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Mat3(m)
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3([
            self.0[0][0] * v[0] + self.0[0][1] * v[1] + self.0[0][2] * v[2],
            self.0[1][0] * v[0] + self.0[1][1] * v[1] + self.0[1][2] * v[2],
            self.0[2][0] * v[0] + self.0[2][1] * v[1] + self.0[2][2] * v[2],
        ])
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for (k, orow) in o.0.iter().enumerate() {
                    m[i][j] += self.0[i][k] * orow[j];
                }
            }
        }
        Mat3(m)
    }

    pub fn transpose(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.0[j][i];
            }
        }
        Mat3(m)
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut m = self.0;
        for row in m.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        Mat3(m)
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut m = self.0;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += o.0[i][j];
            }
        }
        Mat3(m)
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        let mut m = self.0;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] -= o.0[i][j];
            }
        }
        Mat3(m)
    }
}

/// A signed coordinate permutation: one of the 48 exact symmetries of the
/// cubic grid, x_i -> sign_i * x_{perm_i}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedPermutation {
    pub perm: [usize; 3],
    pub signs: [f64; 3],
}

impl SignedPermutation {
    pub fn identity() -> Self {
        SignedPermutation {
            perm: [0, 1, 2],
            signs: [1.0; 3],
        }
    }

    /// All 48 signed axis permutations (the full octahedral group).
    pub fn all() -> Vec<SignedPermutation> {
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut out = Vec::with_capacity(48);
        for perm in perms {
            for s in 0..8u8 {
                let signs = [
                    if s & 1 == 0 { 1.0 } else { -1.0 },
                    if s & 2 == 0 { 1.0 } else { -1.0 },
                    if s & 4 == 0 { 1.0 } else { -1.0 },
                ];
                out.push(SignedPermutation { perm, signs });
            }
        }
        out
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3([
            self.signs[0] * v[self.perm[0]],
            self.signs[1] * v[self.perm[1]],
            self.signs[2] * v[self.perm[2]],
        ])
    }

    /// Inverse transformation (signed permutations are orthogonal).
    pub fn inverse(&self) -> SignedPermutation {
        let mut perm = [0usize; 3];
        let mut signs = [0.0f64; 3];
        for i in 0..3 {
            perm[self.perm[i]] = i;
            signs[self.perm[i]] = self.signs[i];
        }
        SignedPermutation { perm, signs }
    }
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth >= 50 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth + 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth + 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 0)
}

/// Nodes and weights for n-point Gauss-Legendre quadrature on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_product_orthogonality() {
        let a = Vec3::new(1.0, 2.0, 3.0);
        let b = Vec3::new(-0.5, 4.0, 1.5);
        let c = a.cross(b);
        assert!(c.dot(a).abs() < 1e-14);
        assert!(c.dot(b).abs() < 1e-14);
    }

    #[test]
    fn det_of_diagonal() {
        let mut m = Mat3::identity();
        m.0[0][0] = 2.0;
        m.0[1][1] = 3.0;
        m.0[2][2] = 4.0;
        assert!((m.det() - 24.0).abs() < 1e-14);
    }

    #[test]
    fn signed_permutations_form_group_of_48() {
        let all = SignedPermutation::all();
        assert_eq!(all.len(), 48);
        let v = Vec3::new(0.3, -1.2, 2.5);
        for q in &all {
            let qi = q.inverse();
            let w = qi.apply(q.apply(v));
            assert!((w - v).norm() < 1e-15);
            // Orthogonality: norms preserved.
            assert!((q.apply(v).norm() - v.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn simpson_integrates_polynomials() {
        let val = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert!((val - 2.0).abs() < 1e-11);
    }

    #[test]
    fn gauss_legendre_exact_for_high_degree() {
        let (x, w) = gauss_legendre(8);
        // Degree-15 polynomial integrated exactly by 8 nodes.
        let integral: f64 = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| wi * xi.powi(14))
            .sum();
        assert!((integral - 2.0 / 15.0).abs() < 1e-13);
    }
}
