//! Small dense tensors at a point: vectors, second-order (3×3) and
//! third-order (3×3×3) tensors.
//!
//! Everything is 3D, also in plane-strain runs; two-dimensional fields embed
//! into the upper-left block.

use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.dot(self))
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
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

/// Second-order tensor, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Mat3(rows)
    }

    /// Row-major flat view.
    pub fn to_array(&self) -> [f64; 9] {
        let a = &self.0;
        [
            a[0][0], a[0][1], a[0][2], a[1][0], a[1][1], a[1][2], a[2][0], a[2][1], a[2][2],
        ]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Mat3([[s[0], s[1], s[2]], [s[3], s[4], s[5]], [s[6], s[7], s[8]]])
    }

    pub fn outer(a: &Vec3, b: &Vec3) -> Self {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = a.0[i] * b.0[j];
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let a = &self.0;
        Mat3([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    pub fn tr(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    /// Cofactor matrix; `cof(A) = det(A) A⁻ᵀ` whenever A is invertible.
    pub fn cof(&self) -> Self {
        let a = &self.0;
        Mat3([
            [
                a[1][1] * a[2][2] - a[1][2] * a[2][1],
                a[1][2] * a[2][0] - a[1][0] * a[2][2],
                a[1][0] * a[2][1] - a[1][1] * a[2][0],
            ],
            [
                a[0][2] * a[2][1] - a[0][1] * a[2][2],
                a[0][0] * a[2][2] - a[0][2] * a[2][0],
                a[0][1] * a[2][0] - a[0][0] * a[2][1],
            ],
            [
                a[0][1] * a[1][2] - a[0][2] * a[1][1],
                a[0][2] * a[1][0] - a[0][0] * a[1][2],
                a[0][0] * a[1][1] - a[0][1] * a[1][0],
            ],
        ])
    }

    /// Inverse; refuses matrices with `|det| <= 1e-14 |A|³`.
    pub fn inv(&self) -> Result<Self> {
        let det = self.det();
        let scale = self.frob();
        if !(math::abs(det) > 1e-14 * scale * scale * scale) {
            return Err(Error::SingularMatrix { det });
        }
        Ok(self.cof().transpose() * (1.0 / det))
    }

    pub fn dev(&self) -> Self {
        let m = self.tr() / 3.0;
        let mut d = *self;
        for i in 0..3 {
            d.0[i][i] -= m;
        }
        d
    }

    pub fn sym(&self) -> Self {
        (*self + self.transpose()) * 0.5
    }

    pub fn skew(&self) -> Self {
        (*self - self.transpose()) * 0.5
    }

    pub fn ddot(&self, other: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    /// Frobenius norm `(Σ A_ij²)^{1/2}`.
    pub fn frob(&self) -> f64 {
        math::sqrt(self.ddot(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(math::abs(*v)))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        let a = &self.0;
        Vec3([
            a[0][0] * v.0[0] + a[0][1] * v.0[1] + a[0][2] * v.0[2],
            a[1][0] * v.0[0] + a[1][1] * v.0[1] + a[1][2] * v.0[2],
            a[2][0] * v.0[0] + a[2][1] * v.0[1] + a[2][2] * v.0[2],
        ])
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(mut self, o: Mat3) -> Mat3 {
        self += o;
        self
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, o: Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(mut self, o: Mat3) -> Mat3 {
        self -= o;
        self
    }
}

impl SubAssign for Mat3 {
    fn sub_assign(&mut self, o: Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= o.0[i][j];
            }
        }
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self * -1.0
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(mut self, s: f64) -> Mat3 {
        for row in self.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        self
    }
}

impl Mul<Mat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += self.0[i][k] * o.0[k][j];
                }
                m.0[i][j] = s;
            }
        }
        m
    }
}

/// Third-order tensor `A_ijk`, stored with k fastest. Holds second velocity
/// gradients `(∇²v)_ijk = ∂_j ∂_k v_i` and hyperstresses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ten3(pub [f64; 27]);

impl Default for Ten3 {
    fn default() -> Self {
        Ten3::ZERO
    }
}

impl Ten3 {
    pub const ZERO: Ten3 = Ten3([0.0; 27]);

    #[inline]
    pub fn idx(i: usize, j: usize, k: usize) -> usize {
        9 * i + 3 * j + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0[Self::idx(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.0[Self::idx(i, j, k)] = v;
    }

    pub fn ddot(&self, other: &Ten3) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn frob(&self) -> f64 {
        math::sqrt(self.ddot(self))
    }

    pub fn scaled(&self, s: f64) -> Ten3 {
        let mut t = *self;
        t.0.iter_mut().for_each(|v| *v *= s);
        t
    }
}
