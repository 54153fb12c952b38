//! Dense and symmetric 3x3 matrices and the traceless Q-tensor type.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

pub type Vec3 = [f64; 3];

pub fn dot3(u: Vec3, v: Vec3) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

pub fn cross3(u: Vec3, v: Vec3) -> Vec3 {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

pub fn norm3(u: Vec3) -> f64 {
    dot3(u, u).sqrt()
}

/// General 3x3 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3([
            [c0[0], c1[0], c2[0]],
            [c0[1], c1[1], c2[1]],
            [c0[2], c1[2], c2[2]],
        ])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn diag(d: Vec3) -> Self {
        Mat3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Mat3) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += self.0[i][j] * other.0[i][j];
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate; `None` when the matrix is singular.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
        };
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        Some(Mat3(adj) * (1.0 / d))
    }

    /// (M + Mᵀ)/2.
    pub fn symmetric_part(&self) -> SymMatrix {
        let m = &self.0;
        SymMatrix {
            xx: m[0][0],
            yy: m[1][1],
            zz: m[2][2],
            xy: 0.5 * (m[0][1] + m[1][0]),
            xz: 0.5 * (m[0][2] + m[2][0]),
            yz: 0.5 * (m[1][2] + m[2][1]),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |a, &x| a.max(x.abs()))
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut r = self;
        r += o;
        r
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
    fn sub(self, o: Mat3) -> Mat3 {
        self + (-o)
    }
}

impl SubAssign for Mat3 {
    fn sub_assign(&mut self, o: Mat3) {
        *self += -o;
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
    fn mul(self, k: f64) -> Mat3 {
        let mut r = self;
        for row in r.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= k;
            }
        }
        r
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut r = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                r.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        r
    }
}

/// Symmetric 3x3 matrix stored by its six independent entries.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMatrix {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl SymMatrix {
    pub const ZERO: SymMatrix = SymMatrix { xx: 0.0, yy: 0.0, zz: 0.0, xy: 0.0, xz: 0.0, yz: 0.0 };
    pub const IDENTITY: SymMatrix = SymMatrix { xx: 1.0, yy: 1.0, zz: 1.0, xy: 0.0, xz: 0.0, yz: 0.0 };

    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        SymMatrix { xx, yy, zz, xy, xz, yz }
    }

    pub fn diag(d: Vec3) -> Self {
        SymMatrix::new(d[0], d[1], d[2], 0.0, 0.0, 0.0)
    }

    pub fn scaled_identity(k: f64) -> Self {
        SymMatrix::diag([k, k, k])
    }

    /// v ⊗ v.
    pub fn outer(v: Vec3) -> Self {
        SymMatrix::new(v[0] * v[0], v[1] * v[1], v[2] * v[2], v[0] * v[1], v[0] * v[2], v[1] * v[2])
    }

    /// u ⊗ v + v ⊗ u.
    pub fn sym_outer(u: Vec3, v: Vec3) -> Self {
        SymMatrix::new(
            2.0 * u[0] * v[0],
            2.0 * u[1] * v[1],
            2.0 * u[2] * v[2],
            u[0] * v[1] + u[1] * v[0],
            u[0] * v[2] + u[2] * v[0],
            u[1] * v[2] + u[2] * v[1],
        )
    }

    pub fn to_mat3(&self) -> Mat3 {
        Mat3([
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// Frobenius inner product.
    pub fn dot(&self, o: &SymMatrix) -> f64 {
        self.xx * o.xx + self.yy * o.yy + self.zz * o.zz + 2.0 * (self.xy * o.xy + self.xz * o.xz + self.yz * o.yz)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz]
            .iter()
            .fold(0.0, |a, &x| a.max(x.abs()))
    }

    /// Self squared; symmetric because the matrix commutes with itself.
    pub fn square(&self) -> SymMatrix {
        let (a, b, c, d, e, f) = (self.xx, self.yy, self.zz, self.xy, self.xz, self.yz);
        SymMatrix {
            xx: a * a + d * d + e * e,
            yy: d * d + b * b + f * f,
            zz: e * e + f * f + c * c,
            xy: a * d + d * b + e * f,
            xz: a * e + d * f + e * c,
            yz: d * e + b * f + f * c,
        }
    }

    /// Plain matrix product, generally not symmetric.
    pub fn mat_mul(&self, o: &SymMatrix) -> Mat3 {
        self.to_mat3() * o.to_mat3()
    }

    /// AB + BA.
    pub fn anticommutator(&self, o: &SymMatrix) -> SymMatrix {
        let p = self.mat_mul(o);
        let m = &p.0;
        SymMatrix {
            xx: 2.0 * m[0][0],
            yy: 2.0 * m[1][1],
            zz: 2.0 * m[2][2],
            xy: m[0][1] + m[1][0],
            xz: m[0][2] + m[2][0],
            yz: m[1][2] + m[2][1],
        }
    }

    /// AB - BA, antisymmetric.
    pub fn commutator(&self, o: &SymMatrix) -> Mat3 {
        let p = self.mat_mul(o);
        p - p.transpose()
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        self.to_mat3().mul_vec(v)
    }

    /// vᵀ A v.
    pub fn quad_form(&self, v: Vec3) -> f64 {
        dot3(v, self.mul_vec(v))
    }

    pub fn det(&self) -> f64 {
        self.to_mat3().det()
    }

    /// Traceless part A - tr(A)/3 I.
    pub fn deviatoric(&self) -> SymMatrix {
        let m = self.trace() / 3.0;
        SymMatrix { xx: self.xx - m, yy: self.yy - m, zz: self.zz - m, ..*self }
    }

    pub fn is_finite(&self) -> bool {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz].iter().all(|x| x.is_finite())
    }
}

impl Add for SymMatrix {
    type Output = SymMatrix;
    fn add(self, o: SymMatrix) -> SymMatrix {
        SymMatrix {
            xx: self.xx + o.xx,
            yy: self.yy + o.yy,
            zz: self.zz + o.zz,
            xy: self.xy + o.xy,
            xz: self.xz + o.xz,
            yz: self.yz + o.yz,
        }
    }
}

impl AddAssign for SymMatrix {
    fn add_assign(&mut self, o: SymMatrix) {
        *self = *self + o;
    }
}

impl Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(self, o: SymMatrix) -> SymMatrix {
        SymMatrix {
            xx: self.xx - o.xx,
            yy: self.yy - o.yy,
            zz: self.zz - o.zz,
            xy: self.xy - o.xy,
            xz: self.xz - o.xz,
            yz: self.yz - o.yz,
        }
    }
}

impl SubAssign for SymMatrix {
    fn sub_assign(&mut self, o: SymMatrix) {
        *self = *self - o;
    }
}

impl Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self * -1.0
    }
}

impl Mul<f64> for SymMatrix {
    type Output = SymMatrix;
    fn mul(self, k: f64) -> SymMatrix {
        SymMatrix {
            xx: self.xx * k,
            yy: self.yy * k,
            zz: self.zz * k,
            xy: self.xy * k,
            xz: self.xz * k,
            yz: self.yz * k,
        }
    }
}

/// Traceless symmetric 3x3 matrix.
///
/// Every constructor and arithmetic operation re-projects onto the traceless
/// subspace, so rounding never accumulates a trace.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "[f64; 5]", from = "[f64; 5]")]
pub struct QTensor(SymMatrix);

impl QTensor {
    pub const ZERO: QTensor = QTensor(SymMatrix::ZERO);

    /// Builds from the five independent components (Q11, Q22, Q12, Q13, Q23).
    pub fn new(q11: f64, q22: f64, q12: f64, q13: f64, q23: f64) -> Self {
        QTensor(SymMatrix::new(q11, q22, -q11 - q22, q12, q13, q23))
    }

    /// Traceless projection of a symmetric matrix.
    pub fn from_sym(m: SymMatrix) -> Self {
        QTensor(m.deviatoric())
    }

    /// s (n ⊗ n - I/3) for a unit vector n.
    pub fn uniaxial(n: Vec3, s: f64) -> Self {
        let nn = SymMatrix::outer(n);
        QTensor::from_sym(nn * s)
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn to_sym(self) -> SymMatrix {
        self.0
    }

    pub fn to_mat3(&self) -> Mat3 {
        self.0.to_mat3()
    }

    pub fn components(&self) -> [f64; 5] {
        [self.0.xx, self.0.yy, self.0.xy, self.0.xz, self.0.yz]
    }

    pub fn from_components(c: [f64; 5]) -> Self {
        QTensor::new(c[0], c[1], c[2], c[3], c[4])
    }

    pub fn dot(&self, o: &QTensor) -> f64 {
        self.0.dot(&o.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.norm_sq()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn square(&self) -> SymMatrix {
        self.0.square()
    }

    /// tr(Q²).
    pub fn tr2(&self) -> f64 {
        self.0.norm_sq()
    }

    /// tr(Q³), which equals 3 det Q for traceless Q.
    pub fn tr3(&self) -> f64 {
        3.0 * self.0.det()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

impl From<QTensor> for [f64; 5] {
    fn from(q: QTensor) -> Self {
        q.components()
    }
}

impl From<[f64; 5]> for QTensor {
    fn from(c: [f64; 5]) -> Self {
        QTensor::from_components(c)
    }
}

impl From<QTensor> for SymMatrix {
    fn from(q: QTensor) -> Self {
        q.0
    }
}

impl Add for QTensor {
    type Output = QTensor;
    fn add(self, o: QTensor) -> QTensor {
        QTensor::from_sym(self.0 + o.0)
    }
}

impl AddAssign for QTensor {
    fn add_assign(&mut self, o: QTensor) {
        *self = *self + o;
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    fn sub(self, o: QTensor) -> QTensor {
        QTensor::from_sym(self.0 - o.0)
    }
}

impl SubAssign for QTensor {
    fn sub_assign(&mut self, o: QTensor) {
        *self = *self - o;
    }
}

impl Neg for QTensor {
    type Output = QTensor;
    fn neg(self) -> QTensor {
        QTensor(-self.0)
    }
}

impl Mul<f64> for QTensor {
    type Output = QTensor;
    fn mul(self, k: f64) -> QTensor {
        QTensor::from_sym(self.0 * k)
    }
}

/// Q² - (s/3) Q - (2/9) s² I, which vanishes exactly on the limit manifold.
pub fn poly_min(q: &QTensor, s: f64) -> SymMatrix {
    q.square() - *q.as_sym() * (s / 3.0) - SymMatrix::scaled_identity(2.0 * s * s / 9.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SymMatrix {
        SymMatrix::new(0.3, -1.2, 0.7, 0.25, -0.4, 0.9)
    }

    #[test]
    fn square_matches_dense_product() {
        let a = sample();
        let dense = a.to_mat3() * a.to_mat3();
        assert!((a.square().to_mat3() - dense).max_abs() < 1e-15);
    }

    #[test]
    fn anticommutator_and_commutator() {
        let a = sample();
        let b = SymMatrix::new(-0.5, 0.1, 2.0, 1.0, 0.3, -0.2);
        let ab = a.to_mat3() * b.to_mat3();
        let ba = b.to_mat3() * a.to_mat3();
        assert!((a.anticommutator(&b).to_mat3() - (ab + ba)).max_abs() < 1e-14);
        assert!((a.commutator(&b) - (ab - ba)).max_abs() < 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat3([[2.0, 1.0, 0.5], [0.0, 3.0, -1.0], [1.0, 0.2, 4.0]]);
        let inv = m.inverse().unwrap();
        assert!((m * inv - Mat3::IDENTITY).max_abs() < 1e-14);
        assert!(Mat3::ZERO.inverse().is_none());
    }

    #[test]
    fn qtensor_stays_traceless() {
        let q = QTensor::from_sym(sample());
        assert!(q.as_sym().trace().abs() < 1e-16);
        let r = (q * 3.7 + q) - q * 0.1;
        assert!(r.as_sym().trace().abs() < 1e-15);
    }

    #[test]
    fn components_roundtrip() {
        let q = QTensor::new(0.1, -0.3, 0.2, 0.05, -0.7);
        assert_eq!(q.components(), [0.1, -0.3, 0.2, 0.05, -0.7]);
        assert!((q.as_sym().zz - 0.2).abs() < 1e-16);
    }

    #[test]
    fn tr3_is_three_det() {
        let q = QTensor::from_sym(sample());
        let m = q.to_mat3();
        let direct = (m * m * m).trace();
        assert!((q.tr3() - direct).abs() < 1e-13);
    }

    #[test]
    fn poly_min_vanishes_on_uniaxial() {
        let n = [1.0 / 3f64.sqrt(); 3];
        let q = QTensor::uniaxial(n, 1.5);
        assert!(poly_min(&q, 1.5).max_abs() < 1e-15);
    }
}
