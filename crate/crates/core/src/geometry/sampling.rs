//! Random points, tangent and normal vectors for property checks.

use super::ManifoldPoint;
use crate::tensor::{cross3, norm3, QTensor, SymMatrix, Vec3};
use rand::Rng;

pub fn random_director<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Two unit vectors completing n to a right-handed orthonormal frame.
pub fn complement(n: Vec3) -> (Vec3, Vec3) {
    let helper = if n[0].abs() < 0.6 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let u = cross3(n, helper);
    let lu = norm3(u);
    let u = [u[0] / lu, u[1] / lu, u[2] / lu];
    (u, cross3(n, u))
}

/// The two tangent generators s(n ⊗ e + e ⊗ n) at a base point.
pub fn tangent_basis(base: &ManifoldPoint, s: f64) -> [QTensor; 2] {
    let n = base.director();
    let (u, v) = complement(n);
    [
        QTensor::from_sym(SymMatrix::sym_outer(n, u) * s),
        QTensor::from_sym(SymMatrix::sym_outer(n, v) * s),
    ]
}

/// The three traceless normal generators at a base point.
pub fn normal_basis(base: &ManifoldPoint) -> [QTensor; 3] {
    let n = base.director();
    let (u, v) = complement(n);
    [
        QTensor::from_sym(SymMatrix::outer(n) * 2.0 - SymMatrix::outer(u) - SymMatrix::outer(v)),
        QTensor::from_sym(SymMatrix::outer(u) - SymMatrix::outer(v)),
        QTensor::from_sym(SymMatrix::sym_outer(u, v)),
    ]
}

pub fn random_tangent<R: Rng + ?Sized>(base: &ManifoldPoint, s: f64, rng: &mut R) -> QTensor {
    let [t1, t2] = tangent_basis(base, s);
    t1 * rng.gen_range(-1.0..=1.0) + t2 * rng.gen_range(-1.0..=1.0)
}

/// Random element of the normal space in the symmetric matrices, trace included.
pub fn random_normal<R: Rng + ?Sized>(base: &ManifoldPoint, rng: &mut R) -> SymMatrix {
    let [z1, z2, z3] = normal_basis(base);
    let mut z = *z1.as_sym() * rng.gen_range(-1.0..=1.0)
        + *z2.as_sym() * rng.gen_range(-1.0..=1.0)
        + *z3.as_sym() * rng.gen_range(-1.0..=1.0);
    z += SymMatrix::scaled_identity(rng.gen_range(-1.0..=1.0));
    z
}

pub fn random_sym<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> SymMatrix {
    let mut e = [0.0; 6];
    for x in e.iter_mut() {
        *x = rng.gen_range(-bound..=bound);
    }
    SymMatrix::new(e[0], e[1], e[2], e[3], e[4], e[5])
}

pub fn random_qtensor<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> QTensor {
    QTensor::from_sym(random_sym(rng, bound))
}
