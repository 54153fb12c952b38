//! Symmetric 3x3 eigendecomposition.
//!
//! A trigonometric closed form handles well-separated spectra. Near-degenerate
//! cases, and any closed-form result that fails a reconstruction check, fall
//! back to cyclic Jacobi rotations.

use crate::tensor::{cross3, dot3, norm3, Mat3, SymMatrix, Vec3};

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenDecomp {
    pub values: [f64; 3],
    pub vectors: Mat3,
}

impl EigenDecomp {
    pub fn vector(&self, i: usize) -> Vec3 {
        self.vectors.col(i)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        let mut acc = SymMatrix::ZERO;
        for i in 0..3 {
            acc += SymMatrix::outer(self.vector(i)) * self.values[i];
        }
        acc
    }
}

const CLOSED_FORM_MIN_GAP: f64 = 1e-3;
const RECONSTRUCTION_TOL: f64 = 1e-13;

pub fn eig3(a: &SymMatrix) -> EigenDecomp {
    let scale = a.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        return EigenDecomp { values: [a.xx, a.yy, a.zz], vectors: Mat3::IDENTITY };
    }
    if let Some(d) = closed_form(a, scale) {
        return d;
    }
    jacobi(a)
}

fn closed_form(a: &SymMatrix, scale: f64) -> Option<EigenDecomp> {
    let b = *a * (1.0 / scale);
    let q = b.trace() / 3.0;
    let c = b - SymMatrix::scaled_identity(q);
    let p = (c.norm_sq() / 6.0).sqrt();
    if p < 1e-12 {
        return None;
    }
    let r = ((c * (1.0 / p)).det() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;
    if (l1 - l2).min(l2 - l3) < CLOSED_FORM_MIN_GAP * p {
        return None;
    }

    let v1 = null_vector(&b, l1)?;
    let mut v3 = null_vector(&b, l3)?;
    let proj = dot3(v3, v1);
    v3 = [v3[0] - proj * v1[0], v3[1] - proj * v1[1], v3[2] - proj * v1[2]];
    let n3 = norm3(v3);
    if n3 < 0.5 {
        return None;
    }
    v3 = [v3[0] / n3, v3[1] / n3, v3[2] / n3];
    let v2 = cross3(v3, v1);

    let vals = [a.quad_form(v1), a.quad_form(v2), a.quad_form(v3)];
    let d = EigenDecomp { values: vals, vectors: Mat3::from_cols(v1, v2, v3) };
    let ok = vals[0] >= vals[1]
        && vals[1] >= vals[2]
        && (d.reconstruct() - *a).max_abs() <= RECONSTRUCTION_TOL * scale;
    ok.then_some(d)
}

/// Unit vector in the kernel of B - λI, taken from the largest cross product
/// of its rows.
fn null_vector(b: &SymMatrix, lambda: f64) -> Option<Vec3> {
    let m = (*b - SymMatrix::scaled_identity(lambda)).to_mat3();
    let rows = [m.0[0], m.0[1], m.0[2]];
    let cands = [cross3(rows[0], rows[1]), cross3(rows[0], rows[2]), cross3(rows[1], rows[2])];
    let best = cands
        .iter()
        .copied()
        .max_by(|x, y| norm3(*x).total_cmp(&norm3(*y)))?;
    let n = norm3(best);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some([best[0] / n, best[1] / n, best[2] / n])
}

fn jacobi(a: &SymMatrix) -> EigenDecomp {
    let mut m = a.to_mat3().0;
    let mut v = Mat3::IDENTITY.0;
    for _ in 0..64 {
        let off = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
        let diag = m[0][0].powi(2) + m[1][1].powi(2) + m[2][2].powi(2);
        if off <= f64::EPSILON.powi(2) * 1e-4 * diag || off == 0.0 {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let mkp = m[k][p];
                let mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[p][k];
                let mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let vm = Mat3(v);
    let cols: Vec<Vec3> = order.iter().map(|&i| vm.col(i)).collect();
    EigenDecomp {
        values: [m[order[0]][order[0]], m[order[1]][order[1]], m[order[2]][order[2]]],
        vectors: Mat3::from_cols(cols[0], cols[1], cols[2]),
    }
}
