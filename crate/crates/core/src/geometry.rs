//! The limit manifold of uniaxial tensors s(n ⊗ n - I/3): projection,
//! tangent/normal splitting, curvature and the harmonic-map right-hand sides.

pub mod sampling;
pub mod suite;

use crate::eigen::eig3;
use crate::error::{Error, Result};
use crate::params::MaterialParams;
use crate::tensor::{norm3, poly_min, Mat3, QTensor, SymMatrix, Vec3};

/// Default eigen-gap tolerance as a fraction of s.
pub const DEFAULT_GAP_FRACTION: f64 = 0.1;
/// Tolerance for tangency/normality preconditions, relative to the input size.
pub const PRECONDITION_TOL: f64 = 1e-8;

/// A certified point s(n ⊗ n - I/3) of the limit manifold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifoldPoint {
    q: QTensor,
    director: Vec3,
}

impl ManifoldPoint {
    pub fn from_director(n: Vec3, s: f64) -> Result<Self> {
        let len = norm3(n);
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidArgument("director must be a nonzero finite vector".into()));
        }
        let n = [n[0] / len, n[1] / len, n[2] / len];
        Ok(ManifoldPoint { q: QTensor::uniaxial(n, s), director: n })
    }

    pub fn q(&self) -> &QTensor {
        &self.q
    }

    pub fn director(&self) -> Vec3 {
        self.director
    }
}

/// Which of the equivalent harmonic-map right-hand sides to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HarmonicForm {
    /// -(2/s²) tr(Σ) Q + (2/s)(Σ - tr(Σ)/3 I)
    Trace,
    /// -(4/s²) Σ (Q - s/6 I)
    Right,
    /// -(4/s²) (Q - s/6 I) Σ
    Left,
}

/// A symmetric matrix split into its tangential and normal parts at a base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentNormalSplit {
    pub tangential: QTensor,
    pub normal: SymMatrix,
    pub base: ManifoldPoint,
}

/// Residuals of the tangent/normal interrelation identities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityResiduals {
    /// tr((XY+YX)Q) - (s/3) tr(XY)
    pub trace_identity: f64,
    /// ‖(XY+YX)Q + (s/3)(XY+YX) - tr(XY)Q - (s/3)tr(XY) I‖
    pub product_identity: f64,
    /// ‖P Z - tr(P Z) P‖ with P = Q/s + I/3
    pub projector_identity: f64,
    /// ‖[XY+YX, Q]‖
    pub tangent_product_normal: f64,
    /// ‖[ZW+WZ, Q]‖ with W = XY+YX
    pub normal_product_normal: f64,
    /// tangency residual of XZ+ZX
    pub mixed_product_tangent: f64,
}

impl IdentityResiduals {
    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("trace_identity", self.trace_identity.abs()),
            ("product_identity", self.product_identity),
            ("projector_identity", self.projector_identity),
            ("tangent_product_normal", self.tangent_product_normal),
            ("normal_product_normal", self.normal_product_normal),
            ("mixed_product_tangent", self.mixed_product_tangent),
        ]
    }

    pub fn max(&self) -> f64 {
        self.named().iter().fold(0.0, |a, (_, v)| a.max(*v))
    }
}

/// The manifold geometry at a fixed order parameter s.
///
/// The free functions below build one from `MaterialParams`; constructing it
/// with an arbitrary s is how the identity suite runs its mutation check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    s: f64,
}

impl Geometry {
    pub fn new(p: &MaterialParams) -> Self {
        Geometry { s: p.s_plus() }
    }

    pub fn with_s(s: f64) -> Self {
        Geometry { s }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn point(&self, n: Vec3) -> Result<ManifoldPoint> {
        ManifoldPoint::from_director(n, self.s)
    }

    pub fn project(&self, q: &QTensor, gap_tol: f64) -> Result<ManifoldPoint> {
        let d = eig3(q.as_sym());
        let gap = d.values[0] - d.values[1];
        if !(gap >= gap_tol) {
            return Err(Error::DegenerateSpectrum { gap, gap_tol });
        }
        ManifoldPoint::from_director(d.vector(0), self.s)
    }

    /// ‖(s/3)X - XQ - QX‖, zero iff X is tangent at Q.
    pub fn tangency_residual(&self, x: &SymMatrix, q: &QTensor) -> f64 {
        (*x * (self.s / 3.0) - x.anticommutator(q.as_sym())).norm()
    }

    /// Normal part -(2/s²)((s/3)A - QA - AQ)(Q - s/6 I).
    pub fn normal_part(&self, a: &SymMatrix, q: &QTensor) -> SymMatrix {
        let s = self.s;
        let defect = *a * (s / 3.0) - a.anticommutator(q.as_sym());
        let shifted = *q.as_sym() - SymMatrix::scaled_identity(s / 6.0);
        (defect.mat_mul(&shifted) * (-2.0 / (s * s))).symmetric_part()
    }

    pub fn tangential_part(&self, a: &SymMatrix, q: &QTensor) -> SymMatrix {
        *a - self.normal_part(a, q)
    }

    pub fn split(&self, a: &SymMatrix, base: &ManifoldPoint) -> TangentNormalSplit {
        let normal = self.normal_part(a, base.q());
        TangentNormalSplit { tangential: QTensor::from_sym(*a - normal), normal, base: *base }
    }

    fn require_tangent(&self, x: &QTensor, base: &ManifoldPoint) -> Result<()> {
        let residual = self.tangency_residual(x.as_sym(), base.q());
        let scale = x.norm().max(1.0) * self.s.max(1.0);
        if residual > PRECONDITION_TOL * scale {
            return Err(Error::NotTangent { residual });
        }
        Ok(())
    }

    /// II(X, Y) = -(1/s²)(XY + YX)(2Q - s/3 I).
    pub fn second_fundamental_form(&self, x: &QTensor, y: &QTensor, base: &ManifoldPoint) -> Result<QTensor> {
        self.require_tangent(x, base)?;
        self.require_tangent(y, base)?;
        let s = self.s;
        let sym = x.as_sym().anticommutator(y.as_sym());
        let factor = *base.q().as_sym() * 2.0 - SymMatrix::scaled_identity(s / 3.0);
        Ok(QTensor::from_sym((sym.mat_mul(&factor) * (-1.0 / (s * s))).symmetric_part()))
    }

    /// Harmonic right-hand side for a given Σ_α (∇_α Q)², as a raw product.
    ///
    /// Off the manifold the three forms differ and the products need not be
    /// symmetric, so no projection is applied here.
    pub fn harmonic_rhs_matrix(&self, q: &QTensor, sq: &SymMatrix, form: HarmonicForm) -> Mat3 {
        let s = self.s;
        let shifted = *q.as_sym() - SymMatrix::scaled_identity(s / 6.0);
        match form {
            HarmonicForm::Trace => {
                let t = sq.trace();
                (*q.as_sym() * (-2.0 * t / (s * s)) + (*sq - SymMatrix::scaled_identity(t / 3.0)) * (2.0 / s))
                    .to_mat3()
            }
            HarmonicForm::Right => sq.mat_mul(&shifted) * (-4.0 / (s * s)),
            HarmonicForm::Left => shifted.mat_mul(sq) * (-4.0 / (s * s)),
        }
    }

    pub fn harmonic_rhs_from_square(&self, q: &QTensor, sq: &SymMatrix, form: HarmonicForm) -> SymMatrix {
        self.harmonic_rhs_matrix(q, sq, form).symmetric_part()
    }

    pub fn harmonic_rhs(&self, base: &ManifoldPoint, grads: &[QTensor; 3], form: HarmonicForm) -> Result<QTensor> {
        for g in grads {
            self.require_tangent(g, base)?;
        }
        let sq = grads.iter().fold(SymMatrix::ZERO, |acc, g| acc + g.square());
        Ok(QTensor::from_sym(self.harmonic_rhs_from_square(base.q(), &sq, form)))
    }

    pub fn check_identities(&self, x: &QTensor, y: &QTensor, z: &SymMatrix, base: &ManifoldPoint) -> IdentityResiduals {
        let s = self.s;
        let q = base.q().as_sym();
        let xy = x.as_sym().anticommutator(y.as_sym());
        let txy = x.dot(y);
        let xy_q = xy.mat_mul(q);

        let trace_identity = xy_q.trace() - s / 3.0 * txy;
        let product_rhs = xy * (-s / 3.0) + *q * txy + SymMatrix::scaled_identity(s / 3.0 * txy);
        let product_identity = (xy_q - product_rhs.to_mat3()).norm();

        let p1 = *q * (1.0 / s) + SymMatrix::scaled_identity(1.0 / 3.0);
        let p1z = p1.mat_mul(z);
        let coeff = q.dot(z) / s + z.trace() / 3.0;
        let projector_identity = (p1z - p1.to_mat3() * coeff).norm();

        let tangent_product_normal = xy.commutator(q).norm();
        let zw = z.anticommutator(&xy);
        let normal_product_normal = zw.commutator(q).norm();
        let xz = x.as_sym().anticommutator(z);
        let mixed_product_tangent = self.tangency_residual(&xz, base.q());

        IdentityResiduals {
            trace_identity,
            product_identity,
            projector_identity,
            tangent_product_normal,
            normal_product_normal,
            mixed_product_tangent,
        }
    }
}

/// Nearest point of the limit manifold, with the default gap tolerance 0.1 s.
pub fn project_to_manifold(q: &QTensor, p: &MaterialParams) -> Result<ManifoldPoint> {
    project_to_manifold_with_gap(q, p, DEFAULT_GAP_FRACTION * p.s_plus())
}

pub fn project_to_manifold_with_gap(q: &QTensor, p: &MaterialParams, gap_tol: f64) -> Result<ManifoldPoint> {
    Geometry::new(p).project(q, gap_tol)
}

/// Exact Frobenius distance to the limit manifold.
///
/// The closest point is s(n ⊗ n - I/3) with n a top eigenvector, so
/// dist² = |Q|² + 2s²/3 - 2 s λ_max.
pub fn distance_to_manifold(q: &QTensor, s: f64) -> f64 {
    let [l1, l2, l3] = eig3(q.as_sym()).values;
    ((l1 - 2.0 * s / 3.0).powi(2) + (l2 + s / 3.0).powi(2) + (l3 + s / 3.0).powi(2)).sqrt()
}

pub fn split_tangent_normal(a: &SymMatrix, base: &ManifoldPoint, p: &MaterialParams) -> TangentNormalSplit {
    Geometry::new(p).split(a, base)
}

pub fn second_fundamental_form(x: &QTensor, y: &QTensor, base: &ManifoldPoint, p: &MaterialParams) -> Result<QTensor> {
    Geometry::new(p).second_fundamental_form(x, y, base)
}

pub fn harmonic_rhs(base: &ManifoldPoint, grads: &[QTensor; 3], p: &MaterialParams, form: HarmonicForm) -> Result<QTensor> {
    Geometry::new(p).harmonic_rhs(base, grads, form)
}

pub fn check_identities(
    x: &QTensor,
    y: &QTensor,
    z: &SymMatrix,
    base: &ManifoldPoint,
    p: &MaterialParams,
) -> IdentityResiduals {
    Geometry::new(p).check_identities(x, y, z, base)
}

/// Norm of poly_min(q), zero on the manifold.
pub fn manifold_residual(q: &QTensor, s: f64) -> f64 {
    poly_min(q, s).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::dot3;

    fn unit() -> MaterialParams {
        MaterialParams::unit(1.0).unwrap()
    }

    #[test]
    fn projection_is_idempotent_on_manifold() {
        let p = unit();
        let base = Geometry::new(&p).point([1.0, 2.0, -0.5]).unwrap();
        let again = project_to_manifold(base.q(), &p).unwrap();
        assert!((*again.q() - *base.q()).norm() < 1e-14);
        assert!(dot3(again.director(), base.director()).abs() > 1.0 - 1e-14);
    }

    #[test]
    fn projection_rejects_isotropic() {
        let p = unit();
        let err = project_to_manifold(&QTensor::ZERO, &p).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { .. }));
    }

    #[test]
    fn split_of_base_is_normal() {
        let p = unit();
        let base = Geometry::new(&p).point([0.0, 0.0, 1.0]).unwrap();
        let sp = split_tangent_normal(base.q().as_sym(), &base, &p);
        assert!(sp.tangential.norm() < 1e-15);
        let id = split_tangent_normal(&SymMatrix::IDENTITY, &base, &p);
        assert!(id.tangential.norm() < 1e-15);
        assert!((id.normal - SymMatrix::IDENTITY).norm() < 1e-15);
    }

    #[test]
    fn rotation_generator_is_tangent() {
        let p = unit();
        let base = Geometry::new(&p).point([1.0, 0.0, 0.0]).unwrap();
        let a = SymMatrix::sym_outer([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let sp = split_tangent_normal(&a, &base, &p);
        assert!(sp.normal.norm() < 1e-15);
    }

    #[test]
    fn second_form_in_rotation_plane() {
        let p = unit();
        let s = p.s_plus();
        let base = Geometry::new(&p).point([1.0, 0.0, 0.0]).unwrap();
        let v = QTensor::from_sym(SymMatrix::sym_outer([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) * s);
        let ii = second_fundamental_form(&v, &v, &base, &p).unwrap();
        let expect = SymMatrix::diag([-2.0 * s, 2.0 * s, 0.0]);
        assert!((ii.to_sym() - expect).norm() < 1e-14);
    }

    #[test]
    fn second_form_rejects_normal_input() {
        let p = unit();
        let base = Geometry::new(&p).point([1.0, 0.0, 0.0]).unwrap();
        let err = second_fundamental_form(base.q(), base.q(), &base, &p).unwrap_err();
        assert!(matches!(err, Error::NotTangent { .. }));
    }

    #[test]
    fn harmonic_rhs_zero_gradient() {
        let p = unit();
        let base = Geometry::new(&p).point([0.3, 0.4, 0.5]).unwrap();
        for form in [HarmonicForm::Trace, HarmonicForm::Right, HarmonicForm::Left] {
            let r = harmonic_rhs(&base, &[QTensor::ZERO; 3], &p, form).unwrap();
            assert_eq!(r.norm(), 0.0);
        }
    }

    #[test]
    fn identities_at_rank_one_frame() {
        let p = unit();
        let s = p.s_plus();
        let base = Geometry::new(&p).point([1.0, 0.0, 0.0]).unwrap();
        let x = QTensor::from_sym(SymMatrix::sym_outer([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]));
        let y = QTensor::from_sym(SymMatrix::sym_outer([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]));
        let z = *base.q().as_sym();
        let r = check_identities(&x, &y, &z, &base, &p);
        assert!(r.max() < 1e-14, "{r:?}");
        let xy = x.as_sym().anticommutator(y.as_sym());
        assert!(xy.commutator(base.q().as_sym()).norm() < 1e-15);
        assert!(s > 0.0);
    }

    #[test]
    fn distance_matches_projection() {
        let p = unit();
        let q = QTensor::new(0.8, -0.3, 0.2, 0.1, -0.05);
        let proj = project_to_manifold(&q, &p).unwrap();
        let d = (q - *proj.q()).norm();
        assert!((distance_to_manifold(&q, p.s_plus()) - d).abs() < 1e-13);
    }
}
