//! Diagnostics of the family of minimizers as L → 0: the rescaled
//! minimal-polynomial fields, the rewritten equation and its remainder, the
//! first-order corrector, the linearized harmonic-map operator, the
//! projected equation, and log-log rate fits.

use crate::error::{Error, Result};
use crate::fields::{Field, MatField, ScalarField, SymField, TensorField};
use crate::geometry::{Geometry, HarmonicForm, DEFAULT_GAP_FRACTION};
use crate::params::MaterialParams;
use crate::tensor::{poly_min, Mat3, QTensor, SymMatrix};
use rayon::prelude::*;
use serde::Serialize;

/// X, Y, Z and the remainder R on interior nodes (zero on the boundary).
///
/// Z and R are stored as symmetric parts. Their antisymmetric parts come
/// only from (Q - s/6 I) Σ and cancel in the rewritten equation.
#[derive(Clone, Debug)]
pub struct DiagnosticFields {
    pub x: SymField,
    pub y: ScalarField,
    pub z: SymField,
    pub r: SymField,
}

pub fn compute_xyz(q_l: &TensorField, p: &MaterialParams) -> DiagnosticFields {
    let s = p.s_plus();
    let (b2, c2) = (p.b2(), p.c2());
    let k = p.trace_weight();
    let inv_l = 1.0 / p.l();
    let per_node: Vec<(SymMatrix, f64, SymMatrix, SymMatrix)> = (0..q_l.grid().len())
        .into_par_iter()
        .map(|i| {
            if q_l.grid().is_boundary(i) {
                return (SymMatrix::ZERO, 0.0, SymMatrix::ZERO, SymMatrix::ZERO);
            }
            let q = q_l.get(i);
            let sq = q_l.grad_square_at(i);
            let gn = sq.trace();
            let x = poly_min(&q, s) * inv_l;
            let y = x.trace() + k * gn;
            let bulk_part = *q.as_sym() * c2 + SymMatrix::scaled_identity(b2 / 3.0);
            let shifted = *q.as_sym() - SymMatrix::scaled_identity(s / 6.0);
            let brace = bulk_part * (-k * s * s * gn) + (shifted.mat_mul(&sq) * 4.0).symmetric_part();
            let z = x - brace * (1.0 / (b2 * s * s));
            let r = *q.as_sym() * (c2 * y) + SymMatrix::scaled_identity(b2 / 3.0 * y) - z * b2;
            (x, y, z, r)
        })
        .collect();
    let g = q_l.grid();
    let pick = |f: fn(&(SymMatrix, f64, SymMatrix, SymMatrix)) -> SymMatrix| {
        Field::from_values(g, per_node.iter().map(f).collect()).expect("same grid")
    };
    DiagnosticFields {
        x: pick(|t| t.0),
        y: Field::from_values(g, per_node.iter().map(|t| t.1).collect()).expect("same grid"),
        z: pick(|t| t.2),
        r: pick(|t| t.3),
    }
}

pub fn remainder_field(q_l: &TensorField, p: &MaterialParams) -> SymField {
    compute_xyz(q_l, p).r
}

/// Nodewise ‖Δ_h Q - H(Q) - R‖ with H the harmonic right-hand side
/// -(4/s²)(Q - s/6 I) Σ (symmetric part). Equals the Euler-Lagrange
/// residual |Δ_h Q - ∇f_B(Q)/L| up to rounding.
pub fn remainder_identity_residual(q_l: &TensorField, p: &MaterialParams) -> ScalarField {
    let geom = Geometry::new(p);
    let r = remainder_field(q_l, p);
    q_l.map_interior(|i| {
        let rhs = geom.harmonic_rhs_from_square(&q_l.get(i), &q_l.grad_square_at(i), HarmonicForm::Left);
        (*q_l.laplacian_at(i).as_sym() - rhs - r.get(i)).norm()
    })
}

fn require_on_manifold(f: &TensorField, s: f64) -> Result<()> {
    let tol = 1e-8 * s.max(1.0).powi(2);
    for (i, q) in f.values().iter().enumerate() {
        let res = poly_min(q, s).norm();
        if !(res <= tol) {
            return Err(Error::NotOnManifold { node: i, residual: res });
        }
    }
    Ok(())
}

/// Closed-form normal corrector
/// A = -(2/(b² s²)) [k |∇Q|² (c² Q + b²/3 I)(Q - s/6 I) - Σ_α (∇_α Q)²],
/// k = 6/(6a² + b² s), at interior nodes.
pub fn corrector_a(q_star: &TensorField, p: &MaterialParams) -> Result<TensorField> {
    let s = p.s_plus();
    require_on_manifold(q_star, s)?;
    let k = p.trace_weight();
    let (b2, c2) = (p.b2(), p.c2());
    Ok(q_star.map_interior(|i| {
        let q = *q_star.get(i).as_sym();
        let sq = q_star.grad_square_at(i);
        let bulk_part = q * c2 + SymMatrix::scaled_identity(b2 / 3.0);
        let shifted = q - SymMatrix::scaled_identity(s / 6.0);
        let bracket = bulk_part.mat_mul(&shifted).symmetric_part() * (k * sq.trace()) - sq;
        QTensor::from_sym(bracket * (-2.0 / (b2 * s * s)))
    }))
}

/// A, the tangential part B of the empirical corrector, and the empirical
/// corrector (Q_L - Q_*)/L itself.
#[derive(Clone, Debug)]
pub struct CorrectorFields {
    pub a: TensorField,
    pub b: TensorField,
    pub qdot: TensorField,
}

pub fn corrector_fields(q_star: &TensorField, q_l: &TensorField, p: &MaterialParams) -> Result<CorrectorFields> {
    q_star.require_same_grid(q_l)?;
    let a = corrector_a(q_star, p)?;
    let qdot = q_l.sub_field(q_star)?.scaled(1.0 / p.l());
    let b = tangential_field(q_star, &qdot, &Geometry::new(p));
    Ok(CorrectorFields { a, b, qdot })
}

/// Nodewise tangential projection of `f` at the points of `base`.
pub fn tangential_field(base: &TensorField, f: &TensorField, geom: &Geometry) -> TensorField {
    f.map(|i, v| QTensor::from_sym(geom.tangential_part(v.as_sym(), &base.get(i))))
}

/// Nodewise normal projection of `f` at the points of `base`.
pub fn normal_field(base: &TensorField, f: &TensorField, geom: &Geometry) -> TensorField {
    f.map(|i, v| QTensor::from_sym(geom.normal_part(v.as_sym(), &base.get(i))))
}

/// Max over interior nodes at least `margin` from the boundary of
/// |normal part of (Q_L - Q_*)/L at Q_* - A|.
pub fn corrector_a_error(q_star: &TensorField, q_l: &TensorField, a: &TensorField, p: &MaterialParams, margin: f64) -> Result<f64> {
    q_star.require_same_grid(q_l)?;
    q_star.require_same_grid(a)?;
    let geom = Geometry::new(p);
    let qdot = q_l.sub_field(q_star)?.scaled(1.0 / p.l());
    let diff = normal_field(q_star, &qdot, &geom).sub_field(a)?;
    Ok(diff.interior_sup(margin))
}

/// Residual of the tangential corrector equation
/// ΔB = -b²(BA + AB) - k c² |∇Q|² B
///      - (4/s²) Σ_α [(∇_α B)^∥ ∇_α Q + ∇_α Q (∇_α B)^∥](Q - s/6 I) - (ΔA)^∥
/// at nodes two layers inside the boundary (zero elsewhere).
pub fn corrector_b_residual(q_star: &TensorField, a: &TensorField, b: &TensorField, p: &MaterialParams) -> Result<ScalarField> {
    q_star.require_same_grid(a)?;
    q_star.require_same_grid(b)?;
    let s = p.s_plus();
    let geom = Geometry::new(p);
    let k = p.trace_weight();
    let (b2, c2) = (p.b2(), p.c2());
    let lap_a = a.laplacian_field();
    let g = q_star.grid();
    Ok(q_star.map_interior(|i| {
        if !g.is_interior_at_depth(i, 2) {
            return 0.0;
        }
        let q = q_star.get(i);
        let (av, bv) = (*a.get(i).as_sym(), *b.get(i).as_sym());
        let gq = q_star.gradient_at(i);
        let gb = b.gradient_at(i);
        let mut coupling = SymMatrix::ZERO;
        for al in 0..3 {
            let gb_t = geom.tangential_part(gb[al].as_sym(), &q);
            coupling += gb_t.anticommutator(gq[al].as_sym());
        }
        let shifted = *q.as_sym() - SymMatrix::scaled_identity(s / 6.0);
        let rhs = bv.anticommutator(&av) * (-b2) - bv * (k * c2 * q_star.grad_square_at(i).trace())
            - coupling.mat_mul(&shifted).symmetric_part() * (4.0 / (s * s))
            - geom.tangential_part(lap_a.get(i).as_sym(), &q);
        (*b.laplacian_at(i).as_sym() - rhs).norm()
    }))
}

/// Linearized harmonic-map operator
/// ℒΨ = ΔΨ + (4/s²)(Q - s/6 I) Σ_α(∇_α Q ∇_α Ψ + ∇_α Ψ ∇_α Q) + (4/s²) Ψ Σ_α (∇_α Q)²,
/// the Gateaux derivative of F(Q) = Δ_h Q + (4/s²)(Q - s/6 I) Σ_α (∇_α Q)².
pub fn linearized_apply(q_star: &TensorField, psi: &TensorField, p: &MaterialParams) -> Result<MatField> {
    q_star.require_same_grid(psi)?;
    let s = p.s_plus();
    let c = 4.0 / (s * s);
    Ok(q_star.map_interior(|i| {
        let shifted = *q_star.get(i).as_sym() - SymMatrix::scaled_identity(s / 6.0);
        let cross = q_star.grad_product_at(psi, i);
        let sq = q_star.grad_square_at(i);
        psi.laplacian_at(i).to_mat3() + shifted.mat_mul(&cross) * c + psi.get(i).as_sym().mat_mul(&sq) * c
    }))
}

/// F(Q) = Δ_h Q + (4/s²)(Q - s/6 I) Σ_α (∇_α Q)², the map linearized above.
pub fn harmonic_map_operator(q: &TensorField, p: &MaterialParams) -> MatField {
    let s = p.s_plus();
    q.map_interior(|i| {
        let shifted = *q.get(i).as_sym() - SymMatrix::scaled_identity(s / 6.0);
        q.laplacian_at(i).to_mat3() + shifted.mat_mul(&q.grad_square_at(i)) * (4.0 / (s * s))
    })
}

/// Largest interior-unknown count accepted by `linearized_min_singular_value`.
pub const MAX_DENSE_UNKNOWNS: usize = 2500;

/// Smallest singular value of ℒ restricted to traceless fields vanishing on
/// the boundary, from a dense SVD. Intended for coarse grids only.
pub fn linearized_min_singular_value(q_star: &TensorField, p: &MaterialParams) -> Result<f64> {
    let g = q_star.grid();
    let interior = g.interior_indices();
    let unknowns = 5 * interior.len();
    if unknowns > MAX_DENSE_UNKNOWNS {
        return Err(Error::InvalidArgument(format!(
            "{unknowns} unknowns exceed the dense limit {MAX_DENSE_UNKNOWNS}; use a coarser grid"
        )));
    }
    let basis = orthonormal_traceless_basis();
    let rows = 9 * interior.len();
    let columns: Vec<Vec<f64>> = (0..unknowns)
        .into_par_iter()
        .map(|col| {
            let mut psi = TensorField::zeros(g);
            psi.set(interior[col / 5], basis[col % 5]);
            let out = linearized_apply(q_star, &psi, p).expect("same grid");
            let mut v = Vec::with_capacity(rows);
            for &i in &interior {
                v.extend(out.get(i).0.iter().flatten().copied());
            }
            v
        })
        .collect();
    let m = nalgebra::DMatrix::from_fn(rows, unknowns, |r, c| columns[c][r]);
    let sv = m.singular_values();
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Frobenius-orthonormal basis of the traceless symmetric matrices.
pub fn orthonormal_traceless_basis() -> [QTensor; 5] {
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let r6 = 1.0 / 6f64.sqrt();
    [
        QTensor::from_sym(SymMatrix::diag([r2, -r2, 0.0])),
        QTensor::from_sym(SymMatrix::diag([r6, r6, -2.0 * r6])),
        QTensor::from_sym(SymMatrix::new(0.0, 0.0, 0.0, r2, 0.0, 0.0)),
        QTensor::from_sym(SymMatrix::new(0.0, 0.0, 0.0, 0.0, r2, 0.0)),
        QTensor::from_sym(SymMatrix::new(0.0, 0.0, 0.0, 0.0, 0.0, r2)),
    ]
}

/// Condition estimate above which T is rejected.
pub const MAX_T_CONDITION: f64 = 1e8;

/// Coefficient of the commutator [Q_L, Σ] in W. The derivation from
/// W = Ŵ - [Q_L, Y] with Y the second fundamental form term gives 2/s.
pub const COMMUTATOR_COEFF: f64 = 2.0;

/// Residual of the equation satisfied by the projection Q♯ of Q_L:
/// Δ_h Q♯ - Y - X, with Y the second-fundamental-form term of Q♯ and
/// X = -[T⁻¹ M W - W M T⁻¹], M = Q♯/s - 2/3 I, at interior nodes.
pub fn projection_residual(q_l: &TensorField, p: &MaterialParams, beta: f64) -> Result<ScalarField> {
    projection_residual_with(q_l, p, beta, COMMUTATOR_COEFF)
}

/// `projection_residual` with the commutator coefficient in W given as
/// `coeff / s`, so alternative forms of W can be compared.
pub fn projection_residual_with(q_l: &TensorField, p: &MaterialParams, beta: f64, coeff: f64) -> Result<ScalarField> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::InvalidArgument("beta must be a nonzero finite number".into()));
    }
    let s = p.s_plus();
    let geom = Geometry::new(p);
    let g = q_l.grid();
    let gap = DEFAULT_GAP_FRACTION * s;

    let sharp_and_k: Vec<(QTensor, Mat3)> = q_l
        .values()
        .par_iter()
        .map(|q| {
            let m = geom.project(q, gap)?;
            let n = m.director();
            let inv = (SymMatrix::outer(n) * 1.5 - SymMatrix::IDENTITY) * (3.0 / s);
            Ok((*m.q(), inv.mat_mul(q.as_sym())))
        })
        .collect::<Result<_>>()?;
    let sharp = TensorField::from_values(g, sharp_and_k.iter().map(|t| t.0).collect())?;
    let kf: MatField = Field::from_values(g, sharp_and_k.iter().map(|t| t.1).collect())?;

    let st = g.strides();
    let h = g.spacing();
    let out: Vec<Result<f64>> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            if g.is_boundary(i) {
                return Ok(0.0);
            }
            let qs = sharp.get(i);
            let qsm = qs.to_mat3();
            let ql = q_l.get(i);
            let ki = kf.get(i);
            let mut w_hat = Mat3::ZERO;
            for a in 0..3 {
                for nb in [i + st[a], i - st[a]] {
                    let dq = (sharp.get(nb) - qs).to_mat3();
                    let dk = kf.get(nb) - ki;
                    w_hat += (dq * dk * qsm - qsm * dk * dq) * (1.0 / (h[a] * h[a]));
                }
            }
            let sq = sharp.grad_square_at(i);
            let w = w_hat - ql.as_sym().commutator(&sq) * (coeff / s);

            let t = ql.to_mat3() - Mat3::IDENTITY * (2.0 / 9.0 * s * ki.trace())
                + (qsm * (1.0 / s) + Mat3::IDENTITY * (1.0 / 3.0)) * beta;
            let t_inv = t.inverse().ok_or(Error::IllConditionedT { node: i, condition: f64::INFINITY })?;
            let condition = t.norm() * t_inv.norm();
            if !(condition <= MAX_T_CONDITION) {
                return Err(Error::IllConditionedT { node: i, condition });
            }
            let m = qsm * (1.0 / s) - Mat3::IDENTITY * (2.0 / 3.0);
            let x = -(t_inv * m * w - w * m * t_inv);
            let y = geom.harmonic_rhs_matrix(&qs, &sq, HarmonicForm::Trace);
            Ok((sharp.laplacian_at(i).to_mat3() - y - x).norm())
        })
        .collect();
    let values = out.into_iter().collect::<Result<Vec<f64>>>()?;
    Field::from_values(g, values)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub ls: Vec<f64>,
    pub errs: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Errors at or below this are treated as exact zeros and dropped from fits.
pub const FIT_FLOOR: f64 = 1e-14;

/// Least-squares fit of log(err) = slope·log(L) + intercept.
pub fn fit_rate(ls: &[f64], errs: &[f64]) -> Result<RateFit> {
    if ls.len() != errs.len() {
        return Err(Error::DegenerateFit(format!("{} L values but {} errors", ls.len(), errs.len())));
    }
    if ls.windows(2).any(|w| !(w[1] < w[0])) || ls.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::DegenerateFit("L values must be positive and strictly decreasing".into()));
    }
    let pairs: Vec<(f64, f64)> = ls
        .iter()
        .zip(errs)
        .filter(|(_, &e)| e.is_finite() && e > FIT_FLOOR)
        .map(|(&l, &e)| (l, e))
        .collect();
    if pairs.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} usable pairs, need at least 3", pairs.len())));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateFit("zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(RateFit {
        ls: pairs.iter().map(|p| p.0).collect(),
        errs: pairs.iter().map(|p| p.1).collect(),
        slope,
        intercept,
        r_squared: 1.0 - ss_res / syy,
    })
}
