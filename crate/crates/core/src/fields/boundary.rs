use super::field::TensorField;
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::params::MaterialParams;
use crate::tensor::{norm3, QTensor, Vec3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Radial director field s(x̂ ⊗ x̂ - I/3) about the box center. With
/// `fill_interior` the interior nodes get the same formula, otherwise zero.
pub fn boundary_hedgehog(g: &GridSpec, p: &MaterialParams, fill_interior: bool) -> Result<TensorField> {
    let s = p.s_plus();
    let c = g.center();
    let tol = 1e-9 * g.spacing().iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let mut field = TensorField::zeros(g);
    for i in 0..g.len() {
        if !fill_interior && !g.is_boundary(i) {
            continue;
        }
        let x = g.position(i);
        let r = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let len = norm3(r);
        if len <= tol {
            return Err(Error::CenterOnNode { index: i });
        }
        field.set(i, QTensor::uniaxial([r[0] / len, r[1] / len, r[2] / len], s));
    }
    Ok(field)
}

/// Smooth director perturbations about the constant director e₃.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltPattern {
    /// Tilt toward e₁ by θ sin(π x̂₁).
    #[default]
    Tilt,
    /// Tilt toward e₁ by θ sin(π x̂₁) sin(π x̂₂)/√2, twisted toward e₂ by
    /// θ sin(π x̂₃) cos(π x̂₁)/√2.
    Saddle,
}

/// Director at normalized position `u` ∈ [0,1]³ for tilt amplitude `theta`.
pub fn tilted_director(u: Vec3, theta: f64, pattern: TiltPattern) -> Vec3 {
    let (a, b) = match pattern {
        TiltPattern::Tilt => (theta * (PI * u[0]).sin(), 0.0),
        TiltPattern::Saddle => {
            let t = theta * std::f64::consts::FRAC_1_SQRT_2;
            (t * (PI * u[0]).sin() * (PI * u[1]).sin(), t * (PI * u[2]).sin() * (PI * u[0]).cos())
        }
    };
    let n = [a.sin() * b.cos(), b.sin(), a.cos() * b.cos()];
    let l = norm3(n);
    [n[0] / l, n[1] / l, n[2] / l]
}

/// Boundary data s(n ⊗ n - I/3) with n a perturbation of e₃ whose angle is
/// at most eps/√2, so the data stay within eps·s of the constant state.
/// Interior nodes are set to the constant state.
pub fn boundary_near_constant(g: &GridSpec, p: &MaterialParams, eps: f64, pattern: TiltPattern) -> Result<TensorField> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be finite and non-negative, got {eps}")));
    }
    let s = p.s_plus();
    let theta = eps / std::f64::consts::SQRT_2;
    let constant = QTensor::uniaxial([0.0, 0.0, 1.0], s);
    Ok(TensorField::from_fn(g, |i, x| {
        if g.is_boundary(i) {
            let u = std::array::from_fn(|a| (x[a] - g.box_min[a]) / (g.box_max[a] - g.box_min[a]));
            QTensor::uniaxial(tilted_director(u, theta, pattern), s)
        } else {
            constant
        }
    }))
}
