use super::field::{Field, FieldValue, TensorField};
use crate::bulk::f_bulk_shifted;
use crate::error::Result;
use crate::params::MaterialParams;
use crate::reduce::pairwise_sum;
use rayon::prelude::*;
use serde::Serialize;

/// ∫|∇F|² as a sum over lattice edges, each weighted by the trapezoid rule
/// across the two transverse axes. Exact for linear fields.
pub fn dirichlet_integral<T: FieldValue>(f: &Field<T>) -> f64 {
    let g = f.grid();
    let n = g.shape();
    let st = g.strides();
    let h = g.spacing();
    let vol = g.cell_volume();
    let v = f.values();
    let per_node: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let c = g.coords(i);
            let mut acc = 0.0;
            for a in 0..3 {
                if c[a] + 1 < n[a] {
                    let d = (v[i + st[a]] - v[i]).magnitude();
                    acc += g.face_weight(i, Some(a)) * d * d / (h[a] * h[a]);
                }
            }
            acc * vol
        })
        .collect();
    pairwise_sum(&per_node)
}

/// ∫ f̃_B(Q) with trapezoid weights.
pub fn bulk_integral(f: &TensorField, p: &MaterialParams) -> f64 {
    let g = f.grid();
    let per_node: Vec<f64> = f
        .values()
        .par_iter()
        .enumerate()
        .map(|(i, q)| g.quadrature_weight(i) * f_bulk_shifted(q, p))
        .collect();
    pairwise_sum(&per_node)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LdgEnergy {
    /// ∫|∇Q|², without the L/2 factor.
    pub dirichlet: f64,
    /// ∫ f̃_B(Q).
    pub bulk: f64,
    /// (L/2) dirichlet + bulk.
    pub total: f64,
}

pub fn energy_ldg(f: &TensorField, p: &MaterialParams) -> LdgEnergy {
    let dirichlet = dirichlet_integral(f);
    let bulk = bulk_integral(f, p);
    LdgEnergy { dirichlet, bulk, total: 0.5 * p.l() * dirichlet + bulk }
}

pub fn energy_harmonic(f: &TensorField) -> f64 {
    dirichlet_integral(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub sup_interior: f64,
}

/// Norms of f - g: trapezoid L², edge-based H¹ seminorm, and the sup over
/// interior nodes at least `margin` from the boundary.
pub fn norms(f: &TensorField, g: &TensorField, margin: f64) -> Result<FieldNorms> {
    f.require_same_grid(g)?;
    f.grid().check_margin(margin)?;
    let d = f.sub_field(g)?;
    let grid = d.grid();
    let sq: Vec<f64> = d
        .values()
        .par_iter()
        .enumerate()
        .map(|(i, v)| grid.quadrature_weight(i) * v.norm_sq())
        .collect();
    Ok(FieldNorms {
        l2: pairwise_sum(&sq).sqrt(),
        h1_semi: dirichlet_integral(&d).sqrt(),
        sup_interior: d.interior_sup(margin),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::GridSpec;
    use crate::tensor::QTensor;

    fn m() -> QTensor {
        QTensor::new(0.3, -0.1, 0.2, 0.05, -0.4)
    }

    #[test]
    fn linear_field_dirichlet_is_exact() {
        let g = GridSpec::new([4, 5, 6], [0.0; 3], [1.0, 2.0, 0.5]).unwrap();
        let f = TensorField::from_fn(&g, |_, x| m() * x[0]);
        assert!((energy_harmonic(&f) - g.volume() * m().norm_sq()).abs() < 1e-13);
    }

    #[test]
    fn constant_fields() {
        let g = GridSpec::cube(5, 1.0).unwrap();
        let p = MaterialParams::unit(0.1).unwrap();
        let on = TensorField::filled(&g, QTensor::uniaxial([0.0, 1.0, 0.0], 1.5));
        assert!(energy_ldg(&on, &p).total.abs() < 1e-13);
        let q0 = m();
        let off = TensorField::filled(&g, q0);
        let e = energy_ldg(&off, &p);
        assert!((e.total - g.volume() * f_bulk_shifted(&q0, &p)).abs() < 1e-12);
        assert_eq!(e.dirichlet, 0.0);
    }

    #[test]
    fn offset_norm() {
        let g = GridSpec::cube(5, 1.0).unwrap();
        let f = TensorField::from_fn(&g, |_, x| m() * x[1]);
        let c = 0.7;
        let k = f.map(|_, v| *v + m() * c);
        let n = norms(&k, &f, 0.0).unwrap();
        assert!((n.l2 - c * m().norm() * g.volume().sqrt()).abs() < 1e-13);
        assert!(n.h1_semi.abs() < 1e-13);
        assert!((n.sup_interior - c * m().norm()).abs() < 1e-13);
    }

    #[test]
    fn margin_excludes_boundary_bump() {
        let g = GridSpec::cube(8, 1.0).unwrap();
        let zero = TensorField::zeros(&g);
        let bump = TensorField::from_fn(&g, |i, _| if g.boundary_distance(i) < 0.3 { m() } else { QTensor::ZERO });
        assert_eq!(norms(&bump, &zero, 0.4).unwrap().sup_interior, 0.0);
        assert!(norms(&bump, &zero, 0.0).unwrap().sup_interior > 0.0);
        assert!(norms(&bump, &zero, 1.0).is_err());
    }
}
