use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::tensor::{Mat3, QTensor, SymMatrix, Vec3};
use rayon::prelude::*;
use std::ops::{Add, Mul, Sub};

/// Values that can live on grid nodes and be combined linearly.
pub trait FieldValue: Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl FieldValue for QTensor {
    fn zero() -> Self {
        QTensor::ZERO
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl FieldValue for SymMatrix {
    fn zero() -> Self {
        SymMatrix::ZERO
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl FieldValue for Mat3 {
    fn zero() -> Self {
        Mat3::ZERO
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// One value per grid node, boundary layer included. Boundary nodes carry
/// the Dirichlet data and are never written by the solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: GridSpec,
    values: Vec<T>,
}

pub type TensorField = Field<QTensor>;
pub type SymField = Field<SymMatrix>;
pub type ScalarField = Field<f64>;
pub type MatField = Field<Mat3>;

impl<T: FieldValue> Field<T> {
    pub fn filled(grid: &GridSpec, v: T) -> Self {
        Field { grid: grid.clone(), values: vec![v; grid.len()] }
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self::filled(grid, T::zero())
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(usize, Vec3) -> T + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(i, grid.position(i))).collect();
        Field { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Field { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, idx: usize) -> T {
        self.values[idx]
    }

    pub fn set(&mut self, idx: usize, v: T) {
        self.values[idx] = v;
    }

    pub fn require_same_grid<U>(&self, other: &Field<U>) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Parallel nodewise map.
    pub fn map<U: FieldValue>(&self, f: impl Fn(usize, &T) -> U + Sync) -> Field<U> {
        let values = self.values.par_iter().enumerate().map(|(i, v)| f(i, v)).collect();
        Field { grid: self.grid.clone(), values }
    }

    /// Parallel map over interior nodes; boundary nodes get zero.
    pub fn map_interior<U: FieldValue>(&self, f: impl Fn(usize) -> U + Sync) -> Field<U> {
        let g = &self.grid;
        let values = (0..g.len())
            .into_par_iter()
            .map(|i| if g.is_boundary(i) { U::zero() } else { f(i) })
            .collect();
        Field { grid: g.clone(), values }
    }

    pub fn sub_field(&self, other: &Field<T>) -> Result<Field<T>> {
        self.require_same_grid(other)?;
        Ok(self.map(|i, v| *v - other.values[i]))
    }

    pub fn scaled(&self, k: f64) -> Field<T> {
        self.map(|_, v| *v * k)
    }

    /// Largest magnitude over nodes accepted by `keep`.
    pub fn max_magnitude_where(&self, keep: impl Fn(usize) -> bool + Sync) -> f64 {
        self.values
            .par_iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, v)| v.magnitude())
            .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
    }

    /// Largest magnitude over nodes at distance at least `margin` from the
    /// boundary, excluding the boundary layer itself.
    pub fn interior_sup(&self, margin: f64) -> f64 {
        let g = &self.grid;
        self.max_magnitude_where(|i| !g.is_boundary(i) && g.boundary_distance(i) >= margin - 1e-12)
    }

    fn require_interior(&self, idx: usize) -> Result<()> {
        if idx >= self.grid.len() || self.grid.is_boundary(idx) {
            return Err(Error::BoundaryNode { index: idx });
        }
        Ok(())
    }

    /// 7-point Laplacian; the caller guarantees an interior node.
    pub fn laplacian_at(&self, idx: usize) -> T {
        let st = self.grid.strides();
        let h = self.grid.spacing();
        let c = self.values[idx];
        let mut acc = T::zero();
        for a in 0..3 {
            let second = self.values[idx + st[a]] + self.values[idx - st[a]] - c * 2.0;
            acc = acc + second * (1.0 / (h[a] * h[a]));
        }
        acc
    }

    pub fn laplacian(&self, idx: usize) -> Result<T> {
        self.require_interior(idx)?;
        Ok(self.laplacian_at(idx))
    }

    pub fn laplacian_field(&self) -> Field<T> {
        self.map_interior(|i| self.laplacian_at(i))
    }

    /// Centered first differences along each axis.
    pub fn gradient_at(&self, idx: usize) -> [T; 3] {
        let st = self.grid.strides();
        let h = self.grid.spacing();
        std::array::from_fn(|a| (self.values[idx + st[a]] - self.values[idx - st[a]]) * (0.5 / h[a]))
    }

    pub fn gradient(&self, idx: usize) -> Result<[T; 3]> {
        self.require_interior(idx)?;
        Ok(self.gradient_at(idx))
    }
}

impl TensorField {
    /// Discrete Σ_α (∇_α Q)² at an interior node: the average over the six
    /// incident edges of the squared one-sided differences.
    ///
    /// For manifold-valued fields this makes tr(Q Δ_h Q) = -tr(Σ) hold exactly
    /// and keeps the harmonic-map forms in agreement node by node.
    pub fn grad_square_at(&self, idx: usize) -> SymMatrix {
        let st = self.grid.strides();
        let h = self.grid.spacing();
        let c = *self.values[idx].as_sym();
        let mut acc = SymMatrix::ZERO;
        for a in 0..3 {
            let up = *self.values[idx + st[a]].as_sym() - c;
            let dn = *self.values[idx - st[a]].as_sym() - c;
            acc += (up.square() + dn.square()) * (0.5 / (h[a] * h[a]));
        }
        acc
    }

    pub fn grad_square(&self, idx: usize) -> Result<SymMatrix> {
        self.require_interior(idx)?;
        Ok(self.grad_square_at(idx))
    }

    pub fn grad_square_field(&self) -> SymField {
        self.map_interior(|i| self.grad_square_at(i))
    }

    /// Discrete Σ_α (∇_α F ∇_α G + ∇_α G ∇_α F), edge-averaged like
    /// `grad_square_at`, so that grad_product(F, F) = 2 grad_square(F).
    pub fn grad_product_at(&self, other: &TensorField, idx: usize) -> SymMatrix {
        let st = self.grid.strides();
        let h = self.grid.spacing();
        let (cf, cg) = (*self.values[idx].as_sym(), *other.values[idx].as_sym());
        let mut acc = SymMatrix::ZERO;
        for a in 0..3 {
            for nb in [idx + st[a], idx - st[a]] {
                let df = *self.values[nb].as_sym() - cf;
                let dg = *other.values[nb].as_sym() - cg;
                acc += df.anticommutator(&dg) * (0.5 / (h[a] * h[a]));
            }
        }
        acc
    }
}
