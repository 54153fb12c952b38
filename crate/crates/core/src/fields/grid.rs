use crate::error::{Error, Result};
use crate::tensor::Vec3;
use serde::{Deserialize, Serialize};

/// Uniform node lattice on an axis-aligned box.
///
/// `dims` counts interior nodes per axis; one boundary layer sits on each
/// face, so an axis holds `dims + 2` nodes and the spacing is
/// `(box_max - box_min) / (dims + 1)`. Nodes are stored row-major with the
/// last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub box_min: [f64; 3],
    pub box_max: [f64; 3],
}

impl GridSpec {
    pub fn new(dims: [usize; 3], box_min: [f64; 3], box_max: [f64; 3]) -> Result<Self> {
        let g = GridSpec { dims, box_min, box_max };
        g.validate()?;
        Ok(g)
    }

    /// `n` interior nodes per axis on the cube [-half, half]³.
    pub fn cube(n: usize, half: f64) -> Result<Self> {
        Self::new([n; 3], [-half; 3], [half; 3])
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..3 {
            if self.dims[a] < 3 {
                return Err(Error::InvalidGrid(format!("axis {a} has {} interior nodes, need at least 3", self.dims[a])));
            }
            let (lo, hi) = (self.box_min[a], self.box_max[a]);
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidGrid(format!("axis {a} has empty extent [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn spacing(&self) -> [f64; 3] {
        std::array::from_fn(|a| (self.box_max[a] - self.box_min[a]) / (self.dims[a] + 1) as f64)
    }

    /// Nodes per axis, boundary included.
    pub fn shape(&self) -> [usize; 3] {
        std::array::from_fn(|a| self.dims[a] + 2)
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> [usize; 3] {
        let [_, ny, nz] = self.shape();
        [ny * nz, nz, 1]
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        let st = self.strides();
        c[0] * st[0] + c[1] * st[1] + c[2]
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let [_, ny, nz] = self.shape();
        [idx / (ny * nz), (idx / nz) % ny, idx % nz]
    }

    pub fn position(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        let h = self.spacing();
        std::array::from_fn(|a| self.box_min[a] + c[a] as f64 * h[a])
    }

    pub fn center(&self) -> Vec3 {
        std::array::from_fn(|a| 0.5 * (self.box_min[a] + self.box_max[a]))
    }

    /// True when every coordinate is at least `layers` nodes away from a face.
    pub fn is_interior_at_depth(&self, idx: usize, layers: usize) -> bool {
        let c = self.coords(idx);
        let n = self.shape();
        (0..3).all(|a| c[a] >= layers && c[a] + layers < n[a])
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        !self.is_interior_at_depth(idx, 1)
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_boundary(i)).collect()
    }

    /// Distance from the node to the nearest face of the box.
    pub fn boundary_distance(&self, idx: usize) -> f64 {
        let x = self.position(idx);
        (0..3)
            .map(|a| (x[a] - self.box_min[a]).min(self.box_max[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    pub fn half_width(&self) -> f64 {
        (0..3).map(|a| 0.5 * (self.box_max[a] - self.box_min[a])).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|a| self.box_max[a] - self.box_min[a]).product()
    }

    /// Trapezoid weight of a node along the axes other than `skip`.
    pub fn face_weight(&self, idx: usize, skip: Option<usize>) -> f64 {
        let c = self.coords(idx);
        let n = self.shape();
        let mut w = 1.0;
        for a in 0..3 {
            if Some(a) != skip && (c[a] == 0 || c[a] == n[a] - 1) {
                w *= 0.5;
            }
        }
        w
    }

    /// Trapezoid quadrature weight including the cell volume.
    pub fn quadrature_weight(&self, idx: usize) -> f64 {
        self.face_weight(idx, None) * self.cell_volume()
    }

    /// Largest stable explicit step for the 7-point Laplacian.
    pub fn diffusion_step(&self) -> f64 {
        let h = self.spacing();
        0.5 / h.iter().map(|x| 1.0 / (x * x)).sum::<f64>()
    }

    pub(crate) fn check_margin(&self, margin: f64) -> Result<()> {
        if !(margin >= 0.0 && margin < self.half_width()) {
            return Err(Error::InvalidArgument(format!(
                "margin {margin} must lie in [0, {})",
                self.half_width()
            )));
        }
        Ok(())
    }
}
