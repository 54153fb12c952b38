use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Bulk coefficients a², b², c² and the elastic constant L.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    a2: f64,
    b2: f64,
    c2: f64,
    l: f64,
}

impl MaterialParams {
    pub fn new(a2: f64, b2: f64, c2: f64, l: f64) -> Result<Self> {
        for (name, v) in [("a2", a2), ("b2", b2), ("c2", c2), ("L", l)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(MaterialParams { a2, b2, c2, l })
    }

    /// a² = b² = c² = 1 at the given L.
    pub fn unit(l: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, l)
    }

    pub fn with_l(&self, l: f64) -> Result<Self> {
        Self::new(self.a2, self.b2, self.c2, l)
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Scalar order parameter of the bulk minimizers.
    pub fn s_plus(&self) -> f64 {
        let (a2, b2, c2) = (self.a2, self.b2, self.c2);
        (b2 + (b2 * b2 + 24.0 * a2 * c2).sqrt()) / (4.0 * c2)
    }

    /// 6 / (6a² + b² s), the weight of |∇Q|² in the trace diagnostic.
    pub fn trace_weight(&self) -> f64 {
        6.0 / (6.0 * self.a2 + self.b2 * self.s_plus())
    }
}
