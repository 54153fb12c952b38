//! Quartic bulk energy density, its gradient, and the scalar invariant family
//! used to compare bulk quantities with the squared distance to the manifold.

use crate::error::{Error, Result};
use crate::geometry::{distance_to_manifold, sampling};
use crate::params::MaterialParams;
use crate::tensor::{QTensor, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// f_B(Q) = -(a²/2) tr Q² - (b²/3) tr Q³ + (c²/4) (tr Q²)².
pub fn f_bulk(q: &QTensor, p: &MaterialParams) -> f64 {
    let t2 = q.tr2();
    let t3 = q.tr3();
    -0.5 * p.a2() * t2 - p.b2() / 3.0 * t3 + 0.25 * p.c2() * t2 * t2
}

/// Minimum of f_B, attained on the limit manifold where tr Q² = 2s²/3 and
/// tr Q³ = 2s³/9.
pub fn f_bulk_min(p: &MaterialParams) -> f64 {
    let s = p.s_plus();
    let s2 = s * s;
    -p.a2() * s2 / 3.0 - 2.0 * p.b2() * s2 * s / 27.0 + p.c2() * s2 * s2 / 9.0
}

pub fn f_bulk_shifted(q: &QTensor, p: &MaterialParams) -> f64 {
    f_bulk(q, p) - f_bulk_min(p)
}

/// Gradient of f_B in the traceless subspace:
/// -a² Q - b² (Q² - tr(Q²)/3 I) + c² tr(Q²) Q.
pub fn grad_f_bulk(q: &QTensor, p: &MaterialParams) -> QTensor {
    let t2 = q.tr2();
    let sq = q.square() - SymMatrix::scaled_identity(t2 / 3.0);
    QTensor::from_sym(*q.as_sym() * (p.c2() * t2 - p.a2()) - sq * p.b2())
}

/// Coefficients of
/// h(Q) = α (tr Q²)³ + β s tr Q² tr Q³ + γ s² (tr Q²)² + μ s³ tr Q³ + ν s⁴ tr Q² + δ s⁶.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BulkCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
    pub nu: f64,
    pub delta: f64,
}

/// Values of the two equality constraints and the strict inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstraintResiduals {
    pub value_at_manifold: f64,
    pub slope_at_manifold: f64,
    pub definiteness: f64,
}

pub const EQUALITY_TOL: f64 = 1e-10;
pub const DEFINITENESS_MIN: f64 = 1e-10;

impl BulkCoeffs {
    /// The expansion of s² ‖poly_min(Q)‖².
    pub fn poly_min_square() -> Self {
        BulkCoeffs { alpha: 0.0, beta: 0.0, gamma: 0.5, mu: -2.0 / 3.0, nu: -1.0 / 3.0, delta: 4.0 / 27.0 }
    }

    /// The expansion of the shifted bulk density.
    pub fn shifted_bulk(p: &MaterialParams) -> Self {
        let s = p.s_plus();
        BulkCoeffs {
            alpha: 0.0,
            beta: 0.0,
            gamma: p.c2() / (4.0 * s * s),
            mu: -p.b2() / (3.0 * s.powi(3)),
            nu: -p.a2() / (2.0 * s.powi(4)),
            delta: -f_bulk_min(p) / s.powi(6),
        }
    }

    pub fn zero() -> Self {
        BulkCoeffs { alpha: 0.0, beta: 0.0, gamma: 0.0, mu: 0.0, nu: 0.0, delta: 0.0 }
    }

    pub fn eval(&self, q: &QTensor, s: f64) -> f64 {
        let t2 = q.tr2();
        let t3 = q.tr3();
        self.alpha * t2.powi(3)
            + self.beta * s * t2 * t3
            + self.gamma * s * s * t2 * t2
            + self.mu * s.powi(3) * t3
            + self.nu * s.powi(4) * t2
            + self.delta * s.powi(6)
    }

    pub fn constraints(&self) -> ConstraintResiduals {
        let BulkCoeffs { alpha: a, beta: b, gamma: g, mu: m, nu: n, delta: d } = *self;
        ConstraintResiduals {
            value_at_manifold: 8.0 / 27.0 * a + 4.0 / 27.0 * b + 4.0 / 9.0 * g + 2.0 / 9.0 * m + 2.0 / 3.0 * n + d,
            slope_at_manifold: 8.0 / 3.0 * a + 10.0 / 9.0 * b + 8.0 / 3.0 * g + m + 2.0 * n,
            definiteness: (16.0 * a + 4.0 * b + 8.0 * g).powi(2) - (16.0 * a + 6.0 * b + 8.0 * g + 3.0 * m).powi(2),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DistCompReport {
    pub constraints: ConstraintResiduals,
    pub samples: usize,
    pub radius: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Radius of the sampled neighbourhood as a fraction of s.
pub const DISTCOMP_RADIUS: f64 = 0.1;

/// Checks the constraints and samples h(Q)/dist(Q)² for dist < 0.1 s.
pub fn distcomp_check(c: &BulkCoeffs, p: &MaterialParams, samples: usize, seed: u64) -> Result<DistCompReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let r = c.constraints();
    if r.value_at_manifold.abs() > EQUALITY_TOL {
        return Err(Error::ConstraintViolated { which: "value_at_manifold", value: r.value_at_manifold });
    }
    if r.slope_at_manifold.abs() > EQUALITY_TOL {
        return Err(Error::ConstraintViolated { which: "slope_at_manifold", value: r.slope_at_manifold });
    }
    if !(r.definiteness > DEFINITENESS_MIN) {
        return Err(Error::ConstraintViolated { which: "definiteness", value: r.definiteness });
    }

    let s = p.s_plus();
    let radius = DISTCOMP_RADIUS * s;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut used = 0;
    while used < samples {
        let n = sampling::random_director(&mut rng);
        let base = QTensor::uniaxial(n, s);
        let dir = sampling::random_qtensor(&mut rng, 1.0);
        let len = dir.norm();
        if len < 1e-3 {
            continue;
        }
        let q = base + dir * (rng.gen_range(0.01..1.0) * radius / len);
        let d = distance_to_manifold(&q, s);
        if !(d > 0.0 && d < radius) {
            continue;
        }
        let ratio = c.eval(&q, s) / (d * d);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        used += 1;
    }
    Ok(DistCompReport { constraints: r, samples: used, radius, min_ratio: lo, max_ratio: hi })
}
