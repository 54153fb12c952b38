//! Randomized check of every manifold identity at once.

use super::sampling::{random_director, random_normal, random_sym, random_tangent};
use super::{Geometry, HarmonicForm, DEFAULT_GAP_FRACTION};
use crate::tensor::{QTensor, SymMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const CURVE_STEP: f64 = 1e-3;

const CHECKS: [(&str, f64); 15] = [
    ("split_reconstruction", 1e-12),
    ("split_tangency", 1e-10),
    ("split_normality", 1e-10),
    ("split_direct_sum", 1e-10),
    ("trace_identity", 1e-10),
    ("product_identity", 1e-10),
    ("projector_identity", 1e-10),
    ("tangent_product_normal", 1e-10),
    ("normal_product_normal", 1e-10),
    ("mixed_product_tangent", 1e-10),
    ("second_form_symmetry", 1e-12),
    ("second_form_normal", 1e-10),
    ("second_form_curve", 1e-4),
    ("harmonic_forms_agree", 1e-10),
    ("harmonic_rhs_normal", 1e-10),
];

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<CheckSummary>,
}

impl SuiteReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().map(|c| c.failures).sum()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

/// Runs `trials` randomized trials. Base points and tangent vectors use the
/// true s; every formula is evaluated with `s * s_scale`, so a scale other
/// than one must make the suite fail.
pub fn identity_suite(trials: usize, seed: u64, s: f64, s_scale: f64) -> SuiteReport {
    let truth = Geometry::with_s(s);
    let eval = Geometry::with_s(s * s_scale);
    let per_trial: Vec<[f64; 15]> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            run_trial(&truth, &eval, &mut rng)
        })
        .collect();

    let checks = CHECKS
        .iter()
        .enumerate()
        .map(|(i, &(name, tolerance))| {
            let worst = per_trial.iter().fold(0.0f64, |a, r| if r[i].is_nan() { f64::INFINITY } else { a.max(r[i]) });
            let failures = per_trial.iter().filter(|r| !(r[i] <= tolerance)).count();
            CheckSummary { name, worst, tolerance, failures }
        })
        .collect();
    SuiteReport { trials, seed, checks }
}

fn run_trial(truth: &Geometry, eval: &Geometry, rng: &mut ChaCha8Rng) -> [f64; 15] {
    let s = truth.s();
    let base = truth.point(random_director(rng)).expect("nonzero director");
    let q = base.q();
    let x = random_tangent(&base, s, rng);
    let y = random_tangent(&base, s, rng);
    let z = random_normal(&base, rng);
    let a = random_sym(rng, s);
    let mut out = [0.0; 15];

    let sp = eval.split(&a, &base);
    out[0] = (*sp.tangential.as_sym() + sp.normal - a).norm() / a.norm().max(1.0);
    out[1] = eval.tangency_residual(sp.tangential.as_sym(), q);
    out[2] = sp.normal.commutator(q.as_sym()).norm();
    out[3] = eval.normal_part(sp.tangential.as_sym(), q).norm();

    let ids = eval.check_identities(&x, &y, &z, &base);
    for (slot, (_, v)) in out[4..10].iter_mut().zip(ids.named()) {
        *slot = v;
    }

    match (eval.second_fundamental_form(&x, &y, &base), eval.second_fundamental_form(&y, &x, &base)) {
        (Ok(xy), Ok(yx)) => {
            out[10] = (xy - yx).norm();
            out[11] = xy.as_sym().commutator(q.as_sym()).norm();
        }
        _ => {
            out[10] = f64::INFINITY;
            out[11] = f64::INFINITY;
        }
    }
    out[12] = curve_defect(eval, &base, &x);

    let grads = [x, y, random_tangent(&base, s, rng)];
    let forms: Vec<_> = [HarmonicForm::Trace, HarmonicForm::Right, HarmonicForm::Left]
        .iter()
        .map(|&f| eval.harmonic_rhs(&base, &grads, f))
        .collect();
    if let (Ok(f2), Ok(f3), Ok(f4)) = (&forms[0], &forms[1], &forms[2]) {
        let raw3 = eval.harmonic_rhs_matrix(q, &grads.iter().fold(SymMatrix::ZERO, |acc, g| acc + g.square()), HarmonicForm::Right);
        let raw4 = eval.harmonic_rhs_matrix(q, &grads.iter().fold(SymMatrix::ZERO, |acc, g| acc + g.square()), HarmonicForm::Left);
        out[13] = (*f2 - *f3)
            .norm()
            .max((*f2 - *f4).norm())
            .max((*f3 - *f4).norm())
            .max((raw3 - raw4).norm());
        out[14] = f4.as_sym().commutator(q.as_sym()).norm();
    } else {
        out[13] = f64::INFINITY;
        out[14] = f64::INFINITY;
    }
    out
}

/// ‖c''(0) - II(X,X)‖ for the retraction curve c(t) = project(Q + tX), with
/// X normalized to unit length.
fn curve_defect(g: &Geometry, base: &super::ManifoldPoint, x: &QTensor) -> f64 {
    let norm = x.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let x = *x * (1.0 / norm);
    let Ok(ii) = g.second_fundamental_form(&x, &x, base) else {
        return f64::INFINITY;
    };
    let gap = DEFAULT_GAP_FRACTION * g.s();
    let t = CURVE_STEP;
    let c = |tt: f64| g.project(&(*base.q() + x * tt), gap).map(|p| *p.q());
    match (c(t), c(0.0), c(-t)) {
        (Ok(p), Ok(m), Ok(n)) => ((p - m * 2.0 + n) * (1.0 / (t * t)) - ii).norm(),
        _ => f64::INFINITY,
    }
}
