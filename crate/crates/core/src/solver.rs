//! Explicit gradient flows with a monotone step-size control.
//!
//! Energy changes between iterates are evaluated from a polynomial expansion
//! in the update δ rather than as a difference of two totals, so accepted
//! steps are certified non-increasing to rounding of the increments alone.

use crate::bulk::grad_f_bulk;
use crate::error::{Error, Result};
use crate::fields::{energy_harmonic, energy_ldg, TensorField};
use crate::geometry::{Geometry, HarmonicForm, DEFAULT_GAP_FRACTION};
use crate::params::MaterialParams;
use crate::reduce::pairwise_sum;
use crate::tensor::{poly_min, QTensor};
use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Fraction of the stability limit used as the initial step.
    pub dt_safety: f64,
    pub max_iters: usize,
    /// Stop when an accepted step lowers the energy by at most this
    /// fraction of its magnitude.
    pub rel_energy_tol: f64,
    /// Stop when the max-norm of the discrete Euler-Lagrange residual falls
    /// to this value.
    pub residual_tol: f64,
    /// Emit a progress line every this many iterations.
    pub log_every: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { dt_safety: 0.9, max_iters: 200_000, rel_energy_tol: 1e-22, residual_tol: 1e-9, log_every: 1000 }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_safety > 0.0
            && self.dt_safety <= 1.0
            && self.max_iters > 0
            && self.rel_energy_tol > 0.0
            && self.rel_energy_tol < 1.0
            && self.residual_tol > 0.0
            && self.log_every > 0;
        if !ok {
            return Err(Error::Config(format!("invalid solver settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Residual,
    EnergyStagnation,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Residual => "residual",
            StopReason::EnergyStagnation => "energy_stagnation",
            StopReason::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub field: TensorField,
    pub iterations: usize,
    /// Energy of the returned field, recomputed from scratch.
    pub final_energy: f64,
    /// Max-norm of the discrete Euler-Lagrange residual over interior nodes.
    pub el_residual: f64,
    pub converged: bool,
    pub stop: StopReason,
    /// Initial energy followed by one entry per accepted step, each obtained
    /// by adding the certified (non-positive) change to its predecessor.
    pub energy_history: Vec<f64>,
    pub rejected_steps: usize,
}

pub const MIN_DT: f64 = 1e-12;
const REGROW_AFTER: usize = 50;

/// Energy change and a bound on what rounding of the stored iterate can
/// produce on its own.
struct Change {
    delta: f64,
    noise: f64,
}

trait Flow: Sync {
    const NAME: &'static str;
    /// Descent direction (zero at boundary), per-node energy-gradient
    /// magnitudes, and the reported residual.
    fn direction(&self, q: &TensorField) -> (TensorField, Vec<f64>, f64);
    fn advance(&self, q: &TensorField, dir: &TensorField, dt: f64) -> Result<TensorField>;
    fn energy(&self, q: &TensorField) -> f64;
    fn change(&self, old: &TensorField, new: &TensorField, grad: &[f64]) -> Change;
}

/// Minimizes the discrete LdG energy by the explicit flow
/// Q ← Q + dt (Δ_h Q - ∇f_B(Q)/L). Stationary points satisfy
/// L Δ_h Q = ∇f_B(Q). The reported residual is max |L Δ_h Q - ∇f_B(Q)|.
pub fn solve_ldg(init: &TensorField, p: &MaterialParams, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    check_boundary(init, p.s_plus())?;
    let flow = LdgFlow { p: *p };
    let r = (2.0f64 / 3.0).sqrt() * p.s_plus() + 0.1;
    let lipschitz = p.a2() + 2.0 * p.b2() * r + 3.0 * p.c2() * r * r;
    let dt0 = cfg.dt_safety * init.grid().diffusion_step().min(p.l() / lipschitz);
    run_flow(&flow, init.clone(), cfg, dt0)
}

/// Minimizes the Dirichlet energy over manifold-valued fields by the
/// projected flow Q ← project(Q + dt Δ_h Q). The reported residual is
/// max |Δ_h Q - H(Q)| with H the harmonic-map right-hand side
/// -(4/s²)(Q - s/6 I) Σ_α (∇_α Q)².
pub fn solve_harmonic(init: &TensorField, p: &MaterialParams, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let s = p.s_plus();
    check_boundary(init, s)?;
    let tol = 1e-8 * s.max(1.0).powi(2);
    for (i, q) in init.values().iter().enumerate() {
        let res = poly_min(q, s).norm();
        if !(res <= tol) {
            return Err(Error::NotOnManifold { node: i, residual: res });
        }
    }
    let flow = HarmonicFlow { geom: Geometry::new(p), gap: DEFAULT_GAP_FRACTION * s };
    let dt0 = cfg.dt_safety * init.grid().diffusion_step();
    run_flow(&flow, init.clone(), cfg, dt0)
}

fn check_boundary(f: &TensorField, s: f64) -> Result<()> {
    let g = f.grid();
    let tol = 1e-8 * s.max(1.0).powi(2);
    for (i, q) in f.values().iter().enumerate() {
        if g.is_boundary(i) {
            let res = poly_min(q, s).norm();
            if !(res <= tol) {
                return Err(Error::NonManifoldBoundary { node: i, residual: res });
            }
        }
    }
    Ok(())
}

fn run_flow<F: Flow>(flow: &F, mut q: TensorField, cfg: &SolveConfig, dt0: f64) -> Result<SolveResult> {
    let mut dt = dt0;
    let mut energy = flow.energy(&q);
    let mut history = vec![energy];
    let (mut dir, mut grad, mut residual) = flow.direction(&q);
    let mut rejected = 0;
    let mut streak = 0;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    info!(
        "solver={} event=start energy={:.16e} residual={:.6e} dt={:.6e}",
        F::NAME,
        energy,
        residual,
        dt
    );

    'outer: while iterations < cfg.max_iters {
        if residual <= cfg.residual_tol {
            stop = StopReason::Residual;
            break;
        }
        let (next, change) = loop {
            let cand = flow.advance(&q, &dir, dt)?;
            let ch = flow.change(&q, &cand, &grad);
            if ch.delta <= 0.0 {
                break (cand, ch);
            }
            if ch.delta <= ch.noise {
                debug!("solver={} event=stagnation iter={} delta={:.3e} noise={:.3e}", F::NAME, iterations, ch.delta, ch.noise);
                stop = StopReason::EnergyStagnation;
                break 'outer;
            }
            rejected += 1;
            streak = 0;
            dt *= 0.5;
            if dt < MIN_DT {
                return Err(Error::StiffnessFailure { dt, iteration: iterations });
            }
        };
        q = next;
        iterations += 1;
        energy += change.delta;
        history.push(energy);
        (dir, grad, residual) = flow.direction(&q);

        streak += 1;
        if streak >= REGROW_AFTER && dt < dt0 {
            dt = (2.0 * dt).min(dt0);
            streak = 0;
        }
        if iterations % cfg.log_every == 0 {
            info!(
                "solver={} iter={} energy={:.16e} residual={:.6e} dt={:.6e}",
                F::NAME,
                iterations,
                energy,
                residual,
                dt
            );
        }
        if -change.delta <= cfg.rel_energy_tol * energy.abs() {
            stop = StopReason::EnergyStagnation;
            break;
        }
    }
    if residual <= cfg.residual_tol {
        stop = StopReason::Residual;
    }
    let converged = stop != StopReason::MaxIterations;
    let final_energy = flow.energy(&q);
    info!(
        "solver={} event=done iter={} energy={:.16e} residual={:.6e} dt={:.6e} rejected={} stop={:?} converged={}",
        F::NAME,
        iterations,
        final_energy,
        residual,
        dt,
        rejected,
        stop,
        converged
    );
    Ok(SolveResult {
        field: q,
        iterations,
        final_energy,
        el_residual: residual,
        converged,
        stop,
        energy_history: history,
        rejected_steps: rejected,
    })
}

/// Per-node sums of the Dirichlet increment over forward edges:
/// Σ w/h² ⟨δD, 2D + δD⟩ with D the edge difference and δD its change.
fn dirichlet_increment(old: &TensorField, new: &TensorField, i: usize) -> (f64, f64) {
    let g = old.grid();
    let n = g.shape();
    let st = g.strides();
    let h = g.spacing();
    let c = g.coords(i);
    let (o, w) = (old.values(), new.values());
    let di = w[i] - o[i];
    let (mut acc, mut mag) = (0.0, 0.0);
    for a in 0..3 {
        if c[a] + 1 < n[a] {
            let j = i + st[a];
            let d = *o[j].as_sym() - *o[i].as_sym();
            let dd = *(w[j] - o[j]).as_sym() - *di.as_sym();
            let term = g.face_weight(i, Some(a)) / (h[a] * h[a]);
            let inner = (d * 2.0 + dd).dot(&dd);
            acc += term * inner;
            mag += term * (2.0 * d.norm() * dd.norm() + dd.norm_sq());
        }
    }
    let vol = g.cell_volume();
    (acc * vol, mag * vol)
}

struct LdgFlow {
    p: MaterialParams,
}

impl LdgFlow {
    /// f_B(Q + δ) - f_B(Q) expanded in δ.
    fn bulk_increment(&self, q: &QTensor, d: &QTensor) -> (f64, f64) {
        let p = &self.p;
        let t2 = q.tr2();
        let dt2 = 2.0 * q.dot(d) + d.norm_sq();
        let dt3 = 3.0 * q.square().dot(d.as_sym()) + 3.0 * q.as_sym().dot(&d.square()) + d.tr3();
        let dt22 = dt2 * (2.0 * t2 + dt2);
        let terms = [-0.5 * p.a2() * dt2, -p.b2() / 3.0 * dt3, 0.25 * p.c2() * dt22];
        (terms.iter().sum(), terms.iter().map(|t| t.abs()).sum())
    }
}

impl Flow for LdgFlow {
    const NAME: &'static str = "ldg";

    fn direction(&self, q: &TensorField) -> (TensorField, Vec<f64>, f64) {
        let l = self.p.l();
        let vol = q.grid().cell_volume();
        let dir = q.map_interior(|i| q.laplacian_at(i) - grad_f_bulk(&q.get(i), &self.p) * (1.0 / l));
        let grad: Vec<f64> = dir.values().par_iter().map(|r| vol * l * r.norm()).collect();
        let residual = dir.interior_sup(0.0) * l;
        (dir, grad, residual)
    }

    fn advance(&self, q: &TensorField, dir: &TensorField, dt: f64) -> Result<TensorField> {
        Ok(q.map(|i, v| if q.grid().is_boundary(i) { *v } else { *v + dir.get(i) * dt }))
    }

    fn energy(&self, q: &TensorField) -> f64 {
        energy_ldg(q, &self.p).total
    }

    fn change(&self, old: &TensorField, new: &TensorField, grad: &[f64]) -> Change {
        let g = old.grid();
        let half_l = 0.5 * self.p.l();
        let parts: Vec<(f64, f64)> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let (ed, em) = dirichlet_increment(old, new, i);
                let (bd, bm) = self.bulk_increment(&old.get(i), &(new.get(i) - old.get(i)));
                let w = g.quadrature_weight(i);
                let stored = grad[i] * old.get(i).norm().max(new.get(i).norm());
                (half_l * ed + w * bd, half_l * em + w * bm + stored)
            })
            .collect();
        summarize(&parts)
    }
}

struct HarmonicFlow {
    geom: Geometry,
    gap: f64,
}

impl Flow for HarmonicFlow {
    const NAME: &'static str = "harmonic";

    fn direction(&self, q: &TensorField) -> (TensorField, Vec<f64>, f64) {
        let vol = q.grid().cell_volume();
        let lap = q.laplacian_field();
        let grad: Vec<f64> = lap.values().par_iter().map(|r| 2.0 * vol * r.norm()).collect();
        let res = q.map_interior(|i| {
            let rhs = self.geom.harmonic_rhs_from_square(&q.get(i), &q.grad_square_at(i), HarmonicForm::Left);
            *lap.get(i).as_sym() - rhs
        });
        let residual = res.interior_sup(0.0);
        (lap, grad, residual)
    }

    fn advance(&self, q: &TensorField, dir: &TensorField, dt: f64) -> Result<TensorField> {
        let g = q.grid();
        let values: Vec<QTensor> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                if g.is_boundary(i) {
                    Ok(q.get(i))
                } else {
                    self.geom.project(&(q.get(i) + dir.get(i) * dt), self.gap).map(|m| *m.q())
                }
            })
            .collect::<Result<_>>()?;
        TensorField::from_values(g, values)
    }

    fn energy(&self, q: &TensorField) -> f64 {
        energy_harmonic(q)
    }

    fn change(&self, old: &TensorField, new: &TensorField, grad: &[f64]) -> Change {
        let parts: Vec<(f64, f64)> = (0..old.grid().len())
            .into_par_iter()
            .map(|i| {
                let (d, m) = dirichlet_increment(old, new, i);
                (d, m + grad[i] * old.get(i).norm().max(new.get(i).norm()))
            })
            .collect();
        summarize(&parts)
    }
}

fn summarize(parts: &[(f64, f64)]) -> Change {
    let deltas: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let mags: Vec<f64> = parts.iter().map(|p| p.1).collect();
    Change { delta: pairwise_sum(&deltas), noise: 64.0 * f64::EPSILON * pairwise_sum(&mags) }
}
