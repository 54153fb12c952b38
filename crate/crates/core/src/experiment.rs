//! Experiment configuration and the workflows behind the command-line tool.
//!
//! Output files are plain CSV with a header row and every float in
//! `{:.16e}` form, so runs are reproducible byte for byte.

use crate::asymptotics::{
    compute_xyz, corrector_a, corrector_a_error, corrector_b_residual, corrector_fields, fit_rate, projection_residual,
    remainder_identity_residual, RateFit,
};
use crate::error::{Error, Result};
use crate::fields::io::{write_scalar_csv, write_tensor_binary, write_tensor_csv};
use crate::fields::{boundary_hedgehog, boundary_near_constant, energy_ldg, norms, GridSpec, TensorField, TiltPattern};
use crate::geometry::suite::{identity_suite, SuiteReport};
use crate::params::MaterialParams;
use crate::solver::{solve_harmonic, solve_ldg, SolveConfig, SolveResult};
use crate::tensor::SymMatrix;
use log::{info, warn};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Bulk coefficients a², b², c². The elastic constant comes from the ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BulkParams {
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
}

impl BulkParams {
    pub fn with_l(&self, l: f64) -> Result<MaterialParams> {
        MaterialParams::new(self.a2, self.b2, self.c2, l)
    }
}

impl Default for BulkParams {
    fn default() -> Self {
        BulkParams { a2: 1.0, b2: 1.0, c2: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Hedgehog,
    NearConstant {
        eps: f64,
        #[serde(default)]
        pattern: TiltPattern,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Distance from the boundary below which nodes are excluded from
    /// interior measurements.
    pub margin: f64,
    pub output_dir: PathBuf,
    /// Elastic constants, largest first.
    pub l_ladder: Vec<f64>,
    #[serde(default)]
    pub params: BulkParams,
    pub grid: GridSpec,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolveConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.solver.validate()?;
        if self.l_ladder.is_empty() {
            return Err(Error::Config("l_ladder is empty".into()));
        }
        if self.l_ladder.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Config("l_ladder entries must be positive".into()));
        }
        if self.l_ladder.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("l_ladder must be strictly descending".into()));
        }
        for &l in &self.l_ladder {
            self.params.with_l(l)?;
        }
        let h = self.grid.spacing().into_iter().fold(0.0, f64::max);
        if !(self.margin >= 2.0 * h) {
            return Err(Error::Config(format!("margin {} is below two grid spacings ({})", self.margin, 2.0 * h)));
        }
        if !(self.margin < self.grid.half_width()) {
            return Err(Error::Config(format!("margin {} leaves no interior nodes", self.margin)));
        }
        if let BoundarySpec::NearConstant { eps, .. } = self.boundary {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::Config(format!("eps must be non-negative, got {eps}")));
            }
        }
        Ok(())
    }

    /// Parameters at the first ladder entry.
    pub fn leading_params(&self) -> Result<MaterialParams> {
        self.params.with_l(self.l_ladder[0])
    }

    /// Boundary data with the interior filled by a manifold-valued guess.
    pub fn initial_field(&self) -> Result<TensorField> {
        let p = self.leading_params()?;
        match self.boundary {
            BoundarySpec::Hedgehog => boundary_hedgehog(&self.grid, &p, true),
            BoundarySpec::NearConstant { eps, pattern } => boundary_near_constant(&self.grid, &p, eps, pattern),
        }
    }
}

/// Runs `f` inside a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(pool.install(f))
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_table(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    writeln!(text, "{header}").expect("string write");
    for r in rows {
        writeln!(text, "{}", r.join(",")).expect("string write");
    }
    fs::write(path, text)?;
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn run_check_geometry(seed: u64, trials: usize, s: f64, out: Option<&Path>) -> Result<SuiteReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let report = identity_suite(trials, seed, s, 1.0);
    if let Some(dir) = out {
        prepare_dir(dir)?;
        let rows: Vec<Vec<String>> = report
            .checks
            .iter()
            .map(|c| vec![c.name.to_string(), fmt(c.worst), fmt(c.tolerance), c.failures.to_string()])
            .collect();
        write_table(&dir.join("geometry.csv"), "check,worst,tolerance,failures", &rows)?;
    }
    Ok(report)
}

pub const SOLVE_HEADER: &str = "l,iterations,energy,el_residual,converged,stop,rejected_steps";

fn solve_row(l: Option<f64>, r: &SolveResult) -> Vec<String> {
    vec![
        l.map(fmt).unwrap_or_else(|| "inf".into()),
        r.iterations.to_string(),
        fmt(r.final_energy),
        fmt(r.el_residual),
        r.converged.to_string(),
        r.stop.as_str().into(),
        r.rejected_steps.to_string(),
    ]
}

fn write_history(path: &Path, r: &SolveResult) -> Result<()> {
    let rows: Vec<Vec<String>> = r.energy_history.iter().enumerate().map(|(k, e)| vec![k.to_string(), fmt(*e)]).collect();
    write_table(path, "step,energy", &rows)
}

/// Harmonic-map solve from the configured boundary data.
pub fn run_solve_harmonic(cfg: &ExperimentConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let p = cfg.leading_params()?;
    let r = solve_harmonic(&cfg.initial_field()?, &p, &cfg.solver)?;
    prepare_dir(&cfg.output_dir)?;
    write_tensor_csv(&cfg.output_dir.join("q_star.csv"), &r.field)?;
    write_tensor_binary(&cfg.output_dir.join("q_star.bin"), &r.field)?;
    write_history(&cfg.output_dir.join("history_harmonic.csv"), &r)?;
    write_table(&cfg.output_dir.join("solve_harmonic.csv"), SOLVE_HEADER, &[solve_row(None, &r)])?;
    Ok(r)
}

/// LdG solves over the ladder, each started from the configured initial
/// field rather than from a harmonic solution.
pub fn run_solve_ldg(cfg: &ExperimentConfig) -> Result<Vec<SolveResult>> {
    cfg.validate()?;
    let init = cfg.initial_field()?;
    prepare_dir(&cfg.output_dir)?;
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for (k, &l) in cfg.l_ladder.iter().enumerate() {
        let p = cfg.params.with_l(l)?;
        let r = solve_ldg(&init, &p, &cfg.solver).map_err(|e| Error::AtElasticConstant { l, source: Box::new(e) })?;
        write_tensor_csv(&cfg.output_dir.join(format!("q_l_{k}.csv")), &r.field)?;
        write_history(&cfg.output_dir.join(format!("history_ldg_{k}.csv")), &r)?;
        rows.push(solve_row(Some(l), &r));
        out.push(r);
    }
    write_table(&cfg.output_dir.join("solve_ldg.csv"), SOLVE_HEADER, &rows)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub l: f64,
    pub iterations: usize,
    pub energy: f64,
    pub el_residual: f64,
    pub l2_err: f64,
    pub h1_err: f64,
    pub sup_interior_err: f64,
    pub sup_y: f64,
    pub sup_z: f64,
    pub sup_r_interior: f64,
    pub a_err_interior: f64,
    pub b_residual_interior: f64,
    /// Max over two-layer interior nodes of the rewritten-equation residual.
    pub remainder_identity: f64,
    pub projection_residual: f64,
    pub sup_q_norm: f64,
}

pub const SWEEP_HEADER: &str = "l,iterations,energy,el_residual,l2_err,h1_err,sup_interior_err,sup_y,sup_z,\
sup_r_interior,a_err_interior,b_residual_interior,remainder_identity,projection_residual,sup_q_norm";

impl SweepRow {
    fn cells(&self) -> Vec<String> {
        let mut v = vec![fmt(self.l), self.iterations.to_string()];
        v.extend(
            [
                self.energy,
                self.el_residual,
                self.l2_err,
                self.h1_err,
                self.sup_interior_err,
                self.sup_y,
                self.sup_z,
                self.sup_r_interior,
                self.a_err_interior,
                self.b_residual_interior,
                self.remainder_identity,
                self.projection_residual,
                self.sup_q_norm,
            ]
            .map(fmt),
        );
        v
    }
}

/// A fitted rate, or the reason no fit was possible.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateEntry {
    pub quantity: &'static str,
    pub fit: std::result::Result<RateFit, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub rates: Vec<RateEntry>,
}

impl SweepReport {
    pub fn rate(&self, quantity: &str) -> Option<&std::result::Result<RateFit, String>> {
        self.rates.iter().find(|r| r.quantity == quantity).map(|r| &r.fit)
    }
}

/// Everything a sweep produced, including the solver runs.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub report: SweepReport,
    pub harmonic: SolveResult,
    pub ldg: Vec<SolveResult>,
}

pub const FITTED_QUANTITIES: [&str; 6] =
    ["l2_err", "sup_interior_err", "sup_y", "sup_z", "sup_r_interior", "a_err_interior"];

fn fitted_value(row: &SweepRow, quantity: &str) -> f64 {
    match quantity {
        "l2_err" => row.l2_err,
        "sup_interior_err" => row.sup_interior_err,
        "sup_y" => row.sup_y,
        "sup_z" => row.sup_z,
        "sup_r_interior" => row.sup_r_interior,
        "a_err_interior" => row.a_err_interior,
        _ => unreachable!("unknown quantity {quantity}"),
    }
}

fn sup_at_depth(f: &crate::fields::ScalarField, depth: usize) -> f64 {
    let g = f.grid();
    (0..g.len()).filter(|&i| g.is_interior_at_depth(i, depth)).map(|i| f.get(i)).fold(0.0, f64::max)
}

fn sweep_row(q_star: &TensorField, r: &SolveResult, p: &MaterialParams, margin: f64) -> Result<SweepRow> {
    let q = &r.field;
    let n = norms(q, q_star, margin)?;
    let d = compute_xyz(q, p);
    let cf = corrector_fields(q_star, q, p)?;
    Ok(SweepRow {
        l: p.l(),
        iterations: r.iterations,
        energy: energy_ldg(q, p).total,
        el_residual: r.el_residual,
        l2_err: n.l2,
        h1_err: n.h1_semi,
        sup_interior_err: n.sup_interior,
        sup_y: d.y.interior_sup(margin),
        sup_z: d.z.interior_sup(margin),
        sup_r_interior: d.r.interior_sup(margin),
        a_err_interior: corrector_a_error(q_star, q, &cf.a, p, margin)?,
        b_residual_interior: corrector_b_residual(q_star, &cf.a, &cf.b, p)?.interior_sup(margin),
        remainder_identity: sup_at_depth(&remainder_identity_residual(q, p), 2),
        projection_residual: projection_residual(q, p, p.s_plus())?.interior_sup(margin),
        sup_q_norm: q.values().iter().map(|v| v.norm()).fold(0.0, f64::max),
    })
}

fn fit_all(rows: &[SweepRow]) -> Vec<RateEntry> {
    if rows.len() < 2 {
        warn!("event=no_rate_fit reason=single_ladder_point");
        return Vec::new();
    }
    let ls: Vec<f64> = rows.iter().map(|r| r.l).collect();
    FITTED_QUANTITIES
        .iter()
        .map(|&quantity| {
            let errs: Vec<f64> = rows.iter().map(|r| fitted_value(r, quantity)).collect();
            let fit = fit_rate(&ls, &errs).map_err(|e| e.to_string());
            if let Err(e) = &fit {
                warn!("event=rate_fit_failed quantity={quantity} reason=\"{e}\"");
            }
            RateEntry { quantity, fit }
        })
        .collect()
}

pub const RATES_HEADER: &str = "quantity,slope,intercept,r_squared,points,status";

fn rate_cells(e: &RateEntry) -> Vec<String> {
    match &e.fit {
        Ok(f) => vec![
            e.quantity.into(),
            fmt(f.slope),
            fmt(f.intercept),
            fmt(f.r_squared),
            f.ls.len().to_string(),
            "ok".into(),
        ],
        Err(_) => vec![e.quantity.into(), "nan".into(), "nan".into(), "nan".into(), "0".into(), "degenerate_fit".into()],
    }
}

/// Harmonic limit once, then the ladder with warm starts (largest L first),
/// diagnostics per L and log-log rate fits.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let p0 = cfg.leading_params()?;
    let harmonic = solve_harmonic(&cfg.initial_field()?, &p0, &cfg.solver)?;
    info!(
        "event=harmonic_done iterations={} residual={:e} stop={:?}",
        harmonic.iterations, harmonic.el_residual, harmonic.stop
    );
    let q_star = &harmonic.field;
    let mut warm = q_star.clone();
    let mut rows = Vec::with_capacity(cfg.l_ladder.len());
    let mut ldg = Vec::with_capacity(cfg.l_ladder.len());
    for &l in &cfg.l_ladder {
        let at_l = |e: Error| Error::AtElasticConstant { l, source: Box::new(e) };
        let p = cfg.params.with_l(l)?;
        let r = solve_ldg(&warm, &p, &cfg.solver).map_err(at_l)?;
        let row = sweep_row(q_star, &r, &p, cfg.margin).map_err(at_l)?;
        info!(
            "event=ladder_point l={l:e} iterations={} l2_err={:e} sup_interior_err={:e}",
            row.iterations, row.l2_err, row.sup_interior_err
        );
        rows.push(row);
        warm = r.field.clone();
        ldg.push(r);
    }
    let rates = fit_all(&rows);

    prepare_dir(&cfg.output_dir)?;
    let table: Vec<Vec<String>> = rows.iter().map(SweepRow::cells).collect();
    write_table(&cfg.output_dir.join("sweep.csv"), SWEEP_HEADER, &table)?;
    let rate_rows: Vec<Vec<String>> = rates.iter().map(rate_cells).collect();
    write_table(&cfg.output_dir.join("rates.csv"), RATES_HEADER, &rate_rows)?;
    write_tensor_csv(&cfg.output_dir.join("q_star.csv"), q_star)?;
    let last = ldg.last().expect("nonempty ladder");
    write_tensor_csv(&cfg.output_dir.join("q_l_min.csv"), &last.field)?;
    let p_min = cfg.params.with_l(*cfg.l_ladder.last().expect("nonempty ladder"))?;
    write_scalar_csv(&cfg.output_dir.join("y_l_min.csv"), &compute_xyz(&last.field, &p_min).y)?;

    Ok(SweepOutcome { report: SweepReport { rows, rates }, harmonic, ldg })
}

/// Coefficient κ with A = (κ/r²)(x̂ ⊗ x̂ - I/3) for the hedgehog, obtained by
/// evaluating the corrector formula on the analytic hedgehog derivatives
/// |∇Q|² = 4s²/r² and Σ_α (∂_α Q)² = (s²/r²)(I + x̂ ⊗ x̂).
pub fn hedgehog_corrector_coefficient(p: &MaterialParams) -> f64 {
    let s = p.s_plus();
    let (b2, c2, k) = (p.b2(), p.c2(), p.trace_weight());
    let along = (c2 * 2.0 * s / 3.0 + b2 / 3.0) * (s / 2.0);
    let across = (-c2 * s / 3.0 + b2 / 3.0) * (-s / 2.0);
    let bracket_along = k * 4.0 * s * s * along - 2.0 * s * s;
    let bracket_across = k * 4.0 * s * s * across - s * s;
    -2.0 / (b2 * s * s) * (bracket_along - bracket_across)
}

/// Hedgehog corrector comparison: max deviation of `corrector_a` from
/// (κ/r²)(x̂ ⊗ x̂ - I/3) over interior nodes with r ≥ `r_min`.
pub fn hedgehog_corrector_error(grid: &GridSpec, p: &MaterialParams, kappa: f64, r_min: f64) -> Result<f64> {
    let q = boundary_hedgehog(grid, p, true)?;
    let a = corrector_a(&q, p)?;
    let c = grid.center();
    let mut worst: f64 = 0.0;
    for i in grid.interior_indices() {
        let x = grid.position(i);
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        if r2.sqrt() < r_min {
            continue;
        }
        let exact = (SymMatrix::outer(d) * (1.0 / r2) - SymMatrix::scaled_identity(1.0 / 3.0)) * (kappa / r2);
        worst = worst.max((*a.get(i).as_sym() - exact).norm());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CorrectorReport {
    /// Closed-form comparison on the hedgehog.
    Hedgehog { kappa: f64, r_min: f64, max_err: f64, max_a: f64 },
    /// Empirical comparison along the ladder.
    Ladder { rows: Vec<CorrectorRow> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectorRow {
    pub l: f64,
    pub a_err_interior: f64,
    pub b_residual_interior: f64,
    pub max_a: f64,
}

/// Hedgehog boundary: the corrector of the exact hedgehog against its closed
/// form on nodes with r ≥ a quarter of the box width. Near-constant
/// boundary: the normal part of (Q_L - Q_*)/L against A and the B residual
/// along the ladder.
pub fn run_corrector(cfg: &ExperimentConfig) -> Result<CorrectorReport> {
    cfg.validate()?;
    prepare_dir(&cfg.output_dir)?;
    let p0 = cfg.leading_params()?;
    match cfg.boundary {
        BoundarySpec::Hedgehog => {
            let q = boundary_hedgehog(&cfg.grid, &p0, true)?;
            let a = corrector_a(&q, &p0)?;
            write_tensor_csv(&cfg.output_dir.join("a.csv"), &a)?;
            let kappa = hedgehog_corrector_coefficient(&p0);
            let r_min = 0.5 * cfg.grid.half_width();
            let max_err = hedgehog_corrector_error(&cfg.grid, &p0, kappa, r_min)?;
            let max_a = a.interior_sup(0.0);
            let row = vec![fmt(kappa), fmt(r_min), fmt(max_err), fmt(max_a)];
            write_table(&cfg.output_dir.join("corrector.csv"), "kappa,r_min,max_err,max_a", &[row])?;
            Ok(CorrectorReport::Hedgehog { kappa, r_min, max_err, max_a })
        }
        BoundarySpec::NearConstant { .. } => {
            let harmonic = solve_harmonic(&cfg.initial_field()?, &p0, &cfg.solver)?;
            let q_star = &harmonic.field;
            let mut warm = q_star.clone();
            let mut rows = Vec::new();
            for &l in &cfg.l_ladder {
                let at_l = |e: Error| Error::AtElasticConstant { l, source: Box::new(e) };
                let p = cfg.params.with_l(l)?;
                let r = solve_ldg(&warm, &p, &cfg.solver).map_err(at_l)?;
                let cf = corrector_fields(q_star, &r.field, &p).map_err(at_l)?;
                rows.push(CorrectorRow {
                    l,
                    a_err_interior: corrector_a_error(q_star, &r.field, &cf.a, &p, cfg.margin)?,
                    b_residual_interior: corrector_b_residual(q_star, &cf.a, &cf.b, &p)?.interior_sup(cfg.margin),
                    max_a: cf.a.interior_sup(0.0),
                });
                warm = r.field;
            }
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![fmt(r.l), fmt(r.a_err_interior), fmt(r.b_residual_interior), fmt(r.max_a)])
                .collect();
            write_table(&cfg.output_dir.join("corrector.csv"), "l,a_err_interior,b_residual_interior,max_a", &table)?;
            Ok(CorrectorReport::Ladder { rows })
        }
    }
}
