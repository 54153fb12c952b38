use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ldg_core::experiment::{
    run_check_geometry, run_corrector, run_solve_harmonic, run_solve_ldg, run_sweep, with_threads, CorrectorReport,
};
use ldg_core::{ExperimentConfig, MaterialParams, SolveResult};
use log::info;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "ldg", version, about = "Landau-de Gennes minimization and harmonic-map limit experiments")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized suites; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Randomized identity suite for the limit manifold.
    CheckGeometry {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Solve for the harmonic-map limit.
    SolveHarmonic,
    /// Solve the LdG problem at every ladder value.
    SolveLdg,
    /// Ladder sweep with diagnostics and rate fits.
    Sweep,
    /// Compare the normal corrector with its closed form or with data.
    Corrector,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let Some(path) = &cli.config else { bail!("--config is required for this subcommand") };
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn print_solve(label: &str, l: Option<f64>, r: &SolveResult) {
    let l = l.map(|l| format!(" l={l:e}")).unwrap_or_default();
    println!(
        "solve={label}{l} iterations={} energy={:.16e} el_residual={:e} stop={} rejected={}",
        r.iterations,
        r.final_energy,
        r.el_residual,
        r.stop.as_str(),
        r.rejected_steps
    );
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::CheckGeometry { trials } => {
            let (seed, s, out) = match &cli.config {
                Some(_) => {
                    let cfg = load(cli)?;
                    (cfg.seed, cfg.leading_params()?.s_plus(), Some(cfg.output_dir))
                }
                None => (cli.seed.unwrap_or(0), MaterialParams::unit(1.0)?.s_plus(), cli.out.clone()),
            };
            let report = run_check_geometry(seed, *trials, s, out.as_deref())?;
            for c in &report.checks {
                println!("check={} worst={:e} tolerance={:e} failures={}", c.name, c.worst, c.tolerance, c.failures);
            }
            println!("trials={} seed={} passed={}", report.trials, report.seed, report.passed());
            Ok(report.passed())
        }
        Command::SolveHarmonic => {
            let cfg = load(cli)?;
            let r = run_solve_harmonic(&cfg)?;
            print_solve("harmonic", None, &r);
            Ok(true)
        }
        Command::SolveLdg => {
            let cfg = load(cli)?;
            let results = run_solve_ldg(&cfg)?;
            for (l, r) in cfg.l_ladder.iter().zip(&results) {
                print_solve("ldg", Some(*l), r);
            }
            Ok(true)
        }
        Command::Sweep => {
            let cfg = load(cli)?;
            let out = run_sweep(&cfg)?;
            print_solve("harmonic", None, &out.harmonic);
            for row in &out.report.rows {
                println!(
                    "l={:e} l2_err={:e} sup_interior_err={:e} sup_y={:e} sup_z={:e} sup_r_interior={:e} a_err_interior={:e}",
                    row.l, row.l2_err, row.sup_interior_err, row.sup_y, row.sup_z, row.sup_r_interior, row.a_err_interior
                );
            }
            for rate in &out.report.rates {
                match &rate.fit {
                    Ok(f) => println!("rate={} slope={:.4} r_squared={:.5}", rate.quantity, f.slope, f.r_squared),
                    Err(e) => println!("rate={} status=degenerate_fit reason=\"{e}\"", rate.quantity),
                }
            }
            Ok(true)
        }
        Command::Corrector => {
            let cfg = load(cli)?;
            match run_corrector(&cfg)? {
                CorrectorReport::Hedgehog { kappa, r_min, max_err, max_a } => {
                    println!("corrector=hedgehog kappa={kappa:.16e} r_min={r_min:e} max_err={max_err:e} max_a={max_a:e}")
                }
                CorrectorReport::Ladder { rows } => {
                    for r in rows {
                        println!(
                            "corrector=ladder l={:e} a_err_interior={:e} b_residual_interior={:e} max_a={:e}",
                            r.l, r.a_err_interior, r.b_residual_interior, r.max_a
                        );
                    }
                }
            }
            Ok(true)
        }
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let passed = match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => {
            info!("event=thread_pool threads={n}");
            with_threads(n, || run(&cli))??
        }
        None => run(&cli)?,
    };
    if !passed {
        std::process::exit(1);
    }
    Ok(())
}
