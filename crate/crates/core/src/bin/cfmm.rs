use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use cfmm::experiments::{self, ExperimentConfig, TradeFunctionSpec};
use cfmm::market::{LinearUtility, Trade};
use cfmm::optimality::{verify_system, VerifyOptions};
use cfmm::oracle::{grid_solve, GridSpec};
use cfmm::solver::solve;
use cfmm::Error;

#[derive(Parser)]
#[command(name = "cfmm", version, about = "Optimal trades and no-trade regions for constant function market makers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Multiplier applied to the perturbed price `pi[t_index]`.
    #[arg(long)]
    t: Option<f64>,
    /// Multiplier applied to `pi[s_index]`.
    #[arg(long)]
    s: Option<f64>,
    /// Trade function override: am, gm, qm, exp_shift, linear_exp or log.
    #[arg(long)]
    tf: Option<String>,
    /// Output directory (sweeps) or file (other commands).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Market prices from the analytic gradient, with a finite-difference check.
    Prices(Common),
    /// Solve the optimal trade problem at one utility.
    Solve(Common),
    /// Sweep `t` over the configured range.
    Sweep1d(Common),
    /// Sweep `(t, s)` over the configured rectangle.
    Sweep2d(Common),
    /// Closed-form no-trade test.
    Notrade(Common),
    /// Check the optimality conditions of a trade (the solver's, unless `--trade` is given).
    Verify {
        #[command(flatten)]
        common: Common,
        /// JSON file `{"x": [...], "y": [...]}`.
        #[arg(long, value_name = "PATH")]
        trade: Option<PathBuf>,
    },
    /// Brute-force grid optimum for pools with at most three assets.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<f64>,
    },
}

#[derive(Deserialize)]
struct TradeFile {
    x: Vec<f64>,
    y: Vec<f64>,
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(tf) = &common.tf {
        cfg.pool.trade_function = TradeFunctionSpec::from_short(tf)?;
        cfg.output.prefix.clear();
    }
    if let Some(t) = common.t {
        cfg.utility.t = t;
    }
    if let Some(s) = common.s {
        cfg.utility.s = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn point(cfg: &ExperimentConfig, common: &Common) -> (f64, Option<f64>) {
    (cfg.utility.t, common.s.map(|_| cfg.utility.s))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Prices(c) => {
            let cfg = load(&c)?;
            let rep = experiments::run_prices(&cfg)?;
            emit(&rep.to_csv(), c.out.as_deref())?;
            eprintln!("max |analytic - forward difference| = {:.3e}", rep.max_abs_difference);
        }
        Command::Solve(c) => {
            let cfg = load(&c)?;
            let pool = cfg.pool()?;
            let (t, s) = point(&cfg, &c);
            let outcome = experiments::solve_point(&cfg, &pool, t, s)?;
            emit(&json(&outcome)?, c.out.as_deref())?;
        }
        Command::Sweep1d(c) => sweep(&c, false)?,
        Command::Sweep2d(c) => sweep(&c, true)?,
        Command::Notrade(c) => {
            let cfg = load(&c)?;
            let (t, s) = point(&cfg, &c);
            let rep = experiments::run_notrade(&cfg, t, s)?;
            let iv = rep.interval;
            let text = format!(
                "alpha interval: [{}, {}]\nno trade: {}\nt interval: [{}, {}]\n",
                experiments::csv::num(iv.lower),
                experiments::csv::num(iv.upper),
                rep.in_region,
                experiments::csv::num(rep.t_interval.0),
                experiments::csv::num(rep.t_interval.1)
            );
            emit(&text, c.out.as_deref())?;
        }
        Command::Verify { common: c, trade } => {
            let cfg = load(&c)?;
            let pool = cfg.pool()?;
            let (t, s) = point(&cfg, &c);
            let u: LinearUtility<f64> = cfg.utility_at(&pool, t, s)?;
            let trade = match trade {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::Config(format!("cannot read trade {}: {e}", path.display())))?;
                    let f: TradeFile = serde_json::from_str(&text)?;
                    Trade::new(f.x, f.y)?
                }
                None => solve(&pool, &u, &cfg.solver.options())?.trade,
            };
            let rep = verify_system(&pool, &u, &trade, &VerifyOptions::new(cfg.verify_tol))?;
            emit(&json(&rep)?, c.out.as_deref())?;
        }
        Command::Oracle { common: c, resolution } => {
            let cfg = load(&c)?;
            let pool = cfg.pool()?;
            let (t, s) = point(&cfg, &c);
            let u = cfg.utility_at(&pool, t, s)?;
            let h = resolution.unwrap_or(cfg.oracle.resolution);
            let spec = GridSpec::for_pool(&pool, h, cfg.oracle.y_cap_multiple, cfg.solver.barrier_shift);
            let out = grid_solve(&pool, &u, &spec)?;
            emit(&json(&out)?, c.out.as_deref())?;
        }
    }
    Ok(())
}

fn sweep(c: &Common, two_d: bool) -> Result<(), Error> {
    let cfg = load(c)?;
    let result = if two_d { experiments::run_sweep2d(&cfg)? } else { experiments::run_sweep1d(&cfg)? };
    let dir = c.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    for path in experiments::write_sweep(&cfg, &result, &dir)? {
        eprintln!("wrote {}", path.display());
    }
    let inside = result.rows.iter().filter(|r| r.no_trade_closed_form).count();
    eprintln!(
        "{} points, {} in the closed-form no-trade region, {} flag disagreements",
        result.rows.len(),
        inside,
        result.disagreements().len()
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Json(_)
        | Error::InvalidParameter(_)
        | Error::Domain(_)
        | Error::Dimension { .. }
        | Error::Numeraire { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
