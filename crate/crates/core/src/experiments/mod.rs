//! Experiment harness: market prices, single solves and the one- and
//! two-parameter utility sweeps, with CSV and SVG output.
//!
//! Every sweep point `k` is solved independently. Rows are collected in grid
//! order, so the output does not depend on thread scheduling.

mod config;
pub mod csv;
pub mod svg;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    ExperimentConfig, FeeSpec, OracleConfig, OutputConfig, PoolConfig, SolverConfig, Sweep1dConfig, Sweep2dConfig,
    TradeFunctionSpec, UtilityConfig,
};

use crate::error::Result;
use crate::market::{Pool, Trade};
use crate::notrade::{in_no_trade_region, no_trade_t_interval, AlphaInterval};
use crate::optimality::{verify_system, OptimalityReport, VerifyOptions};
use crate::scalar::norm_inf;
use crate::solver::{solve, SolveResult, SolveStatus};
use csv::{num, CsvWriter};

/// Relative slack on the closed interval test, absorbing rounding of grid abscissae.
pub const CLOSED_FORM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceReport {
    pub analytic: Vec<f64>,
    pub forward_difference: Vec<f64>,
    pub max_abs_difference: f64,
}

impl PriceReport {
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["asset".into(), "price".into(), "forward_difference".into()]);
        for (i, (a, f)) in self.analytic.iter().zip(&self.forward_difference).enumerate() {
            w.row(&[(i + 1).to_string(), num(*a), num(*f)]);
        }
        w.finish()
    }
}

pub fn run_prices(cfg: &ExperimentConfig) -> Result<PriceReport> {
    let pool = cfg.pool()?;
    let analytic = pool.prices()?;
    let tf = pool.trade_function();
    let r = pool.reserves();
    let base = tf.eval(r)?;
    let mut fd = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        let h = f64::EPSILON.sqrt() * r[i].max(1.0);
        let mut shifted = r.to_vec();
        shifted[i] += h;
        fd.push((tf.eval(&shifted)? - base) / h);
    }
    let num_grad = fd[pool.numeraire()];
    let forward_difference: Vec<f64> = fd.iter().map(|g| g / num_grad).collect();
    let max_abs_difference = analytic
        .iter()
        .zip(&forward_difference)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(PriceReport { analytic, forward_difference, max_abs_difference })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointOutcome {
    pub t: f64,
    pub s: Option<f64>,
    pub pi: Vec<f64>,
    pub result: Option<SolveResult<f64>>,
    pub report: Option<OptimalityReport<f64>>,
    pub closed_form: AlphaInterval<f64>,
    pub no_trade_closed_form: bool,
    pub no_trade_solver: bool,
    pub error: Option<String>,
}

impl PointOutcome {
    pub fn verify_residual(&self) -> f64 {
        self.report.as_ref().map_or(f64::NAN, |r| r.max_residual)
    }

    fn status(&self) -> &'static str {
        match self.result.as_ref().map(|r| r.status) {
            Some(SolveStatus::Converged) => "converged",
            Some(SolveStatus::MaxIterations) => "max_iterations",
            Some(SolveStatus::Infeasible) => "infeasible",
            None => "error",
        }
    }
}

/// Solves and verifies one utility `pi = p` perturbed by `t` (and `s`).
pub fn solve_point(cfg: &ExperimentConfig, pool: &Pool<f64>, t: f64, s: Option<f64>) -> Result<PointOutcome> {
    let u = cfg.utility_at(pool, t, s)?;
    let (no_trade_closed_form, closed_form) = in_no_trade_region(pool, &u, CLOSED_FORM_SLACK)?;
    let mut out = PointOutcome {
        t,
        s,
        pi: u.prices().to_vec(),
        result: None,
        report: None,
        closed_form,
        no_trade_closed_form,
        no_trade_solver: false,
        error: None,
    };
    match solve(pool, &u, &cfg.solver.options()) {
        Ok(res) => {
            out.no_trade_solver = norm_inf(&res.trade.net()) <= cfg.no_trade_threshold;
            match verify_system(pool, &u, &res.trade, &VerifyOptions::new(cfg.verify_tol)) {
                Ok(rep) => out.report = Some(rep),
                Err(e) => out.error = Some(format!("verification failed: {e}")),
            }
            out.result = Some(res);
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    Ok(out)
}

/// `points` abscissae from `lo` to `hi`, both included.
pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points)
        .map(|k| if k + 1 == points { hi } else { lo + (hi - lo) * k as f64 / last })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub n: usize,
    pub two_d: bool,
    /// Closed-form no-trade interval of `t` alone.
    pub t_interval: (f64, f64),
    pub rows: Vec<PointOutcome>,
    pub trade_function: String,
}

impl SweepResult {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        if self.two_d {
            h.push("s".into());
        }
        for prefix in ["x", "y", "net"] {
            h.extend((1..=self.n).map(|i| format!("{prefix}{i}")));
        }
        h.extend(
            ["objective", "no_trade_solver", "no_trade_closed_form", "verify_residual", "solver_status"]
                .iter()
                .map(|s| s.to_string()),
        );
        h
    }

    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&self.header());
        let nan_trade = Trade { x: vec![f64::NAN; self.n], y: vec![f64::NAN; self.n] };
        for row in &self.rows {
            let mut f = vec![num(row.t)];
            if self.two_d {
                f.push(num(row.s.unwrap_or(f64::NAN)));
            }
            let trade = row.result.as_ref().map_or(&nan_trade, |r| &r.trade);
            f.extend(trade.x.iter().map(|&v| num(v)));
            f.extend(trade.y.iter().map(|&v| num(v)));
            f.extend(trade.net().iter().map(|&v| num(v)));
            f.push(num(row.result.as_ref().map_or(f64::NAN, |r| r.objective)));
            f.push(row.no_trade_solver.to_string());
            f.push(row.no_trade_closed_form.to_string());
            f.push(num(row.verify_residual()));
            f.push(row.status().to_string());
            w.row(&f);
        }
        w.finish()
    }

    pub fn to_svg(&self) -> String {
        if self.two_d {
            self.heat_map()
        } else {
            self.line_chart()
        }
    }

    fn line_chart(&self) -> String {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.t).collect();
        let series: Vec<(String, Vec<f64>)> = (0..self.n)
            .map(|i| {
                let v = self
                    .rows
                    .iter()
                    .map(|r| r.result.as_ref().map_or(f64::NAN, |res| res.trade.x[i] - res.trade.y[i]))
                    .collect();
                (format!("net {}", i + 1), v)
            })
            .collect();
        let band = (self.t_interval.0 <= self.t_interval.1).then_some(self.t_interval);
        svg::line_chart(
            &format!("Optimal net trade vs t ({})", self.trade_function),
            "t",
            "x - y",
            &xs,
            &series,
            band,
        )
    }

    fn heat_map(&self) -> String {
        let mut ts: Vec<f64> = self.rows.iter().map(|r| r.t).collect();
        ts.dedup();
        let ss: Vec<f64> = self.rows.iter().take_while(|r| r.t == ts[0]).filter_map(|r| r.s).collect();
        let max_obj = self
            .rows
            .iter()
            .filter_map(|r| r.result.as_ref().map(|x| x.objective))
            .filter(|v| v.is_finite())
            .fold(0.0_f64, f64::max);
        // Rows are t-major; the map wants s-major storage.
        let mut cells = vec![(svg::Cell::Mismatch, 0.0); ts.len() * ss.len()];
        for (k, row) in self.rows.iter().enumerate() {
            let (i, j) = (k / ss.len(), k % ss.len());
            let cell = match (row.no_trade_solver, row.no_trade_closed_form) {
                (true, true) => svg::Cell::NoTrade,
                (false, false) if row.result.is_some() => svg::Cell::Trade,
                _ => svg::Cell::Mismatch,
            };
            let obj = row.result.as_ref().map_or(0.0, |r| r.objective);
            let shade = if max_obj > 0.0 { (obj / max_obj).sqrt() } else { 0.0 };
            cells[j * ts.len() + i] = (cell, shade);
        }
        svg::heat_map(&format!("No-trade region in (t, s) ({})", self.trade_function), "t", "s", &ts, &ss, &cells)
    }

    /// Rows where the solver and closed-form flags differ.
    pub fn disagreements(&self) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&k| self.rows[k].no_trade_solver != self.rows[k].no_trade_closed_form)
            .collect()
    }
}

fn sweep(cfg: &ExperimentConfig, points: Vec<(f64, Option<f64>)>, two_d: bool) -> Result<SweepResult> {
    let pool = cfg.pool()?;
    let t_interval = no_trade_t_interval(&pool, &pool.prices()?, cfg.utility.t_index)?;
    let rows = points
        .into_par_iter()
        .map(|(t, s)| solve_point(cfg, &pool, t, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        n: pool.dim(),
        two_d,
        t_interval,
        rows,
        trade_function: cfg.pool.trade_function.short_name().to_string(),
    })
}

pub fn run_sweep1d(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let c = &cfg.sweep1d;
    let points = grid(c.t_min, c.t_max, c.points).into_iter().map(|t| (t, None)).collect();
    sweep(cfg, points, false)
}

pub fn run_sweep2d(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let c = &cfg.sweep2d;
    let ss = grid(c.s_min, c.s_max, c.s_points);
    let points = grid(c.t_min, c.t_max, c.t_points)
        .into_iter()
        .flat_map(|t| ss.iter().map(move |&s| (t, Some(s))))
        .collect();
    sweep(cfg, points, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoTradeReport {
    pub t: f64,
    pub s: Option<f64>,
    pub prices: Vec<f64>,
    pub interval: AlphaInterval<f64>,
    pub in_region: bool,
    /// Values of `t` alone (other prices at market) with no trade.
    pub t_interval: (f64, f64),
}

pub fn run_notrade(cfg: &ExperimentConfig, t: f64, s: Option<f64>) -> Result<NoTradeReport> {
    let pool = cfg.pool()?;
    let prices = pool.prices()?;
    let u = cfg.utility_at(&pool, t, s)?;
    let (in_region, interval) = in_no_trade_region(&pool, &u, CLOSED_FORM_SLACK)?;
    let t_interval = no_trade_t_interval(&pool, &prices, cfg.utility.t_index)?;
    Ok(NoTradeReport { t, s, prices, interval, in_region, t_interval })
}

/// Writes `<stem>_<kind>.csv` (and `.svg` when enabled) under `dir`, returning the paths.
pub fn write_sweep(cfg: &ExperimentConfig, result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let kind = if result.two_d { "sweep2d" } else { "sweep1d" };
    let stem = format!("{}_{kind}", cfg.stem());
    let csv_path = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, result.to_csv())?;
    let mut paths = vec![csv_path];
    if cfg.output.svg {
        let svg_path = dir.join(format!("{stem}.svg"));
        std::fs::write(&svg_path, result.to_svg())?;
        paths.push(svg_path);
    }
    Ok(paths)
}
