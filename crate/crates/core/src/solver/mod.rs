//! Numerical solution of the optimal-trade problem
//!
//! ```text
//! maximize   pi . (x - y)
//! subject to phi(R + Gamma y - x) = phi(R),  R + Gamma y - x >= 0,
//!            0 <= x <= R,  y >= 0
//! ```
//!
//! Each start runs an augmented Lagrangian loop on the level constraint with a
//! projected-gradient inner solver over the box `0 <= x <= R - barrier`,
//! `0 <= y <= y_cap`. The box keeps `R_bar >= barrier` so gradients stay
//! defined. Results then go through overlap cleanup and an active-set Newton
//! polish. The best feasible start wins; the zero trade is always a candidate,
//! so the returned objective is never negative.

mod augmented;
mod cleanup;
mod polish;
mod problem;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::market::{complementarity_violation, is_feasible, utility, LinearUtility, Pool, Trade, Utility};
use crate::notrade::in_no_trade_region;
use crate::scalar::Scalar;
use cleanup::Cleanup;
use problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
    pub initial_penalty: T,
    pub penalty_growth: T,
    /// Relative level residual accepted as feasible.
    pub constraint_tol: T,
    /// Projected Lagrangian gradient (scaled units) accepted as stationary.
    pub stationarity_tol: T,
    /// Start 1 is the zero trade; the rest are random in the box.
    pub multistart_count: usize,
    pub complementarity_cleanup: bool,
    pub polish: bool,
    pub seed: u64,
    /// `y_i <= y_cap_multiple * sum(R)`.
    pub y_cap_multiple: T,
    /// `x_i <= R_i - barrier_shift * min(R)`.
    pub barrier_shift: T,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        Self {
            max_outer_iterations: 40,
            max_inner_iterations: 3000,
            initial_penalty: T::lit(10.0),
            penalty_growth: T::lit(10.0),
            constraint_tol: T::lit(1e-10).max(T::lit(1e3) * eps),
            stationarity_tol: T::lit(1e-8).max(T::lit(1e3) * eps),
            multistart_count: 8,
            complementarity_cleanup: true,
            polish: true,
            seed: 0,
            y_cap_multiple: T::lit(10.0),
            barrier_shift: T::lit(1e-9).max(T::lit(10.0) * eps),
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("constraint_tol", self.constraint_tol),
            ("stationarity_tol", self.stationarity_tol),
            ("initial_penalty", self.initial_penalty),
            ("y_cap_multiple", self.y_cap_multiple),
            ("barrier_shift", self.barrier_shift),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.penalty_growth > T::one()) {
            return Err(Error::InvalidParameter("penalty_growth must exceed 1".into()));
        }
        if self.multistart_count == 0 {
            return Err(Error::InvalidParameter("multistart_count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult<T> {
    pub trade: Trade<T>,
    pub objective: T,
    /// `|phi(R_bar) - phi(R)| / max(1, |phi(R)|)`.
    pub constraint_residual: T,
    pub status: SolveStatus,
    pub iterations: usize,
    pub starts_used: usize,
    /// Multiplier estimate `alpha` of the level constraint.
    pub alpha: T,
    /// Some `y_i` sits at its cap: the optimum of the uncapped problem may lie beyond it.
    pub cap_active: bool,
    pub warnings: Vec<String>,
}

struct Candidate<T> {
    trade: Trade<T>,
    objective: T,
    residual: T,
    converged: bool,
    iterations: usize,
    alpha: T,
    warnings: Vec<String>,
}

fn run_start<T: Scalar>(
    pool: &Pool<T>,
    u: &LinearUtility<T>,
    problem: &Problem<'_, T>,
    start: Vec<T>,
    opts: &SolverOptions<T>,
) -> Result<Candidate<T>> {
    let outcome = augmented::solve_from(problem, start, opts);
    let mut warnings = Vec::new();
    let mut trade = problem.to_trade(&outcome.w);
    let mut converged = outcome.converged;
    let mut alpha = -outcome.multiplier * problem.objective_scale / problem.level;
    if opts.complementarity_cleanup {
        let before = utility(u, &trade);
        match cleanup::remove_overlap(problem, &trade) {
            Cleanup::Unchanged => {}
            Cleanup::Cleaned(t) => {
                let tol = T::lit(1e-12) * T::one().max(problem.objective_scale);
                if utility(u, &t) >= before - tol {
                    trade = t;
                } else {
                    warnings.push("complementarity cleanup lowered the objective; raw trade kept".into());
                }
            }
            Cleanup::Failed(reason) => warnings.push(format!("complementarity cleanup skipped: {reason}")),
        }
    }
    if opts.polish {
        if let Some(p) = polish::polish(problem, &trade, T::lit(1e-7)) {
            let ok = is_feasible(pool, &p.trade, opts.constraint_tol)?.is_feasible();
            let same_objective_or_better = utility(u, &p.trade)
                >= utility(u, &trade) - T::lit(1e-6) * T::one().max(problem.objective_scale);
            if ok && same_objective_or_better {
                trade = p.trade;
                alpha = p.alpha;
                converged = converged || p.residual <= opts.stationarity_tol;
            }
        }
    }
    let report = is_feasible(pool, &trade, opts.constraint_tol)?;
    Ok(Candidate {
        objective: utility(u, &trade),
        residual: report.level_residual,
        converged: converged && report.is_feasible(),
        trade,
        iterations: outcome.iterations,
        alpha,
        warnings,
    })
}

fn random_start<T: Scalar>(problem: &Problem<'_, T>, rng: &mut ChaCha8Rng) -> Vec<T> {
    let n = problem.n;
    let mut w = vec![T::zero(); 2 * n];
    for i in 0..n {
        w[i] = T::lit(rng.random::<f64>()) * problem.upper[i];
        w[n + i] = T::lit(rng.random::<f64>()) * problem.upper[n + i];
    }
    problem.project(&mut w);
    w
}

pub fn solve<T: Scalar>(pool: &Pool<T>, u: &LinearUtility<T>, opts: &SolverOptions<T>) -> Result<SolveResult<T>> {
    opts.validate()?;
    check_dim(pool.dim(), u.dim())?;
    let n = pool.dim();
    let problem = Problem::new(pool, u.prices(), opts.y_cap_multiple, opts.barrier_shift)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let zero_is_kkt = in_no_trade_region(pool, u, opts.stationarity_tol)?.0;
    let mut best = Candidate {
        trade: Trade::zero(n),
        objective: T::zero(),
        residual: T::zero(),
        converged: zero_is_kkt,
        iterations: 0,
        alpha: T::zero(),
        warnings: Vec::new(),
    };
    let tie = T::lit(1e-12) * T::one().max(problem.objective_scale);
    let mut starts = 0;
    for s in 0..opts.multistart_count {
        let start = if s == 0 { vec![T::zero(); 2 * n] } else { random_start(&problem, &mut rng) };
        let cand = run_start(pool, u, &problem, start, opts)?;
        starts += 1;
        if !(cand.residual <= opts.constraint_tol) {
            continue;
        }
        let better = cand.objective > best.objective + tie
            || ((cand.objective - best.objective).abs() <= tie
                && (cand.trade.l1_norm() < best.trade.l1_norm()
                    || (cand.trade.l1_norm() == best.trade.l1_norm() && cand.converged && !best.converged)));
        if better {
            best = cand;
        }
    }

    let status = if !(best.residual <= opts.constraint_tol) {
        SolveStatus::Infeasible
    } else if best.converged {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIterations
    };
    let cap_active = (0..n).any(|i| best.trade.y[i] >= problem.y_cap[i] * (T::one() - T::lit(1e-9)));
    let mut warnings = best.warnings;
    if cap_active {
        warnings.push("tender cap active at the returned trade".into());
    }
    if opts.complementarity_cleanup && complementarity_violation(&best.trade) > T::zero() {
        warnings.push("returned trade has overlapping support".into());
    }
    if status == SolveStatus::Infeasible {
        return Err(Error::Internal("no feasible start, not even the zero trade".into()));
    }
    Ok(SolveResult {
        objective: best.objective,
        constraint_residual: best.residual,
        trade: best.trade,
        status,
        iterations: best.iterations,
        starts_used: starts,
        alpha: best.alpha,
        cap_active,
        warnings,
    })
}
