//! Brute-force reference solver for pools with at most three assets.
//!
//! Net trades `z = x - y` of the first `n - 1` assets are enumerated on a
//! grid anchored at zero; each `z_i` is split complementarily into
//! `x_i = max(z_i, 0)`, `y_i = max(-z_i, 0)`. The last asset's net amount is
//! then the unique root of the level constraint, found by bisection, since
//! `phi` is strictly increasing in that coordinate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::market::{is_feasible, utility, LinearUtility, Pool, Trade, Utility};
use crate::scalar::{norm1, Scalar};
use crate::solver::{SolveResult, SolveStatus};

pub const MAX_ORACLE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    pub resolution: T,
    /// Per-asset `[lo, hi]` bounds on the net trade, `lo <= 0 <= hi < R_i`.
    pub bounds: Vec<(T, T)>,
}

impl<T: Scalar> GridSpec<T> {
    /// Box `[-y_cap_multiple * sum(R), R_i - barrier_shift * min(R)]` on every asset.
    pub fn for_pool(pool: &Pool<T>, resolution: T, y_cap_multiple: T, barrier_shift: T) -> Self {
        let r = pool.reserves();
        let total: T = r.iter().copied().sum();
        let min_r = r.iter().copied().fold(T::infinity(), T::min);
        let bounds = r
            .iter()
            .map(|&ri| (-y_cap_multiple * total, ri - barrier_shift * min_r))
            .collect();
        Self { resolution, bounds }
    }

    pub fn validate(&self, pool: &Pool<T>) -> Result<()> {
        check_dim(pool.dim(), self.bounds.len())?;
        if !(self.resolution > T::zero()) || !self.resolution.is_finite() {
            return Err(Error::InvalidParameter(format!("grid resolution must be positive, got {}", self.resolution)));
        }
        for (i, (&(lo, hi), &ri)) in self.bounds.iter().zip(pool.reserves()).enumerate() {
            if !(lo <= T::zero() && T::zero() <= hi && hi < ri && lo.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "grid bounds for asset {i} must satisfy lo <= 0 <= hi < R_i, got [{lo}, {hi}] with R_i = {ri}"
                )));
            }
        }
        Ok(())
    }

    /// Grid points on one axis: multiples of the resolution inside the bounds, plus both endpoints.
    fn axis(&self, i: usize) -> Vec<T> {
        let (lo, hi) = self.bounds[i];
        let h = self.resolution;
        let first = (lo / h).ceil().to_i64().unwrap_or(0);
        let last = (hi / h).floor().to_i64().unwrap_or(0);
        let mut pts = Vec::with_capacity((last - first + 3).max(1) as usize);
        if lo < T::lit(first as f64) * h {
            pts.push(lo);
        }
        for k in first..=last {
            pts.push(T::lit(k as f64) * h);
        }
        if hi > T::lit(last as f64) * h {
            pts.push(hi);
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult<T> {
    pub result: SolveResult<T>,
    /// Grid points where the level constraint was resolved.
    pub evaluated: usize,
    /// Grid points with no bracketing root inside the box.
    pub skipped: usize,
}

fn post_last<T: Scalar>(r: T, gamma: T, z: T) -> T {
    if z >= T::zero() {
        r - z
    } else {
        r - gamma * z
    }
}

/// Net amount of the last asset restoring the level, or `None` without a bracket.
fn solve_last<T: Scalar>(pool: &Pool<T>, post: &mut [T], lo: T, hi: T, level: T) -> Option<T> {
    let n = post.len();
    let r = pool.reserves()[n - 1];
    let gamma = pool.gamma()[n - 1];
    let tf = pool.trade_function();
    let excess = |z: T, post: &mut [T]| -> Option<T> {
        post[n - 1] = post_last(r, gamma, z);
        tf.eval(post).ok().map(|v| v - level)
    };
    // Excess decreases in z: tendering (z < 0) raises phi, receiving lowers it.
    let e_lo = excess(lo, post)?;
    let e_hi = excess(hi, post)?;
    if e_lo < T::zero() || e_hi > T::zero() {
        return None;
    }
    if e_hi == T::zero() {
        return Some(hi);
    }
    if lo < T::zero() && T::zero() < hi && excess(T::zero(), post)? == T::zero() {
        return Some(T::zero());
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = a + (b - a) / T::lit(2.0);
        if m <= a || m >= b {
            break;
        }
        if excess(m, post)? >= T::zero() {
            a = m;
        } else {
            b = m;
        }
    }
    Some(a)
}

struct Best<T> {
    objective: T,
    size: T,
    index: usize,
    z: Vec<T>,
}

fn better<T: Scalar>(a: Best<T>, b: Best<T>) -> Best<T> {
    let key = |c: &Best<T>| (c.objective, -c.size);
    let (ka, kb) = (key(&a), key(&b));
    if kb.0 > ka.0 || (kb.0 == ka.0 && (kb.1 > ka.1 || (kb.1 == ka.1 && b.index < a.index))) {
        b
    } else {
        a
    }
}

pub fn grid_solve<T: Scalar>(pool: &Pool<T>, u: &LinearUtility<T>, spec: &GridSpec<T>) -> Result<OracleResult<T>> {
    let n = pool.dim();
    check_dim(n, u.dim())?;
    if n > MAX_ORACLE_DIM {
        return Err(Error::InvalidParameter(format!("grid oracle supports at most {MAX_ORACLE_DIM} assets, got {n}")));
    }
    spec.validate(pool)?;
    let level = pool.level()?;
    let r = pool.reserves();
    let gamma = pool.gamma();
    let axes: Vec<Vec<T>> = (0..n - 1).map(|i| spec.axis(i)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let (lo_last, hi_last) = spec.bounds[n - 1];

    let point = |k: usize| -> Vec<T> {
        let mut rem = k;
        let mut z = vec![T::zero(); n];
        for (i, axis) in axes.iter().enumerate() {
            z[i] = axis[rem % axis.len()];
            rem /= axis.len();
        }
        z
    };

    let outcomes: Vec<Option<Best<T>>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let mut z = point(k);
            let mut post: Vec<T> = (0..n).map(|i| post_last(r[i], gamma[i], z[i])).collect();
            let last = solve_last(pool, &mut post, lo_last, hi_last, level)?;
            z[n - 1] = last;
            let objective = utility(u, &Trade::from_net(&z));
            Some(Best { objective, size: norm1(&z), index: k, z })
        })
        .collect();

    let evaluated = outcomes.iter().filter(|o| o.is_some()).count();
    let skipped = total - evaluated;
    let best = outcomes
        .into_iter()
        .flatten()
        .reduce(better)
        .ok_or_else(|| Error::RootFind("no grid point admits a level-preserving last coordinate".into()))?;

    let trade = Trade::from_net(&best.z);
    let report = is_feasible(pool, &trade, T::lit(1e-9).max(T::lit(64.0) * T::epsilon()))?;
    let post = crate::market::post_trade_reserves(pool, &trade)?;
    let grad = pool.trade_function().gradient(&post)?;
    let zn = best.z[n - 1];
    let pin = u.gradient(&best.z)[n - 1];
    let alpha = if zn < T::zero() { pin / (gamma[n - 1] * grad[n - 1]) } else { pin / grad[n - 1] };
    let status = if report.is_feasible() { SolveStatus::Converged } else { SolveStatus::Infeasible };
    Ok(OracleResult {
        result: SolveResult {
            objective: best.objective,
            constraint_residual: report.level_residual,
            trade,
            status,
            iterations: evaluated,
            starts_used: 1,
            alpha,
            cap_active: best.z.iter().zip(&spec.bounds).any(|(&z, &(lo, _))| z <= lo),
            warnings: Vec::new(),
        },
        evaluated,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::FeeSchedule;
    use crate::trade_function::TradeFunction;

    fn pool2(r: [f64; 2], gamma: f64) -> Pool<f64> {
        Pool::new(r.to_vec(), FeeSchedule::uniform(gamma, 2).unwrap(), TradeFunction::geometric(2).unwrap()).unwrap()
    }

    #[test]
    fn market_prices_give_zero_trade() {
        let p = pool2([10.0, 4.0], 0.97);
        let u = LinearUtility::new(p.prices().unwrap()).unwrap();
        let spec = GridSpec::for_pool(&p, 1e-3, 1.0, 1e-9);
        let out = grid_solve(&p, &u, &spec).unwrap();
        assert_eq!(out.result.objective, 0.0);
        assert!(out.result.trade.l1_norm() == 0.0);
    }

    #[test]
    fn constant_product_pair_matches_closed_form() {
        let p = pool2([10.0, 10.0], 0.99);
        let u = LinearUtility::new(vec![2.0, 1.0]).unwrap();
        let spec = GridSpec::for_pool(&p, 1e-3, 1.0, 1e-9);
        let out = grid_solve(&p, &u, &spec).unwrap();
        let y = (200.0_f64 / 0.99).sqrt() - 10.0 / 0.99;
        let best = 2.0 * (10.0 - 100.0 / (10.0 + 0.99 * y)) - y;
        assert!(out.result.objective > 0.0);
        assert!(out.result.trade.x[0] > 0.0);
        assert!(best - out.result.objective <= 3.0 * 1e-3, "{} vs {best}", out.result.objective);
        assert!(out.result.objective <= best + 1e-9);
        assert!(out.result.constraint_residual <= 1e-9);
    }

    #[test]
    fn vanishing_fee_keeps_aligned_prices_flat() {
        let p = pool2([3.0, 5.0], 1.0 - 1e-9);
        let u = LinearUtility::new(p.prices().unwrap()).unwrap();
        let out = grid_solve(&p, &u, &GridSpec::for_pool(&p, 1e-2, 1.0, 1e-9)).unwrap();
        assert!(out.result.objective <= 1e-8);
    }

    #[test]
    fn axis_contains_zero_and_endpoints() {
        let spec = GridSpec { resolution: 0.3, bounds: vec![(-1.0, 0.5)] };
        let a = spec.axis(0);
        assert_eq!(a.first(), Some(&-1.0));
        assert_eq!(a.last(), Some(&0.5));
        assert!(a.contains(&0.0));
    }

    #[test]
    fn three_assets_and_limits() {
        let p = Pool::new(vec![2.0, 3.0, 4.0], FeeSchedule::uniform(0.9, 3).unwrap(), TradeFunction::arithmetic(3).unwrap())
            .unwrap();
        let u = LinearUtility::new(vec![2.0, 1.0, 1.0]).unwrap();
        let out = grid_solve(&p, &u, &GridSpec::for_pool(&p, 0.05, 1.0, 1e-9)).unwrap();
        assert!(out.result.objective > 0.0);
        assert!(out.evaluated > 0);

        let p4 = Pool::new(vec![1.0; 4], FeeSchedule::uniform(0.9, 4).unwrap(), TradeFunction::arithmetic(4).unwrap()).unwrap();
        let u4 = LinearUtility::new(vec![1.0; 4]).unwrap();
        assert!(grid_solve(&p4, &u4, &GridSpec::for_pool(&p4, 0.1, 1.0, 1e-9)).is_err());
        let bad = GridSpec { resolution: 0.0, bounds: vec![(-1.0, 1.0); 3] };
        assert!(grid_solve(&p, &u, &bad).is_err());
    }
}
