//! Closed-form no-trade test for linear utilities.
//!
//! The zero trade is optimal when some `alpha >= 0` satisfies
//! `alpha * gamma_i * p_i <= pi_i <= alpha * p_i` for every asset, i.e. when
//! `max_i pi_i / p_i <= min_i pi_i / (gamma_i p_i)`.

use crate::error::{check_dim, Error, Result};
use crate::market::{FeeSchedule, Pool, Utility};
use crate::scalar::Scalar;

/// Feasible multipliers `[lower, upper]`. `upper` is `+inf` only when no asset
/// bounds it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AlphaInterval<T> {
    pub lower: T,
    pub upper: T,
    pub empty: bool,
}

impl<T: Scalar> AlphaInterval<T> {
    fn from_bounds(lower: T, upper: T) -> Self {
        Self { lower, upper, empty: lower > upper }
    }

    /// Closed-interval membership with relative slack `tol` on `lower <= upper`.
    pub fn is_nonempty_within(&self, tol: T) -> bool {
        if !self.empty {
            return true;
        }
        if self.upper.is_infinite() {
            return true;
        }
        self.lower - self.upper <= tol * self.lower.abs().max(self.upper.abs())
    }

    /// A representative multiplier: the lower endpoint when bounded, else zero.
    pub fn witness(&self) -> T {
        if self.lower.is_finite() {
            self.lower.max(T::zero())
        } else {
            T::zero()
        }
    }
}

pub fn alpha_interval<T: Scalar>(p: &[T], pi: &[T], fees: &FeeSchedule<T>) -> Result<AlphaInterval<T>> {
    check_dim(p.len(), pi.len())?;
    check_dim(p.len(), fees.len())?;
    if let Some(v) = p.iter().find(|v| !(**v > T::zero())) {
        return Err(Error::Domain(format!("prices must be positive, got {v}")));
    }
    let mut lower = T::zero();
    let mut upper = T::infinity();
    for ((&pi_i, &p_i), &g) in pi.iter().zip(p).zip(fees.as_slice()) {
        lower = lower.max(pi_i / p_i);
        let bound = pi_i / (g * p_i);
        if bound < upper {
            upper = bound;
        }
    }
    Ok(AlphaInterval::from_bounds(lower, upper))
}

/// Is the zero trade optimal for `utility` at the pool's current prices?
pub fn in_no_trade_region<T: Scalar>(
    pool: &Pool<T>,
    utility: &impl Utility<T>,
    tol: T,
) -> Result<(bool, AlphaInterval<T>)> {
    check_dim(pool.dim(), utility.dim())?;
    let p = pool.prices()?;
    let pi = utility.gradient(&vec![T::zero(); pool.dim()]);
    let interval = alpha_interval(&p, &pi, pool.fees())?;
    Ok((interval.is_nonempty_within(tol), interval))
}

/// Range of `t` for which `pi(t) = (.., t * base_i, ..)` stays in the no-trade
/// region, with `base` the pool's market prices when `base_pi = p`.
///
/// Receiving asset `i` is blocked by the fees on the other assets and tendering
/// it by `gamma_i`, giving `[gamma_i L / r_i, U / r_i]` where `r_j = base_j / p_j`,
/// `L = max_{j != i} r_j` and `U = min_{j != i} r_j / gamma_j`. For `base_pi = p`
/// and uniform fees this is `[gamma, 1/gamma]`. Returns `lo > hi` when empty.
pub fn no_trade_t_interval<T: Scalar>(
    pool: &Pool<T>,
    base_pi: &[T],
    perturbed_index: usize,
) -> Result<(T, T)> {
    check_dim(pool.dim(), base_pi.len())?;
    if perturbed_index >= pool.dim() {
        return Err(Error::InvalidParameter(format!("index {perturbed_index} out of range")));
    }
    let p = pool.prices()?;
    let gamma = pool.gamma();
    let ratio: Vec<T> = base_pi.iter().zip(&p).map(|(&b, &q)| b / q).collect();
    let r_i = ratio[perturbed_index];
    if !(r_i > T::zero()) {
        return Err(Error::InvalidParameter("perturbed price must be positive".into()));
    }
    let mut lower = T::zero();
    let mut upper = T::infinity();
    for j in (0..pool.dim()).filter(|&j| j != perturbed_index) {
        lower = lower.max(ratio[j]);
        upper = upper.min(ratio[j] / gamma[j]);
    }
    if lower > upper {
        return Ok((T::one(), T::zero()));
    }
    Ok((gamma[perturbed_index] * lower / r_i, upper / r_i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::LinearUtility;
    use crate::trade_function::TradeFunction;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const R: [f64; 6] = [1.0, 3.0, 2.0, 5.0, 7.0, 6.0];

    fn pool_with(tf: TradeFunction<f64>, fees: FeeSchedule<f64>) -> Pool<f64> {
        Pool::new(R.to_vec(), fees, tf).unwrap()
    }

    fn qm_pool() -> Pool<f64> {
        pool_with(TradeFunction::power_log(2.0, 6).unwrap(), FeeSchedule::uniform(0.9, 6).unwrap())
    }

    fn perturbed(p: &[f64], t: f64) -> Vec<f64> {
        let mut pi = p.to_vec();
        pi[0] *= t;
        pi
    }

    #[test]
    fn aligned_prices_interval() {
        let p = qm_pool().prices().unwrap();
        let fees = FeeSchedule::uniform(0.9, 6).unwrap();
        let iv = alpha_interval(&p, &p, &fees).unwrap();
        assert!(!iv.empty);
        assert_abs_diff_eq!(iv.lower, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(iv.upper, 1.0 / 0.9, epsilon = 1e-14);
        // alpha = 1 satisfies every inequality directly.
        for (pi, q) in p.iter().zip(&p) {
            assert!(0.9 * q <= *pi && *pi <= *q);
        }
    }

    #[test]
    fn perturbed_intervals() {
        let p = qm_pool().prices().unwrap();
        let fees = FeeSchedule::uniform(0.9, 6).unwrap();
        let iv = alpha_interval(&p, &perturbed(&p, 1.2), &fees).unwrap();
        assert!(iv.empty);
        assert_abs_diff_eq!(iv.lower, 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.upper, 1.0 / 0.9, epsilon = 1e-12);
        let iv = alpha_interval(&p, &perturbed(&p, 0.95), &fees).unwrap();
        assert!(!iv.empty);
        assert_abs_diff_eq!(iv.lower, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iv.upper, 0.95 / 0.9, epsilon = 1e-12);
        assert!(alpha_interval(&[0.0; 6], &p, &fees).is_err());
    }

    #[test]
    fn region_membership() {
        let pool = qm_pool();
        let p = pool.prices().unwrap();
        let at = |t: f64| {
            let u = LinearUtility::new(perturbed(&p, t)).unwrap();
            in_no_trade_region(&pool, &u, 1e-9).unwrap().0
        };
        assert!(at(1.0));
        assert!(!at(2.0));
        assert!(at(1.0 / 0.9));
        assert!(at(0.9));
        assert!(!at(0.89));
        assert!(!at(1.12));
    }

    #[test]
    fn t_interval_examples() {
        let pool = qm_pool();
        let p = pool.prices().unwrap();
        let (lo, hi) = no_trade_t_interval(&pool, &p, 0).unwrap();
        assert_abs_diff_eq!(lo, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.0 / 0.9, epsilon = 1e-12);

        let gm = pool_with(TradeFunction::geometric(6).unwrap(), FeeSchedule::uniform(0.5, 6).unwrap());
        let (lo, hi) = no_trade_t_interval(&gm, &gm.prices().unwrap(), 0).unwrap();
        assert_abs_diff_eq!(lo, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 2.0, epsilon = 1e-12);

        // Mixed fees: the upper end is set by the other assets' fees.
        let mut gamma = vec![0.9; 6];
        gamma[0] = 0.5;
        let mixed = pool_with(TradeFunction::geometric(6).unwrap(), FeeSchedule::new(gamma).unwrap());
        let (lo, hi) = no_trade_t_interval(&mixed, &mixed.prices().unwrap(), 0).unwrap();
        assert_abs_diff_eq!(lo, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.0 / 0.9, epsilon = 1e-12);

        let tiny = pool_with(TradeFunction::arithmetic(6).unwrap(), FeeSchedule::uniform(1.0 - 1e-12, 6).unwrap());
        let (lo, hi) = no_trade_t_interval(&tiny, &[1.0; 6], 0).unwrap();
        assert!((hi - lo) < 1e-11 && lo <= 1.0 && hi >= 1.0);
    }

    #[test]
    fn t_interval_is_trade_function_independent() {
        let fees = FeeSchedule::uniform(0.9, 6).unwrap();
        let mut seen = Vec::new();
        for tf in [
            TradeFunction::arithmetic(6).unwrap(),
            TradeFunction::geometric(6).unwrap(),
            TradeFunction::power_log(2.0, 6).unwrap(),
        ] {
            let pool = pool_with(tf, fees.clone());
            seen.push(no_trade_t_interval(&pool, &pool.prices().unwrap(), 0).unwrap());
        }
        for s in &seen[1..] {
            assert_abs_diff_eq!(s.0, seen[0].0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.1, seen[0].1, epsilon = 1e-12);
        }
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (2usize..7).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.05f64..20.0, n),
                proptest::collection::vec(0.0f64..5.0, n),
                proptest::collection::vec(0.5f64..0.99, n),
            )
        })
    }

    proptest! {
        #[test]
        fn scale_invariance((p, pi, gamma) in instance(), c in 0.01f64..100.0) {
            prop_assume!(pi.iter().any(|v| *v > 0.0));
            let fees = FeeSchedule::new(gamma).unwrap();
            let base = alpha_interval(&p, &pi, &fees).unwrap();
            let cp: Vec<f64> = p.iter().map(|v| c * v).collect();
            let scaled = alpha_interval(&cp, &pi, &fees).unwrap();
            prop_assert!((scaled.lower - base.lower / c).abs() <= 1e-9 * (1.0 + base.lower / c));
            prop_assert!((scaled.upper - base.upper / c).abs() <= 1e-9 * (1.0 + base.upper / c));
            prop_assert_eq!(scaled.is_nonempty_within(1e-9), base.is_nonempty_within(1e-9));
            let cpi: Vec<f64> = pi.iter().map(|v| c * v).collect();
            let scaled = alpha_interval(&p, &cpi, &fees).unwrap();
            prop_assert!((scaled.lower - base.lower * c).abs() <= 1e-9 * (1.0 + base.lower * c));
            prop_assert_eq!(scaled.is_nonempty_within(1e-9), base.is_nonempty_within(1e-9));
        }

        #[test]
        fn more_fee_never_shrinks_region((p, pi, gamma) in instance(), k in 0usize..6, shrink in 0.3f64..1.0) {
            prop_assume!(pi.iter().any(|v| *v > 0.0));
            let k = k % p.len();
            let before = alpha_interval(&p, &pi, &FeeSchedule::new(gamma.clone()).unwrap()).unwrap();
            let mut g2 = gamma;
            g2[k] *= shrink;
            let after = alpha_interval(&p, &pi, &FeeSchedule::new(g2).unwrap()).unwrap();
            prop_assert!(after.upper >= before.upper);
            prop_assert_eq!(after.lower, before.lower);
        }
    }
}
