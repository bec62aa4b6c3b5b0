//! Verification of the single-multiplier optimality system for a candidate
//! trade.
//!
//! With `P = grad phi(R_bar)` and a multiplier `alpha >= 0` the conditions are
//!
//! * `I^a` (`x_i = R_i`):       `dU_i >= alpha P_i`
//! * `I^b` (`0 < x_i < R_i`):   `dU_i  = alpha P_i`
//! * `I^c` (`y_i > 0`):         `dU_i  = alpha gamma_i P_i`
//! * `I^d` (`x_i = y_i = 0`):   `alpha gamma_i Q_i <= dU_i(0) <= alpha Q_i`
//! * level:                     `phi(R + Gamma y - x) = phi(R)`
//!
//! The equality form is sometimes stated for all of `0 < x_i <= R_i`; only the
//! inequality survives on the bound `x_i = R_i`, which is what is checked here.
//! `Q` is `grad phi(R_bar)` by default and `grad phi(R)` in
//! [`GradientReference::Reserves`] mode; the two coincide for the zero trade.
//! Under a pseudoconcave utility and a quasilinear trade function a verified
//! system certifies a global optimum.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::market::{post_trade_reserves, Pool, Trade, Utility};
use crate::notrade::{alpha_interval, AlphaInterval};
use crate::scalar::{norm_inf, Scalar};
use crate::trade_function::normalize_prices;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexPartition {
    /// Fully drained: `x_i = R_i`.
    pub ia: Vec<usize>,
    /// Partially received: `0 < x_i < R_i`.
    pub ib: Vec<usize>,
    /// Tendered: `y_i > 0`.
    pub ic: Vec<usize>,
    /// Untouched.
    pub id: Vec<usize>,
}

impl IndexPartition {
    pub fn is_zero_trade(&self) -> bool {
        self.ia.is_empty() && self.ib.is_empty() && self.ic.is_empty()
    }
}

/// Partitions assets using the relative threshold `tol * R_i`.
pub fn classify_indices<T: Scalar>(pool: &Pool<T>, trade: &Trade<T>, tol: T) -> Result<IndexPartition> {
    check_dim(pool.dim(), trade.dim())?;
    let mut part = IndexPartition { ia: vec![], ib: vec![], ic: vec![], id: vec![] };
    for (i, &r) in pool.reserves().iter().enumerate() {
        let (x, y) = (trade.x[i], trade.y[i]);
        let eps = tol * r;
        if x > eps && y > eps {
            return Err(Error::NotComplementary {
                overlap: x.min(y).to_f64_lossy(),
                tol: eps.to_f64_lossy(),
            });
        }
        if x >= r - eps {
            part.ia.push(i);
        } else if x > eps {
            part.ib.push(i);
        } else if y > eps {
            part.ic.push(i);
        } else {
            part.id.push(i);
        }
    }
    Ok(part)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientReference {
    /// `grad phi` at the post-trade reserves.
    #[default]
    PostTrade,
    /// `grad phi` at the initial reserves.
    Reserves,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions<T> {
    /// Stationarity tolerance on the normalized residuals and the level residual.
    pub tol: T,
    /// Relative threshold used to classify indices.
    pub classification_tol: T,
    /// Gradient used by the `I^d` bounds.
    pub reference: GradientReference,
}

impl<T: Scalar> VerifyOptions<T> {
    pub fn new(tol: T) -> Self {
        Self { tol, classification_tol: T::lit(1e-7), reference: GradientReference::PostTrade }
    }
}

impl<T: Scalar> Default for VerifyOptions<T> {
    fn default() -> Self {
        Self::new(T::lit(1e-5))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    DrainedInequality,
    ReceivedEquality,
    TenderedEquality,
    UntouchedBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResidual<T> {
    pub asset: usize,
    pub condition: Condition,
    /// Violation normalized by `max_i |dU_i|`.
    pub residual: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Violated,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport<T> {
    pub partition: IndexPartition,
    pub alpha: T,
    pub residuals: Vec<ConditionResidual<T>>,
    /// `I^d` residuals evaluated with the other gradient reference.
    pub alternate_reference_residual: T,
    pub level_residual: T,
    pub max_residual: T,
    /// Multiplier interval, when alpha is pinned only by inequalities.
    pub alpha_interval: Option<AlphaInterval<T>>,
    pub verdict: Verdict,
}

fn floor_positive<T: Scalar>(v: &[T], reserves: &[T]) -> Vec<T> {
    let tiny = reserves.iter().copied().fold(T::infinity(), T::min) * T::lit(1e-12);
    v.iter().map(|&r| r.max(tiny)).collect()
}

fn id_residual<T: Scalar>(alpha: T, gamma: T, q: T, g0: T, scale: T) -> T {
    let low = alpha * gamma * q - g0;
    let high = g0 - alpha * q;
    low.max(high).max(T::zero()) / scale
}

pub fn verify_system<T: Scalar>(
    pool: &Pool<T>,
    utility: &impl Utility<T>,
    trade: &Trade<T>,
    opts: &VerifyOptions<T>,
) -> Result<OptimalityReport<T>> {
    check_dim(pool.dim(), utility.dim())?;
    let partition = classify_indices(pool, trade, opts.classification_tol)?;
    let n = pool.dim();
    let tf = pool.trade_function();
    let gamma = pool.gamma();
    let post = floor_positive(&post_trade_reserves(pool, trade)?, pool.reserves());
    let p_bar = tf.gradient(&post)?;
    let p_res = tf.gradient(pool.reserves())?;
    let (q, q_alt) = match opts.reference {
        GradientReference::PostTrade => (&p_bar, &p_res),
        GradientReference::Reserves => (&p_res, &p_bar),
    };
    let g = utility.gradient(&trade.net());
    let g0 = utility.gradient(&vec![T::zero(); n]);
    let scale = norm_inf(&g).max(T::min_positive_value());
    let scale0 = norm_inf(&g0).max(T::min_positive_value());

    let base = pool.level()?;
    let level_residual = (tf.eval(&post)? - base).abs() / base.abs().max(T::min_positive_value());

    let mut alpha_iv = None;
    let (alpha, interval_ok) = if partition.is_zero_trade() {
        // Same test as the closed-form no-trade region, on normalized prices.
        let num = pool.numeraire();
        let prices = normalize_prices(q, num)?;
        let iv = alpha_interval(&prices, &g0, pool.fees())?;
        alpha_iv = Some(iv);
        (iv.witness() / q[num], iv.is_nonempty_within(opts.tol))
    } else if partition.ib.is_empty() && partition.ic.is_empty() {
        let mut lower = T::zero();
        let mut upper = T::infinity();
        for &i in &partition.id {
            lower = lower.max(g0[i] / q[i]);
            upper = upper.min(g0[i] / (gamma[i] * q[i]));
        }
        for &i in &partition.ia {
            upper = upper.min(g[i] / p_bar[i]);
        }
        let iv = AlphaInterval { lower, upper, empty: lower > upper };
        alpha_iv = Some(iv);
        (iv.witness(), iv.is_nonempty_within(opts.tol))
    } else {
        let mut num = T::zero();
        let mut den = T::zero();
        for &i in &partition.ib {
            num = num + g[i] / p_bar[i];
            den = den + T::one();
        }
        for &i in &partition.ic {
            num = num + gamma[i] * g[i] / p_bar[i];
            den = den + gamma[i] * gamma[i];
        }
        let fitted = num / den;
        (fitted.max(T::zero()), fitted >= T::zero())
    };

    let mut residuals = Vec::with_capacity(n);
    for &i in &partition.ia {
        residuals.push(ConditionResidual {
            asset: i,
            condition: Condition::DrainedInequality,
            residual: (alpha * p_bar[i] - g[i]).max(T::zero()) / scale,
        });
    }
    for &i in &partition.ib {
        residuals.push(ConditionResidual {
            asset: i,
            condition: Condition::ReceivedEquality,
            residual: (g[i] - alpha * p_bar[i]).abs() / scale,
        });
    }
    for &i in &partition.ic {
        residuals.push(ConditionResidual {
            asset: i,
            condition: Condition::TenderedEquality,
            residual: (g[i] - alpha * gamma[i] * p_bar[i]).abs() / scale,
        });
    }
    let mut alternate = T::zero();
    for &i in &partition.id {
        residuals.push(ConditionResidual {
            asset: i,
            condition: Condition::UntouchedBounds,
            residual: id_residual(alpha, gamma[i], q[i], g0[i], scale0),
        });
        alternate = alternate.max(id_residual(alpha, gamma[i], q_alt[i], g0[i], scale0));
    }
    residuals.sort_by_key(|r| r.asset);

    let max_residual = residuals
        .iter()
        .map(|r| r.residual)
        .fold(level_residual, T::max);
    let verdict = if partition.is_zero_trade() {
        // Membership is decided by the interval test alone.
        if interval_ok && level_residual <= opts.tol {
            Verdict::Verified
        } else {
            Verdict::Violated
        }
    } else if interval_ok && max_residual <= opts.tol {
        Verdict::Verified
    } else {
        Verdict::Violated
    };

    Ok(OptimalityReport {
        partition,
        alpha,
        residuals,
        alternate_reference_residual: alternate,
        level_residual,
        max_residual,
        alpha_interval: alpha_iv,
        verdict,
    })
}
