//! Removal of overlapping support `min(x_i, y_i) > 0`.
//!
//! Cancelling an overlap `m` on asset `i` leaves `x - y` unchanged and raises
//! `R_bar_i` by `(1 - gamma_i) m`; the surplus level is then given back on the
//! numeraire, first by tendering less of it and then by receiving more.

use super::problem::Problem;
use crate::market::{post_trade_reserves, Trade};
use crate::scalar::Scalar;

pub(crate) enum Cleanup<T> {
    Unchanged,
    Cleaned(Trade<T>),
    /// The level could not be restored on the numeraire; the raw trade is kept.
    Failed(String),
}

pub(crate) fn remove_overlap<T: Scalar>(p: &Problem<'_, T>, trade: &Trade<T>) -> Cleanup<T> {
    let n = p.n;
    if (0..n).all(|i| trade.x[i].min(trade.y[i]) <= T::zero()) {
        return Cleanup::Unchanged;
    }
    let mut t = trade.clone();
    for i in 0..n {
        let m = t.x[i].min(t.y[i]);
        if m > T::zero() {
            t.x[i] = t.x[i] - m;
            t.y[i] = t.y[i] - m;
        }
    }
    let k = p.pool.numeraire();
    let gamma = p.pool.gamma()[k];
    let (x0, y0) = (t.x[k], t.y[k]);
    // Moving s units of numeraire out of the pool.
    let at = |s: T| -> Trade<T> {
        let mut c = t.clone();
        let released = gamma * y0;
        if s <= released {
            c.y[k] = y0 - s / gamma;
        } else {
            c.y[k] = T::zero();
            c.x[k] = x0 + (s - released);
        }
        c
    };
    let tf = p.pool.trade_function();
    let excess = |s: T| -> Option<T> {
        let post = post_trade_reserves(p.pool, &at(s)).ok()?;
        tf.eval(&post).ok().map(|v| v - p.level)
    };
    let s_max = gamma * y0 + (p.x_cap[k] - x0).max(T::zero());
    let (Some(e0), Some(e1)) = (excess(T::zero()), excess(s_max)) else {
        return Cleanup::Failed("level not evaluable during cleanup".into());
    };
    if e0 <= T::zero() {
        // The raw trade sat below the level; cancelling the overlap only moved it closer.
        return Cleanup::Cleaned(t);
    }
    if e1 > T::zero() {
        return Cleanup::Failed("numeraire correction cannot absorb the surplus level".into());
    }
    let (mut lo, mut hi) = (T::zero(), s_max);
    for _ in 0..200 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        match excess(mid) {
            Some(e) if e > T::zero() => lo = mid,
            Some(_) => hi = mid,
            None => return Cleanup::Failed("level not evaluable during cleanup".into()),
        }
    }
    // The lower end keeps the level at or above phi(R).
    Cleanup::Cleaned(at(lo))
}
