//! Principal branch of the Lambert W function.
//!
//! `W0(u)` solves `w * exp(w) = u` with `w >= -1` for `u >= -1/e`. It is used by
//! the closed forms of the power-log quasi-arithmetic means (see
//! [`crate::trade_function`]).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_ITERATIONS: usize = 50;

/// Inputs this far below the branch point are treated as rounding noise and clamped.
fn branch_slack<T: Scalar>() -> T {
    T::lit(1e-12).max(T::lit(8.0) * T::epsilon())
}

/// The branch point `-1/e`.
pub fn branch_point<T: Scalar>() -> T {
    -T::E().recip()
}

fn initial_guess<T: Scalar>(u: T) -> T {
    let one = T::one();
    if u < T::lit(-0.3) {
        // Series in p = sqrt(2(e u + 1)) about the branch point.
        let p = (T::lit(2.0) * (T::E() * u + one)).max(T::zero()).sqrt();
        -one + p - p * p / T::lit(3.0) + T::lit(11.0 / 72.0) * p * p * p
    } else if u < T::lit(3.0) {
        let l = u.ln_1p();
        l * (one - (one + l).ln() / (T::lit(2.0) + l))
    } else {
        let l1 = u.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

/// Principal branch `W0(u)` to within `|w e^w - u| <= tol * |u|`.
///
/// For very large `u` the bound is relaxed to what the floating point type can
/// represent, `8 * eps * (1 + |w|)` relative.
pub fn lambert_w0<T: Scalar>(u: T, tol: T) -> Result<T> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("lambert_w0 of non-finite argument {u}")));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let bp = branch_point::<T>();
    if u < bp - branch_slack::<T>() {
        return Err(Error::Domain(format!("lambert_w0 requires u >= -1/e, got {u}")));
    }
    if u <= bp {
        return Ok(-T::one());
    }
    if u == T::zero() {
        return Ok(T::zero());
    }

    let scale = u.abs();
    let mut w = initial_guess(u);
    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let r = w * ew - u;
        if r.abs() <= tol * scale {
            return Ok(w);
        }
        let wp1 = w + T::one();
        let denom = ew * wp1 - (w + T::lit(2.0)) * r / (T::lit(2.0) * wp1);
        if denom == T::zero() || !denom.is_finite() {
            break;
        }
        let next = (w - r / denom).max(-T::one());
        let step = (next - w).abs();
        w = next;
        if step <= T::epsilon() * (T::one() + w.abs()) {
            break;
        }
    }

    let r = (w * w.exp() - u).abs();
    let attainable = tol.max(T::lit(8.0) * T::epsilon() * (T::one() + w.abs()));
    if r <= attainable * scale {
        Ok(w)
    } else {
        Err(Error::Convergence(format!(
            "lambert_w0({u}) residual {r} after {MAX_ITERATIONS} iterations"
        )))
    }
}

/// `W0(u)` at the type's default kernel tolerance.
pub fn w0<T: Scalar>(u: T) -> Result<T> {
    lambert_w0(u, T::kernel_tol())
}

/// Derivative `W0'(u) = W0(u) / (u (1 + W0(u)))`, evaluated as `1 / (e^w (1 + w))`.
pub fn lambert_w0_prime<T: Scalar>(u: T) -> Result<T> {
    if !(u > branch_point::<T>()) {
        return Err(Error::Domain(format!(
            "lambert_w0_prime requires u > -1/e, got {u}"
        )));
    }
    let w = w0(u)?;
    Ok((w.exp() * (T::one() + w)).recip())
}

/// `W0(e^s)`, computed in log space once `e^s` overflows.
pub fn w0_of_exp<T: Scalar>(s: T) -> Result<T> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("w0_of_exp of non-finite argument {s}")));
    }
    let u = s.exp();
    if u.is_finite() {
        return w0(u);
    }
    // Newton on w + ln w = s.
    let mut w = s - s.ln();
    for _ in 0..MAX_ITERATIONS {
        let step = (w + w.ln() - s) * w / (w + T::one());
        w = w - step;
        if step.abs() <= T::epsilon() * w {
            return Ok(w);
        }
    }
    Err(Error::Convergence(format!("w0_of_exp({s}) did not converge")))
}
