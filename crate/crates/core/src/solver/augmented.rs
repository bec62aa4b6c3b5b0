//! Augmented Lagrangian outer loop with a spectral projected-gradient inner
//! solver (nonmonotone backtracking).

use super::problem::Problem;
use super::SolverOptions;
use crate::scalar::{dot, Scalar};

const NONMONOTONE_WINDOW: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_PENALTY: f64 = 1e12;

pub(crate) struct AlOutcome<T> {
    pub w: Vec<T>,
    pub multiplier: T,
    pub converged: bool,
    pub iterations: usize,
}

fn projected_step<T: Scalar>(p: &Problem<'_, T>, w: &[T], g: &[T], step: T) -> Vec<T> {
    let mut trial: Vec<T> = w.iter().zip(g).map(|(&a, &b)| a - step * b).collect();
    p.project(&mut trial);
    trial.iter().zip(w).map(|(&a, &b)| a - b).collect()
}

fn inf_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Projected gradient of the Lagrangian `f + lambda h`.
fn lagrangian_stationarity<T: Scalar>(p: &Problem<'_, T>, w: &[T], lambda: T, dh: &[T]) -> T {
    let df = p.objective_gradient();
    let g: Vec<T> = df.iter().zip(dh).map(|(&a, &b)| a + lambda * b).collect();
    inf_norm(&projected_step(p, w, &g, T::one()))
}

/// Multiplier minimizing the projected Lagrangian gradient at `w`.
///
/// Each component of `P(w - df - lambda dh) - w` is piecewise linear in
/// `lambda`, so the squared norm is piecewise quadratic and is minimized
/// exactly piece by piece.
pub(crate) fn multiplier_estimate<T: Scalar>(p: &Problem<'_, T>, w: &[T], dh: &[T]) -> T {
    let df = p.objective_gradient();
    let mut breaks: Vec<T> = Vec::new();
    for j in 0..w.len() {
        if dh[j] != T::zero() {
            for bound in [p.lower[j], p.upper[j]] {
                let b = (w[j] - df[j] - bound) / dh[j];
                if b.is_finite() {
                    breaks.push(b);
                }
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    breaks.dedup();
    let residual = |lambda: T| {
        let g: Vec<T> = df.iter().zip(dh).map(|(&a, &b)| a + lambda * b).collect();
        let d = projected_step(p, w, &g, T::one());
        dot(&d, &d)
    };
    let mut pieces: Vec<(T, T)> = Vec::with_capacity(breaks.len() + 1);
    let big = T::lit(1e12);
    let first = breaks.first().copied().unwrap_or(T::zero());
    let last = breaks.last().copied().unwrap_or(T::zero());
    pieces.push((first - big, first));
    for pair in breaks.windows(2) {
        pieces.push((pair[0], pair[1]));
    }
    pieces.push((last, last + big));

    let mut best = (T::infinity(), T::zero());
    for (lo, hi) in pieces {
        let probe = lo + (hi - lo) / T::lit(2.0);
        // Components unclamped at the probe point contribute (df + lambda dh)^2.
        let (mut num, mut den) = (T::zero(), T::zero());
        for j in 0..w.len() {
            let v = w[j] - df[j] - probe * dh[j];
            if v > p.lower[j] && v < p.upper[j] {
                num = num + df[j] * dh[j];
                den = den + dh[j] * dh[j];
            }
        }
        let candidate = if den > T::zero() { (-num / den).max(lo).min(hi) } else { probe };
        let value = residual(candidate);
        if value < best.0 {
            best = (value, candidate);
        }
    }
    best.1
}

struct Merit<'p, 'a, T: Scalar> {
    p: &'p Problem<'a, T>,
    lambda: T,
    rho: T,
    df: Vec<T>,
}

impl<T: Scalar> Merit<'_, '_, T> {
    fn value(&self, w: &[T]) -> T {
        match self.p.constraint(w) {
            Ok(h) => self.p.objective(w) + self.lambda * h + self.rho / T::lit(2.0) * h * h,
            Err(_) => T::infinity(),
        }
    }

    fn value_and_gradient(&self, w: &[T]) -> Option<(T, Vec<T>)> {
        let (h, dh) = self.p.constraint_with_gradient(w).ok()?;
        let value = self.p.objective(w) + self.lambda * h + self.rho / T::lit(2.0) * h * h;
        let c = self.lambda + self.rho * h;
        let g = self.df.iter().zip(&dh).map(|(&a, &b)| a + c * b).collect();
        Some((value, g))
    }
}

/// Spectral projected gradient on the box. Returns iterations used.
fn spg<T: Scalar>(merit: &Merit<'_, '_, T>, w: &mut Vec<T>, tol: T, max_iter: usize) -> usize {
    let p = merit.p;
    let Some((mut value, mut g)) = merit.value_and_gradient(w) else {
        return 0;
    };
    let mut history = vec![value];
    let sigma_min = T::lit(1e-10);
    let sigma_max = T::lit(1e10);
    let first = inf_norm(&projected_step(p, w, &g, T::one()));
    let mut sigma = if first > T::zero() { first.recip().max(sigma_min).min(sigma_max) } else { T::one() };
    for iter in 0..max_iter {
        if inf_norm(&projected_step(p, w, &g, T::one())) <= tol {
            return iter;
        }
        let d = projected_step(p, w, &g, sigma);
        let slope = dot(&g, &d);
        if !(slope < T::zero()) {
            return iter;
        }
        let reference = history.iter().copied().fold(T::neg_infinity(), T::max);
        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<T> = w.iter().zip(&d).map(|(&a, &b)| a + step * b).collect();
            let tv = merit.value(&trial);
            if tv <= reference + T::lit(ARMIJO) * step * slope {
                accepted = Some((trial, tv));
                break;
            }
            step = step / T::lit(2.0);
        }
        let Some((trial, _)) = accepted else {
            return iter;
        };
        let Some((tv, tg)) = merit.value_and_gradient(&trial) else {
            return iter;
        };
        let s: Vec<T> = trial.iter().zip(w.iter()).map(|(&a, &b)| a - b).collect();
        let yv: Vec<T> = tg.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &yv);
        sigma = if sy > T::zero() { (dot(&s, &s) / sy).max(sigma_min).min(sigma_max) } else { sigma_max };
        *w = trial;
        g = tg;
        value = tv;
        history.push(value);
        if history.len() > NONMONOTONE_WINDOW {
            history.remove(0);
        }
    }
    max_iter
}

pub(crate) fn solve_from<T: Scalar>(p: &Problem<'_, T>, start: Vec<T>, opts: &SolverOptions<T>) -> AlOutcome<T> {
    let mut w = start;
    p.project(&mut w);
    let (mut h, mut dh) = match p.constraint_with_gradient(&w) {
        Ok(v) => v,
        Err(_) => {
            return AlOutcome {
                w,
                multiplier: T::zero(),
                converged: false,
                iterations: 0,
            }
        }
    };
    let mut lambda = multiplier_estimate(p, &w, &dh);
    let mut rho = opts.initial_penalty;
    let mut iterations = 0;
    let mut previous = h.abs();
    for k in 0..opts.max_outer_iterations {
        let inner_tol = opts.stationarity_tol.max(T::lit(0.1).powi(k as i32 + 1));
        let merit = Merit { p, lambda, rho, df: p.objective_gradient() };
        iterations += spg(&merit, &mut w, inner_tol, opts.max_inner_iterations);
        match p.constraint_with_gradient(&w) {
            Ok(v) => (h, dh) = v,
            Err(_) => break,
        }
        lambda = lambda + rho * h;
        let stationarity = lagrangian_stationarity(p, &w, lambda, &dh);
        if h.abs() <= opts.constraint_tol && stationarity <= opts.stationarity_tol {
            return AlOutcome { w, multiplier: lambda, converged: true, iterations };
        }
        if h.abs() > T::lit(0.25) * previous {
            rho = (rho * opts.penalty_growth).min(T::lit(MAX_PENALTY));
        }
        previous = h.abs();
    }
    AlOutcome { w, multiplier: lambda, converged: false, iterations }
}
