//! Scaled formulation of the trade problem.
//!
//! Variables are `w = (x / R, y / R)`. The
//! objective is `-pi.(x - y) / sum(pi R)` and the level constraint is
//! `h = (phi(R_bar) - phi(R)) / phi(R)`.

use crate::error::Result;
use crate::market::{Pool, Trade};
use crate::scalar::Scalar;

pub(crate) struct Problem<'a, T: Scalar> {
    pub pool: &'a Pool<T>,
    pub pi: &'a [T],
    pub n: usize,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub objective_scale: T,
    pub level: T,
    /// Upper bound on `y` in asset units.
    pub y_cap: Vec<T>,
    /// Upper bound on `x` in asset units, `R - barrier`.
    pub x_cap: Vec<T>,
}

impl<'a, T: Scalar> Problem<'a, T> {
    pub fn new(pool: &'a Pool<T>, pi: &'a [T], y_cap_multiple: T, barrier_shift: T) -> Result<Self> {
        let n = pool.dim();
        let r = pool.reserves();
        let total: T = r.iter().copied().sum();
        let min_r = r.iter().copied().fold(T::infinity(), T::min);
        let barrier = barrier_shift * min_r;
        let x_cap: Vec<T> = r.iter().map(|&ri| ri - barrier).collect();
        let y_cap = vec![y_cap_multiple * total; n];
        let mut lower = vec![T::zero(); 2 * n];
        let mut upper = vec![T::zero(); 2 * n];
        for i in 0..n {
            upper[i] = x_cap[i] / r[i];
            upper[n + i] = y_cap[i] / r[i];
            lower[i] = T::zero();
            lower[n + i] = T::zero();
        }
        let objective_scale = pi.iter().zip(r).map(|(&p, &ri)| p * ri).sum::<T>();
        let level = pool.level()?;
        Ok(Self { pool, pi, n, lower, upper, objective_scale, level, y_cap, x_cap })
    }

    pub fn project(&self, w: &mut [T]) {
        for ((v, &lo), &hi) in w.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.max(lo).min(hi);
        }
    }

    pub fn post(&self, w: &[T]) -> Vec<T> {
        let r = self.pool.reserves();
        let g = self.pool.gamma();
        (0..self.n).map(|i| r[i] * (T::one() - w[i] + g[i] * w[self.n + i])).collect()
    }

    pub fn objective(&self, w: &[T]) -> T {
        let r = self.pool.reserves();
        -(0..self.n)
            .map(|i| self.pi[i] * r[i] * (w[i] - w[self.n + i]))
            .sum::<T>()
            / self.objective_scale
    }

    pub fn objective_gradient(&self) -> Vec<T> {
        let r = self.pool.reserves();
        let mut g = vec![T::zero(); 2 * self.n];
        for i in 0..self.n {
            let c = self.pi[i] * r[i] / self.objective_scale;
            g[i] = -c;
            g[self.n + i] = c;
        }
        g
    }

    pub fn constraint(&self, w: &[T]) -> Result<T> {
        let phi = self.pool.trade_function().eval(&self.post(w))?;
        Ok((phi - self.level) / self.level)
    }

    pub fn constraint_with_gradient(&self, w: &[T]) -> Result<(T, Vec<T>)> {
        let post = self.post(w);
        let tf = self.pool.trade_function();
        let phi = tf.eval(&post)?;
        let grad = tf.gradient(&post)?;
        let r = self.pool.reserves();
        let gamma = self.pool.gamma();
        let mut g = vec![T::zero(); 2 * self.n];
        for i in 0..self.n {
            let c = grad[i] * r[i] / self.level;
            g[i] = -c;
            g[self.n + i] = gamma[i] * c;
        }
        Ok(((phi - self.level) / self.level, g))
    }

    pub fn to_trade(&self, w: &[T]) -> Trade<T> {
        let r = self.pool.reserves();
        Trade {
            x: (0..self.n).map(|i| (w[i] * r[i]).max(T::zero()).min(self.x_cap[i])).collect(),
            y: (0..self.n).map(|i| (w[self.n + i] * r[i]).max(T::zero())).collect(),
        }
    }
}
