//! Active-set Newton refinement of a near-optimal trade.
//!
//! With the index partition held fixed, the free variables (`x_i` on `I^b`,
//! `y_i` on `I^c`) and the multiplier `alpha` solve the square system
//! `pi_i = alpha c_i P_i(R_bar)`, `phi(R_bar) = phi(R)` with `c_i = 1` for
//! received and `gamma_i` for tendered assets. The Jacobian is taken by finite
//! differences and each step is solved in least squares, which also covers
//! the rank-deficient linear trade function. Variables pushed onto a bound are
//! fixed there and dropped from the free set.

use nalgebra::{DMatrix, DVector};

use super::problem::Problem;
use crate::market::{post_trade_reserves, Trade};
use crate::scalar::{norm_inf, Scalar};

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Receive,
    Tender,
}

pub(crate) struct Polished<T> {
    pub trade: Trade<T>,
    pub alpha: T,
    pub residual: T,
}

struct System<'p, 'a, T: Scalar> {
    p: &'p Problem<'a, T>,
    base: Trade<T>,
    free: Vec<(usize, Side)>,
    pi_scale: T,
}

impl<T: Scalar> System<'_, '_, T> {
    fn trade_at(&self, u: &[T]) -> Trade<T> {
        let mut t = self.base.clone();
        for (&(i, side), &v) in self.free.iter().zip(u) {
            match side {
                Side::Receive => t.x[i] = v,
                Side::Tender => t.y[i] = v,
            }
        }
        t
    }

    fn residual(&self, u: &[T]) -> Option<Vec<T>> {
        let m = self.free.len();
        let alpha = u[m];
        let t = self.trade_at(&u[..m]);
        let post = post_trade_reserves(self.p.pool, &t).ok()?;
        if post.iter().any(|v| !(*v > T::zero())) {
            return None;
        }
        let tf = self.p.pool.trade_function();
        let grad = tf.gradient(&post).ok()?;
        let gamma = self.p.pool.gamma();
        let mut r: Vec<T> = self
            .free
            .iter()
            .map(|&(i, side)| {
                let c = if side == Side::Tender { gamma[i] } else { T::one() };
                (self.p.pi[i] - alpha * c * grad[i]) / self.pi_scale
            })
            .collect();
        r.push((tf.eval(&post).ok()? - self.p.level) / self.p.level);
        Some(r)
    }

    fn jacobian(&self, u: &[T], r0: &[T]) -> Option<DMatrix<f64>> {
        let dim = u.len();
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for j in 0..dim {
            let h = T::lit(1e-7) * T::one().max(u[j].abs());
            let mut up = u.to_vec();
            up[j] = up[j] + h;
            let r1 = self.residual(&up).or_else(|| {
                up[j] = u[j] - h;
                self.residual(&up).map(|r| r.iter().zip(r0).map(|(&a, &b)| b + b - a).collect())
            })?;
            for i in 0..dim {
                jac[(i, j)] = ((r1[i] - r0[i]) / h).to_f64_lossy();
            }
        }
        Some(jac)
    }
}

fn partition_free<T: Scalar>(p: &Problem<'_, T>, t: &Trade<T>, tol: T) -> Vec<(usize, Side)> {
    let r = p.pool.reserves();
    let mut free = Vec::new();
    for i in 0..p.n {
        if t.x[i] > tol * r[i] && t.x[i] < p.x_cap[i] * (T::one() - tol) {
            free.push((i, Side::Receive));
        } else if t.y[i] > tol * r[i] && t.y[i] < p.y_cap[i] * (T::one() - tol) {
            free.push((i, Side::Tender));
        }
    }
    free
}

pub(crate) fn polish<T: Scalar>(p: &Problem<'_, T>, trade: &Trade<T>, classification_tol: T) -> Option<Polished<T>> {
    let mut base = trade.clone();
    let r = p.pool.reserves();
    // Snap near-bound values onto their bounds before fixing the active set.
    for i in 0..p.n {
        if base.x[i] <= classification_tol * r[i] {
            base.x[i] = T::zero();
        }
        if base.y[i] <= classification_tol * r[i] {
            base.y[i] = T::zero();
        }
        if base.x[i] >= p.x_cap[i] * (T::one() - classification_tol) {
            base.x[i] = p.x_cap[i];
        }
    }
    let mut free = partition_free(p, &base, classification_tol);
    if free.is_empty() {
        return None;
    }
    let pi_scale = norm_inf(p.pi);
    let post = post_trade_reserves(p.pool, &base).ok()?;
    let grad = p.pool.trade_function().gradient(&post).ok()?;
    let gamma = p.pool.gamma();
    let (num, den) = free.iter().fold((T::zero(), T::zero()), |(a, b), &(i, side)| {
        let c = if side == Side::Tender { gamma[i] } else { T::one() };
        (a + c * p.pi[i] / grad[i], b + c * c)
    });
    let mut alpha = num / den;

    let start_residual = {
        let sys = System { p, base: base.clone(), free: free.clone(), pi_scale };
        let u: Vec<T> = free
            .iter()
            .map(|&(i, s)| if s == Side::Receive { base.x[i] } else { base.y[i] })
            .chain(std::iter::once(alpha))
            .collect();
        norm_inf(&sys.residual(&u)?)
    };

    let mut rounds = 0;
    'active: loop {
        rounds += 1;
        if rounds > p.n + 2 || free.is_empty() {
            return None;
        }
        let sys = System { p, base: base.clone(), free: free.clone(), pi_scale };
        let mut u: Vec<T> = free
            .iter()
            .map(|&(i, s)| if s == Side::Receive { base.x[i] } else { base.y[i] })
            .chain(std::iter::once(alpha))
            .collect();
        let mut res = sys.residual(&u)?;
        for _ in 0..40 {
            let norm = norm_inf(&res);
            if norm <= T::lit(1e-14).max(T::lit(16.0) * T::epsilon()) {
                break;
            }
            let jac = sys.jacobian(&u, &res)?;
            let rhs = DVector::from_iterator(res.len(), res.iter().map(|v| -v.to_f64_lossy()));
            let step = jac.svd(true, true).solve(&rhs, 1e-14).ok()?;
            let delta: Vec<T> = step.iter().map(|&v| T::lit(v)).collect();
            // Leaving the box fixes the variable at the violated bound.
            let m = free.len();
            for (j, &(i, side)) in free.iter().enumerate() {
                let next = u[j] + delta[j];
                let cap = if side == Side::Receive { p.x_cap[i] } else { p.y_cap[i] };
                if next <= T::zero() || next >= cap {
                    let fixed = if next <= T::zero() { T::zero() } else { cap };
                    base = sys.trade_at(&u[..m]);
                    match side {
                        Side::Receive => base.x[i] = fixed,
                        Side::Tender => base.y[i] = fixed,
                    }
                    alpha = u[m];
                    free.remove(j);
                    continue 'active;
                }
            }
            let mut scale = T::one();
            let mut improved = None;
            for _ in 0..30 {
                let trial: Vec<T> = u.iter().zip(&delta).map(|(&a, &d)| a + scale * d).collect();
                if let Some(tr) = sys.residual(&trial) {
                    if norm_inf(&tr) < norm {
                        improved = Some((trial, tr));
                        break;
                    }
                }
                scale = scale / T::lit(2.0);
            }
            let Some((next, next_res)) = improved else {
                break;
            };
            u = next;
            res = next_res;
        }
        let residual = norm_inf(&res);
        if !(residual < start_residual) && residual > T::lit(1e-12) {
            return None;
        }
        let m = free.len();
        return Some(Polished { trade: sys.trade_at(&u[..m]), alpha: u[m], residual });
    }
}
