//! Data model of the optimal-trade problem: pool state, fees, trades and the
//! trader's utility.

use crate::error::{check_dim, Error, Result};
use crate::scalar::{dot, Scalar};
use crate::trade_function::TradeFunction;

/// Diagonal fee matrix `Gamma`, one discount rate `0 < gamma_i < 1` per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct FeeSchedule<T>(Vec<T>);

impl<T: Scalar> FeeSchedule<T> {
    pub fn new(gamma: Vec<T>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidParameter("fee schedule is empty".into()));
        }
        if let Some(g) = gamma.iter().find(|g| !(**g > T::zero() && **g < T::one())) {
            return Err(Error::InvalidParameter(format!("fees must lie in (0, 1), got {g}")));
        }
        Ok(Self(gamma))
    }

    pub fn uniform(gamma: T, n: usize) -> Result<Self> {
        Self::new(vec![gamma; n])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> T {
        self.0.iter().copied().fold(T::zero(), T::max)
    }
}

#[derive(Debug, Clone)]
pub struct Pool<T: Scalar> {
    reserves: Vec<T>,
    fees: FeeSchedule<T>,
    tf: TradeFunction<T>,
    numeraire: usize,
}

impl<T: Scalar> Pool<T> {
    /// Pool with the last asset as numeraire.
    pub fn new(reserves: Vec<T>, fees: FeeSchedule<T>, tf: TradeFunction<T>) -> Result<Self> {
        let n = reserves.len();
        check_dim(n, fees.len())?;
        check_dim(n, tf.dim())?;
        if let Some(r) = reserves.iter().find(|r| !(**r > T::zero()) || !r.is_finite()) {
            return Err(Error::InvalidParameter(format!("reserves must be positive, got {r}")));
        }
        Ok(Self { reserves, fees, tf, numeraire: n - 1 })
    }

    pub fn with_numeraire(mut self, numeraire: usize) -> Result<Self> {
        if numeraire >= self.dim() {
            return Err(Error::InvalidParameter(format!("numeraire {numeraire} out of range")));
        }
        self.numeraire = numeraire;
        Ok(self)
    }

    pub fn with_trade_function(mut self, tf: TradeFunction<T>) -> Result<Self> {
        check_dim(self.dim(), tf.dim())?;
        self.tf = tf;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.reserves.len()
    }

    pub fn reserves(&self) -> &[T] {
        &self.reserves
    }

    pub fn fees(&self) -> &FeeSchedule<T> {
        &self.fees
    }

    pub fn gamma(&self) -> &[T] {
        self.fees.as_slice()
    }

    pub fn trade_function(&self) -> &TradeFunction<T> {
        &self.tf
    }

    pub fn numeraire(&self) -> usize {
        self.numeraire
    }

    /// Market prices at the current reserves, normalized by the numeraire.
    pub fn prices(&self) -> Result<Vec<T>> {
        self.tf.prices(&self.reserves, self.numeraire)
    }

    pub fn level(&self) -> Result<T> {
        self.tf.eval(&self.reserves)
    }
}

/// Trade `(x, y)`: `x` received from the pool, `y` tendered to it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Trade<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Scalar> Trade<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        check_dim(x.len(), y.len())?;
        Ok(Self { x, y })
    }

    pub fn zero(n: usize) -> Self {
        Self { x: vec![T::zero(); n], y: vec![T::zero(); n] }
    }

    /// Splits a net trade `z` into its complementary pair (`z_i > 0` received).
    pub fn from_net(z: &[T]) -> Self {
        Self {
            x: z.iter().map(|&v| v.max(T::zero())).collect(),
            y: z.iter().map(|&v| (-v).max(T::zero())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn net(&self) -> Vec<T> {
        self.x.iter().zip(&self.y).map(|(&a, &b)| a - b).collect()
    }

    pub fn l1_norm(&self) -> T {
        self.x.iter().chain(&self.y).map(|v| v.abs()).sum()
    }
}

/// `R + Gamma y - x`.
pub fn post_trade_reserves<T: Scalar>(pool: &Pool<T>, trade: &Trade<T>) -> Result<Vec<T>> {
    check_dim(pool.dim(), trade.dim())?;
    Ok(pool
        .reserves()
        .iter()
        .zip(pool.gamma())
        .zip(trade.x.iter().zip(&trade.y))
        .map(|((&r, &g), (&x, &y))| r + g * y - x)
        .collect())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum FeasibilityViolation<T> {
    NegativeReceive { asset: usize, amount: T },
    ReceiveExceedsReserve { asset: usize, excess: T },
    NegativeTender { asset: usize, amount: T },
    NegativePostTradeReserve { asset: usize, amount: T },
    /// `|phi(R_bar) - phi(R)| / max(1, |phi(R)|)`.
    LevelMismatch { residual: T },
    LevelNotEvaluable { reason: String },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FeasibilityReport<T> {
    pub violations: Vec<FeasibilityViolation<T>>,
    pub level_residual: T,
}

impl<T> FeasibilityReport<T> {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative level residual `|phi(R_bar) - phi(R)| / max(1, |phi(R)|)`.
pub fn level_residual<T: Scalar>(pool: &Pool<T>, post: &[T]) -> Result<T> {
    let base = pool.level()?;
    let clamped: Vec<T> = post.iter().map(|v| v.max(T::zero())).collect();
    let after = pool.trade_function().eval(&clamped)?;
    Ok((after - base).abs() / T::one().max(base.abs()))
}

pub fn is_feasible<T: Scalar>(pool: &Pool<T>, trade: &Trade<T>, tol: T) -> Result<FeasibilityReport<T>> {
    let post = post_trade_reserves(pool, trade)?;
    let mut violations = Vec::new();
    for i in 0..pool.dim() {
        let (x, y, r) = (trade.x[i], trade.y[i], pool.reserves()[i]);
        if x < -tol {
            violations.push(FeasibilityViolation::NegativeReceive { asset: i, amount: x });
        }
        if x > r + tol * T::one().max(r) {
            violations.push(FeasibilityViolation::ReceiveExceedsReserve { asset: i, excess: x - r });
        }
        if y < -tol {
            violations.push(FeasibilityViolation::NegativeTender { asset: i, amount: y });
        }
        if post[i] < -tol {
            violations.push(FeasibilityViolation::NegativePostTradeReserve {
                asset: i,
                amount: post[i],
            });
        }
    }
    let level_residual = match level_residual(pool, &post) {
        Ok(res) => {
            if !(res <= tol) {
                violations.push(FeasibilityViolation::LevelMismatch { residual: res });
            }
            res
        }
        Err(e) => {
            violations.push(FeasibilityViolation::LevelNotEvaluable { reason: e.to_string() });
            T::infinity()
        }
    };
    Ok(FeasibilityReport { violations, level_residual })
}

/// `max_i min(x_i, y_i)`; zero exactly when the trade is complementary.
pub fn complementarity_violation<T: Scalar>(trade: &Trade<T>) -> T {
    trade
        .x
        .iter()
        .zip(&trade.y)
        .map(|(&x, &y)| x.min(y))
        .fold(T::zero(), T::max)
}

/// Evaluatable utility with gradient. Hypotheses such as pseudoconcavity are
/// declared by the implementer, not verified.
pub trait Utility<T: Scalar> {
    fn dim(&self) -> usize;
    fn value(&self, z: &[T]) -> T;
    fn gradient(&self, z: &[T]) -> Vec<T>;
}

/// `U(z) = pi . z` with private prices `pi >= 0`, `pi != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearUtility<T>(Vec<T>);

impl<T: Scalar> LinearUtility<T> {
    pub fn new(pi: Vec<T>) -> Result<Self> {
        if let Some(p) = pi.iter().find(|p| !(**p >= T::zero()) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("private prices must be >= 0, got {p}")));
        }
        if pi.iter().all(|p| *p == T::zero()) {
            return Err(Error::InvalidParameter("private prices must not all be zero".into()));
        }
        Ok(Self(pi))
    }

    pub fn prices(&self) -> &[T] {
        &self.0
    }
}

impl<T: Scalar> Utility<T> for LinearUtility<T> {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn value(&self, z: &[T]) -> T {
        dot(&self.0, z)
    }

    fn gradient(&self, _z: &[T]) -> Vec<T> {
        self.0.clone()
    }
}

/// `U(x - y)`.
pub fn utility<T: Scalar>(u: &impl Utility<T>, trade: &Trade<T>) -> T {
    u.value(&trade.net())
}
