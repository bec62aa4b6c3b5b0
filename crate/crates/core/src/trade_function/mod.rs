//! Trade functions: arithmetic, geometric and weighted quasi-arithmetic means.
//!
//! A weighted quasi-arithmetic mean with generator `f` is
//! `phi(x) = f^-1( sum_i w_i f(x_i) )`. The power-log generators admit closed
//! forms through the Lambert W function; every mean also has a generic
//! evaluation path (sum then 1-D inversion by bisection) used as a cross-check.

mod certify;

use std::fmt;
use std::sync::Arc;

pub use certify::{
    certify_monotone, certify_quasilinear_level_set, midpoint_gap, probe_convexity, CertificationReport,
    ConvexityProbe, MidpointWitness, SamplingBox,
};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::special::{lambert_w0_prime, w0, w0_of_exp};

/// Positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T>(Vec<T>);

impl<T: Scalar> WeightVector<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("weight vector is empty".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > T::zero())) {
            return Err(Error::InvalidParameter(format!("weights must be positive, got {w}")));
        }
        let sum: T = weights.iter().copied().sum();
        let tol = T::lit(1e-12).max(T::lit(64.0) * T::epsilon());
        if (sum - T::one()).abs() > tol {
            return Err(Error::InvalidParameter(format!("weights must sum to 1, got {sum}")));
        }
        Ok(Self(weights))
    }

    pub fn equal(n: usize) -> Self {
        Self(vec![T::from_usize_lossy(n).recip(); n])
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
}

/// A user-supplied mean generator. Inversion falls back to bisection.
pub trait Generator<T: Scalar>: Send + Sync {
    fn value(&self, y: T) -> T;
    fn derivative(&self, y: T) -> T;
    fn name(&self) -> &str {
        "custom"
    }
}

/// Mean generator `f`.
#[derive(Clone)]
pub enum MeanGenerator<T: Scalar> {
    /// `f(y) = y`.
    Identity,
    /// `f(y) = ln y`.
    Log,
    /// `f(y) = (y + 1)^p ln(y + 1)`, `p > 1`.
    PowerLog { p: T },
    /// `f(y) = (y + c)^p ln(y + c) + 1/(e p)` with `c = e^(-1/p)`, `p > 1`.
    /// Normalized so that `f(0) = 0`.
    ExpShift { p: T },
    /// `f(y) = y + e^y`, with closed form `phi = ln W0(exp(sum_i w_i f(x_i)))`.
    LinearExp,
    Custom(Arc<dyn Generator<T>>),
}

impl<T: Scalar> fmt::Debug for MeanGenerator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "Identity"),
            Self::Log => write!(f, "Log"),
            Self::PowerLog { p } => write!(f, "PowerLog {{ p: {p} }}"),
            Self::ExpShift { p } => write!(f, "ExpShift {{ p: {p} }}"),
            Self::LinearExp => write!(f, "LinearExp"),
            Self::Custom(g) => write!(f, "Custom({})", g.name()),
        }
    }
}

fn exp_shift_offset<T: Scalar>(p: T) -> T {
    (-p.recip()).exp()
}

impl<T: Scalar> MeanGenerator<T> {
    fn validate(&self) -> Result<()> {
        match self {
            Self::PowerLog { p } | Self::ExpShift { p } if !(*p > T::one()) => Err(
                Error::InvalidParameter(format!("power-log generator requires p > 1, got {p}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn value(&self, y: T) -> T {
        match self {
            Self::Identity => y,
            Self::Log => y.ln(),
            Self::PowerLog { p } => {
                let s = y + T::one();
                s.powf(*p) * s.ln()
            }
            Self::ExpShift { p } => {
                let s = y + exp_shift_offset(*p);
                s.powf(*p) * s.ln() + (T::E() * *p).recip()
            }
            Self::LinearExp => y + y.exp(),
            Self::Custom(g) => g.value(y),
        }
    }

    pub fn derivative(&self, y: T) -> T {
        match self {
            Self::Identity => T::one(),
            Self::Log => y.recip(),
            Self::PowerLog { p } => {
                let s = y + T::one();
                s.powf(*p - T::one()) * (*p * s.ln() + T::one())
            }
            Self::ExpShift { p } => {
                let s = y + exp_shift_offset(*p);
                s.powf(*p - T::one()) * (*p * s.ln() + T::one())
            }
            Self::LinearExp => T::one() + y.exp(),
            Self::Custom(g) => g.derivative(y),
        }
    }

    fn requires_positive(&self) -> bool {
        !matches!(self, Self::Identity | Self::LinearExp)
    }

    /// Closed-form `f^-1(s)` and `d f^-1 / ds`, where one exists.
    fn closed_inverse(&self, s: T) -> Option<Result<(T, T)>> {
        let inv = match self {
            Self::Identity => Ok((s, T::one())),
            Self::Log => {
                let m = s.exp();
                Ok((m, m))
            }
            Self::PowerLog { p } => power_log_inverse(*p, *p * s, T::one()),
            Self::ExpShift { p } => {
                power_log_inverse(*p, *p * s - T::E().recip(), exp_shift_offset(*p))
            }
            Self::LinearExp => w0_of_exp(s).map(|w| (w.ln(), (T::one() + w).recip())),
            Self::Custom(_) => return None,
        };
        Some(inv)
    }
}

/// `m = exp(W0(arg)/p) - shift`, `dm/ds = exp(W0(arg)/p) W0'(arg)` where `arg = p s + const`.
fn power_log_inverse<T: Scalar>(p: T, arg: T, shift: T) -> Result<(T, T)> {
    let w = w0(arg)?;
    let e = (w / p).exp();
    Ok((e - shift, e * lambert_w0_prime(arg)?))
}

#[derive(Debug, Clone)]
pub enum TradeFunctionKind<T: Scalar> {
    /// Equal-weight arithmetic mean.
    Arithmetic,
    /// Equal-weight geometric mean, evaluated in log space.
    Geometric,
    QuasiArithmetic {
        generator: MeanGenerator<T>,
        weights: WeightVector<T>,
    },
}

/// Declared generalized-convexity properties of a trade function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hypotheses {
    pub increasing: bool,
    pub convex: Option<bool>,
    pub concave: Option<bool>,
}

/// An immutable trade function `phi: R^n_+ -> R`, optionally scaled by a
/// positive constant.
#[derive(Debug, Clone)]
pub struct TradeFunction<T: Scalar> {
    kind: TradeFunctionKind<T>,
    n: usize,
    scale: T,
}

impl<T: Scalar> TradeFunction<T> {
    pub fn new(kind: TradeFunctionKind<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if let TradeFunctionKind::QuasiArithmetic { generator, weights } = &kind {
            generator.validate()?;
            check_dim(n, weights.len())?;
        }
        Ok(Self { kind, n, scale: T::one() })
    }

    pub fn arithmetic(n: usize) -> Result<Self> {
        Self::new(TradeFunctionKind::Arithmetic, n)
    }

    pub fn geometric(n: usize) -> Result<Self> {
        Self::new(TradeFunctionKind::Geometric, n)
    }

    pub fn quasi_arithmetic(generator: MeanGenerator<T>, weights: WeightVector<T>) -> Result<Self> {
        let n = weights.len();
        Self::new(TradeFunctionKind::QuasiArithmetic { generator, weights }, n)
    }

    /// Equal-weight power-log mean, the Lambert-W closed-form trade function.
    pub fn power_log(p: T, n: usize) -> Result<Self> {
        Self::quasi_arithmetic(MeanGenerator::PowerLog { p }, WeightVector::equal(n))
    }

    /// Returns `c * phi`. Means of the scaled function no longer satisfy the mean bounds.
    pub fn scaled(mut self, c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {c}")));
        }
        self.scale = self.scale * c;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &TradeFunctionKind<T> {
        &self.kind
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn hypotheses(&self) -> Hypotheses {
        use TradeFunctionKind::*;
        match &self.kind {
            Arithmetic => Hypotheses { increasing: true, convex: Some(true), concave: Some(true) },
            Geometric => Hypotheses { increasing: true, convex: Some(false), concave: Some(true) },
            QuasiArithmetic { generator, .. } => match generator {
                MeanGenerator::Identity => {
                    Hypotheses { increasing: true, convex: Some(true), concave: Some(true) }
                }
                MeanGenerator::Log => {
                    Hypotheses { increasing: true, convex: Some(false), concave: Some(true) }
                }
                MeanGenerator::PowerLog { .. } | MeanGenerator::ExpShift { .. } | MeanGenerator::LinearExp => {
                    Hypotheses { increasing: true, convex: Some(false), concave: Some(false) }
                }
                MeanGenerator::Custom(_) => {
                    Hypotheses { increasing: false, convex: None, concave: None }
                }
            },
        }
    }

    fn check_domain(&self, x: &[T]) -> Result<()> {
        check_dim(self.n, x.len())?;
        let strict = match &self.kind {
            TradeFunctionKind::Arithmetic => false,
            TradeFunctionKind::Geometric => true,
            TradeFunctionKind::QuasiArithmetic { generator, .. } => generator.requires_positive(),
        };
        for (i, &v) in x.iter().enumerate() {
            let ok = if strict { v > T::zero() } else { v >= T::zero() };
            if !ok || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "trade function argument x[{i}] = {v} must be {}",
                    if strict { "positive" } else { "non-negative" }
                )));
            }
        }
        Ok(())
    }

    fn generator_sum(generator: &MeanGenerator<T>, weights: &WeightVector<T>, x: &[T]) -> T {
        weights.as_slice().iter().zip(x).map(|(&w, &v)| w * generator.value(v)).sum()
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        self.check_domain(x)?;
        let n = T::from_usize_lossy(self.n);
        let value = match &self.kind {
            TradeFunctionKind::Arithmetic => x.iter().copied().sum::<T>() / n,
            TradeFunctionKind::Geometric => (x.iter().map(|v| v.ln()).sum::<T>() / n).exp(),
            TradeFunctionKind::QuasiArithmetic { generator, weights } => match generator {
                MeanGenerator::Log => weights
                    .as_slice()
                    .iter()
                    .zip(x)
                    .map(|(&w, &v)| w * v.ln())
                    .sum::<T>()
                    .exp(),
                _ => {
                    let s = Self::generator_sum(generator, weights, x);
                    match generator.closed_inverse(s) {
                        Some(inv) => inv?.0,
                        None => invert_by_bisection(generator, s, x)?,
                    }
                }
            },
        };
        Ok(self.scale * value)
    }

    /// Generic evaluation: `sum_i w_i f(x_i)` followed by bisection on `f(m) = sum`
    /// over `[min x, max x]`. Arithmetic and geometric means use `f = id` and `f = ln`.
    pub fn eval_by_inversion(&self, x: &[T]) -> Result<T> {
        self.check_domain(x)?;
        let (generator, weights) = match &self.kind {
            TradeFunctionKind::Arithmetic => (MeanGenerator::Identity, WeightVector::equal(self.n)),
            TradeFunctionKind::Geometric => (MeanGenerator::Log, WeightVector::equal(self.n)),
            TradeFunctionKind::QuasiArithmetic { generator, weights } => {
                (generator.clone(), weights.clone())
            }
        };
        let s = Self::generator_sum(&generator, &weights, x);
        Ok(self.scale * invert_by_bisection(&generator, s, x)?)
    }

    pub fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_domain(x)?;
        let n = T::from_usize_lossy(self.n);
        let g = match &self.kind {
            TradeFunctionKind::Arithmetic => vec![n.recip(); self.n],
            TradeFunctionKind::Geometric => {
                let phi = (x.iter().map(|v| v.ln()).sum::<T>() / n).exp();
                x.iter().map(|&v| phi / (n * v)).collect()
            }
            TradeFunctionKind::QuasiArithmetic { generator, weights } => {
                let w = weights.as_slice();
                let s = Self::generator_sum(generator, weights, x);
                let dinv = match generator.closed_inverse(s) {
                    Some(inv) => inv?.1,
                    None => generator.derivative(invert_by_bisection(generator, s, x)?).recip(),
                };
                w.iter().zip(x).map(|(&wi, &xi)| dinv * wi * generator.derivative(xi)).collect()
            }
        };
        Ok(g.into_iter().map(|v| self.scale * v).collect())
    }

    /// Reported prices `p_i = grad_i / grad_numeraire` at reserves `r`.
    pub fn prices(&self, r: &[T], numeraire: usize) -> Result<Vec<T>> {
        if numeraire >= self.n {
            return Err(Error::InvalidParameter(format!(
                "numeraire index {numeraire} out of range for n = {}",
                self.n
            )));
        }
        let g = self.gradient(r)?;
        normalize_prices(&g, numeraire)
    }
}

pub(crate) fn normalize_prices<T: Scalar>(g: &[T], numeraire: usize) -> Result<Vec<T>> {
    let base = g[numeraire];
    if !(base > T::zero()) || !base.is_finite() {
        return Err(Error::Numeraire { index: numeraire, value: base.to_f64_lossy() });
    }
    Ok(g
        .iter()
        .enumerate()
        .map(|(i, &gi)| if i == numeraire { T::one() } else { gi / base })
        .collect())
}

fn invert_by_bisection<T: Scalar>(generator: &MeanGenerator<T>, s: T, x: &[T]) -> Result<T> {
    let (mut lo, mut hi) = x
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return Ok(lo);
    }
    let g = |m: T| generator.value(m) - s;
    let (glo, ghi) = (g(lo), g(hi));
    if glo == T::zero() {
        return Ok(lo);
    }
    if ghi == T::zero() {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() {
        return Err(Error::RootFind(format!(
            "generator inversion not bracketed on [{lo}, {hi}]"
        )));
    }
    let lo_negative = glo < T::zero();
    for _ in 0..300 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) < T::zero()) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) / T::lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const R: [f64; 6] = [1.0, 3.0, 2.0, 5.0, 7.0, 6.0];

    fn qm() -> TradeFunction<f64> {
        TradeFunction::power_log(2.0, 6).unwrap()
    }

    #[test]
    fn arithmetic_values() {
        let tf = TradeFunction::<f64>::arithmetic(6).unwrap();
        assert_abs_diff_eq!(tf.eval(&R).unwrap(), 4.0, epsilon = 1e-15);
        assert_eq!(tf.gradient(&R).unwrap(), vec![1.0 / 6.0; 6]);
        assert_eq!(tf.prices(&R, 5).unwrap(), vec![1.0; 6]);
        assert!(tf.eval(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn geometric_values() {
        let tf = TradeFunction::<f64>::geometric(6).unwrap();
        for c in [0.01, 1.0, 37.5] {
            assert_abs_diff_eq!(tf.eval(&[c; 6]).unwrap(), c, epsilon = 1e-12 * c);
        }
        let p = tf.prices(&R, 5).unwrap();
        let expected = [6.0, 2.0, 3.0, 1.2, 6.0 / 7.0, 1.0];
        for (a, b) in p.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let mut zero = R;
        zero[2] = 0.0;
        assert!(matches!(tf.eval(&zero), Err(Error::Domain(_))));
        assert!(tf.gradient(&zero).is_err());
    }

    #[test]
    fn geometric_survives_large_products() {
        let tf = TradeFunction::<f64>::geometric(4).unwrap();
        let x = [1e200, 1e200, 1e200, 1e200];
        assert_abs_diff_eq!(tf.eval(&x).unwrap() / 1e200, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn power_log_closed_form_matches_inversion() {
        let tf = qm();
        let closed = tf.eval(&R).unwrap();
        let generic = tf.eval_by_inversion(&R).unwrap();
        assert!((1.0..=7.0).contains(&closed));
        assert_abs_diff_eq!(closed, generic, epsilon = 1e-10);
    }

    #[test]
    fn power_log_prices_reproduce_reference_vector() {
        let p = qm().prices(&R, 5).unwrap();
        let reference = [0.13937573, 0.44068816, 0.28010876, 0.80312261, 1.20524975, 1.0];
        for (a, b) in p.iter().zip(reference) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-4);
        }
        assert_eq!(p[5], 1.0);
    }

    #[test]
    fn invalid_construction() {
        assert!(TradeFunction::<f64>::power_log(1.0, 3).is_err());
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        assert!(TradeFunction::quasi_arithmetic(
            MeanGenerator::Log,
            WeightVector::new(vec![0.25, 0.75]).unwrap()
        )
        .is_ok());
        assert!(TradeFunction::<f64>::arithmetic(0).is_err());
        assert!(qm().scaled(-1.0).is_err());
    }

    #[test]
    fn numeraire_errors() {
        let tf = qm();
        assert!(tf.prices(&R, 6).is_err());
        assert!(matches!(normalize_prices(&[1.0, 0.0], 1), Err(Error::Numeraire { .. })));
    }

    #[test]
    fn exp_shift_is_a_mean() {
        let tf = TradeFunction::quasi_arithmetic(
            MeanGenerator::ExpShift { p: 2.0 },
            WeightVector::equal(6),
        )
        .unwrap();
        let v = tf.eval(&R).unwrap();
        assert!((1.0..=7.0).contains(&v));
        assert_abs_diff_eq!(v, tf.eval_by_inversion(&R).unwrap(), epsilon = 1e-10);
        assert_abs_diff_eq!(tf.eval(&[2.5; 6]).unwrap(), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn linear_exp_closed_form_matches_inversion() {
        let tf = TradeFunction::quasi_arithmetic(MeanGenerator::LinearExp, WeightVector::equal(6)).unwrap();
        let v = tf.eval(&R).unwrap();
        assert!((1.0..=7.0).contains(&v));
        assert_abs_diff_eq!(v, tf.eval_by_inversion(&R).unwrap(), epsilon = 1e-10);
        assert_abs_diff_eq!(tf.eval(&[0.0; 6]).unwrap(), 0.0, epsilon = 1e-15);
        let pair = TradeFunction::quasi_arithmetic(MeanGenerator::LinearExp, WeightVector::equal(2)).unwrap();
        assert_abs_diff_eq!(pair.eval(&[3.0, 3.0]).unwrap(), 3.0, epsilon = 1e-13);
        let far = pair.eval(&[600.0, 610.0]).unwrap();
        assert!((600.0..=610.0).contains(&far), "{far}");
        assert_abs_diff_eq!(far, pair.eval_by_inversion(&[600.0, 610.0]).unwrap(), epsilon = 1e-9);
        let g = tf.gradient(&R).unwrap();
        let (sum_f, w) = (R.iter().map(|&r| (r + r.exp()) / 6.0).sum::<f64>(), v.exp());
        assert_abs_diff_eq!(sum_f, v + w, epsilon = 1e-9 * sum_f);
        for (gi, &ri) in g.iter().zip(&R) {
            assert_abs_diff_eq!(*gi, (1.0 + ri.exp()) / (6.0 * (1.0 + w)), epsilon = 1e-12);
        }
    }

    /// The variant as literally printed, with `+ e p` inside the weighted sum.
    fn exp_shift_as_printed(p: f64, x: &[f64]) -> f64 {
        let c = (-1.0 / p).exp();
        let e = std::f64::consts::E;
        let n = x.len() as f64;
        let sum: f64 = x.iter().map(|&v| ((v + c).powf(p) * (v + c).ln() + e * p) / n).sum();
        (w0(p * sum - 1.0 / e).unwrap() / p).exp() - c
    }

    #[test]
    fn printed_exp_shift_constant_breaks_mean_bounds() {
        // phi(c, .., c) must equal c for a mean; the printed constant shifts it away.
        let v = exp_shift_as_printed(2.0, &[2.5; 6]);
        assert!((v - 2.5).abs() > 0.1, "printed variant unexpectedly consistent: {v}");
    }

    #[test]
    fn scaled_function() {
        let tf = qm().scaled(3.0).unwrap();
        assert_abs_diff_eq!(tf.eval(&R).unwrap(), 3.0 * qm().eval(&R).unwrap(), epsilon = 1e-12);
        let p1 = tf.prices(&R, 5).unwrap();
        let p0 = qm().prices(&R, 5).unwrap();
        for (a, b) in p1.iter().zip(&p0) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_precision_eval() {
        let tf = TradeFunction::<f32>::power_log(2.0, 6).unwrap();
        let r: Vec<f32> = R.iter().map(|&v| v as f32).collect();
        let p = tf.prices(&r, 5).unwrap();
        assert!((p[0] - 0.139_375_7).abs() < 1e-4);
    }
}
