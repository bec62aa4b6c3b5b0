//! Sampling certifiers for monotonicity, the level-set characterization of
//! quasilinearity, and midpoint convexity/concavity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TradeFunction;
use crate::scalar::{dot, norm2, Scalar};

/// Axis-aligned sampling box `[lo, hi]^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingBox<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Default for SamplingBox<T> {
    fn default() -> Self {
        Self { lo: T::lit(0.01), hi: T::lit(50.0) }
    }
}

impl<T: Scalar> SamplingBox<T> {
    fn sample(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
        (0..n).map(|_| self.lo + (self.hi - self.lo) * T::lit(rng.random::<f64>())).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport<T> {
    pub checked: usize,
    pub violations: usize,
    pub gradient_violations: usize,
    /// Trials that could not be evaluated (domain errors or no bracketed root).
    pub skipped: usize,
    pub max_residual: T,
    /// First violating pair `(x, y)`.
    pub witness: Option<(Vec<T>, Vec<T>)>,
}

impl<T: Scalar> CertificationReport<T> {
    fn new() -> Self {
        Self {
            checked: 0,
            violations: 0,
            gradient_violations: 0,
            skipped: 0,
            max_residual: T::zero(),
            witness: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.gradient_violations == 0
    }
}

fn rel_slack<T: Scalar>(v: T) -> T {
    T::lit(64.0) * T::epsilon() * T::one().max(v.abs())
}

/// Samples pairs `x >= y` and reports any `phi(x) < phi(y)`, plus gradients
/// with a negative component or no positive component.
pub fn certify_monotone<T: Scalar>(
    tf: &TradeFunction<T>,
    samples: usize,
    seed: u64,
    bounds: &SamplingBox<T>,
) -> CertificationReport<T> {
    let n = tf.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CertificationReport::<T>::new();
    for _ in 0..samples {
        let y = bounds.sample(&mut rng, n);
        let x: Vec<T> = y
            .iter()
            .map(|&v| {
                if rng.random_bool(0.5) {
                    v + (bounds.hi - v) * T::lit(rng.random::<f64>())
                } else {
                    v
                }
            })
            .collect();
        let (fx, fy, gy) = match (tf.eval(&x), tf.eval(&y), tf.gradient(&y)) {
            (Ok(fx), Ok(fy), Ok(gy)) => (fx, fy, gy),
            _ => {
                report.skipped += 1;
                continue;
            }
        };
        report.checked += 1;
        let drop = fy - fx;
        if drop > rel_slack(fy) {
            report.violations += 1;
            let normalized = drop / T::one().max(fy.abs());
            report.max_residual = report.max_residual.max(normalized);
            if report.witness.is_none() {
                report.witness = Some((x.clone(), y.clone()));
            }
        }
        let negative = gy.iter().any(|g| *g < T::zero() || !g.is_finite());
        let positive = gy.iter().any(|g| *g > T::zero());
        if negative || !positive {
            report.gradient_violations += 1;
            if report.witness.is_none() {
                report.witness = Some((y.clone(), y));
            }
        }
    }
    report
}

/// Finds `tau` with `phi(base + tau u) = target` for a positive direction `u`.
fn level_crossing<T: Scalar>(tf: &TradeFunction<T>, base: &[T], u: &[T], target: T) -> Option<Vec<T>> {
    let at = |tau: T| -> Vec<T> { base.iter().zip(u).map(|(&b, &d)| b + tau * d).collect() };
    let g = |tau: T| tf.eval(&at(tau)).ok().map(|v| v - target);
    let reach = base
        .iter()
        .zip(u)
        .map(|(&b, &d)| b / d)
        .fold(T::infinity(), T::min);
    let mut lo = -reach * (T::one() - T::lit(1e-9));
    let glo = g(lo)?;
    if glo > T::zero() {
        return None;
    }
    let mut hi = T::one();
    let mut ghi = g(hi)?;
    let mut expansions = 0;
    while ghi < T::zero() {
        lo = hi;
        hi = hi * T::lit(2.0);
        ghi = g(hi)?;
        expansions += 1;
        if expansions > 200 {
            return None;
        }
    }
    for _ in 0..300 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(at(lo + (hi - lo) / T::lit(2.0)))
}

/// Checks `phi(x) = phi(y) => <grad phi(y), x - y> = 0`.
///
/// Each trial samples `y` and an independent base point `z` in the box, then
/// locates `x` on the level set of `y` by bisection along a random positive
/// direction through `z`. The residual is
/// `|<grad phi(y), x - y>| / (|grad phi(y)| |x - y|)`; trials whose residual
/// exceeds `tol` are counted as violations.
pub fn certify_quasilinear_level_set<T: Scalar>(
    tf: &TradeFunction<T>,
    trials: usize,
    seed: u64,
    tol: T,
    bounds: &SamplingBox<T>,
) -> CertificationReport<T> {
    let n = tf.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CertificationReport::<T>::new();
    for _ in 0..trials {
        let y = bounds.sample(&mut rng, n);
        let z = bounds.sample(&mut rng, n);
        let u: Vec<T> = (0..n).map(|_| T::lit(0.1 + 0.9 * rng.random::<f64>())).collect();
        let (fy, gy) = match (tf.eval(&y), tf.gradient(&y)) {
            (Ok(f), Ok(g)) => (f, g),
            _ => {
                report.skipped += 1;
                continue;
            }
        };
        let Some(x) = level_crossing(tf, &z, &u, fy) else {
            report.skipped += 1;
            continue;
        };
        let d: Vec<T> = x.iter().zip(&y).map(|(&a, &b)| a - b).collect();
        let scale = norm2(&gy) * norm2(&d);
        if !(scale > T::zero()) {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        let residual = dot(&gy, &d).abs() / scale;
        if residual > report.max_residual {
            report.max_residual = residual;
        }
        if residual > tol {
            report.violations += 1;
            if report.witness.is_none() {
                report.witness = Some((x, y));
            }
        }
    }
    report
}

/// Endpoints `a`, `b` with `phi((a+b)/2)` compared to `(phi(a)+phi(b))/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MidpointWitness<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub phi_mid: T,
    pub phi_avg: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityProbe<T> {
    pub trials: usize,
    /// Midpoints above the chord.
    pub convexity_violations: usize,
    /// Midpoints below the chord.
    pub concavity_violations: usize,
    pub convexity_witness: Option<MidpointWitness<T>>,
    pub concavity_witness: Option<MidpointWitness<T>>,
}

/// Evaluates one midpoint test. Positive return: above the chord.
pub fn midpoint_gap<T: Scalar>(tf: &TradeFunction<T>, a: &[T], b: &[T]) -> Option<(T, T)> {
    let two = T::lit(2.0);
    let m: Vec<T> = a.iter().zip(b).map(|(&x, &y)| (x + y) / two).collect();
    let mid = tf.eval(&m).ok()?;
    let avg = (tf.eval(a).ok()? + tf.eval(b).ok()?) / two;
    Some((mid, avg))
}

/// Midpoint tests on `trials` pairs. Even trials draw two independent points;
/// odd trials pair `a` with the clamped ray point `lambda a`, `lambda` log-uniform
/// in `[1/4, 4]`.
pub fn probe_convexity<T: Scalar>(
    tf: &TradeFunction<T>,
    trials: usize,
    seed: u64,
    bounds: &SamplingBox<T>,
) -> ConvexityProbe<T> {
    let n = tf.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = ConvexityProbe {
        trials: 0,
        convexity_violations: 0,
        concavity_violations: 0,
        convexity_witness: None,
        concavity_witness: None,
    };
    for k in 0..trials {
        let a = bounds.sample(&mut rng, n);
        let b = if k % 2 == 0 {
            bounds.sample(&mut rng, n)
        } else {
            let scale = T::lit((16.0_f64.ln() * (rng.random::<f64>() - 0.5)).exp());
            a.iter().map(|&v| (v * scale).max(bounds.lo).min(bounds.hi)).collect()
        };
        let Some((mid, avg)) = midpoint_gap(tf, &a, &b) else {
            continue;
        };
        probe.trials += 1;
        let slack = rel_slack(avg);
        let witness = || MidpointWitness { a: a.clone(), b: b.clone(), phi_mid: mid, phi_avg: avg };
        if mid > avg + slack {
            probe.convexity_violations += 1;
            if probe.convexity_witness.is_none() {
                probe.convexity_witness = Some(witness());
            }
        } else if mid < avg - slack {
            probe.concavity_violations += 1;
            if probe.concavity_witness.is_none() {
                probe.concavity_witness = Some(witness());
            }
        }
    }
    probe
}
