use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{FeeSchedule, LinearUtility, Pool};
use crate::solver::SolverOptions;
use crate::trade_function::{MeanGenerator, TradeFunction, WeightVector};

/// Trade function selector, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TradeFunctionSpec {
    Arithmetic,
    Geometric,
    /// Quasi-arithmetic mean with generator `y^p ln y`.
    PowerLog {
        p: f64,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// Quasi-arithmetic mean with the shifted generator `(y+c)^p ln(y+c) + 1/(e p)`.
    ExpShift {
        p: f64,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// Quasi-arithmetic mean with generator `y + e^y`.
    LinearExp {
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// Weighted geometric mean through the `ln` generator.
    Log {
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
}

impl TradeFunctionSpec {
    /// Short names accepted on the command line: `am`, `gm`, `qm`, or a kind name.
    pub fn from_short(name: &str) -> Result<Self> {
        match name {
            "am" | "arithmetic" => Ok(Self::Arithmetic),
            "gm" | "geometric" => Ok(Self::Geometric),
            "qm" | "power_log" => Ok(Self::PowerLog { p: 2.0, weights: None }),
            "exp_shift" => Ok(Self::ExpShift { p: 2.0, weights: None }),
            "linear_exp" => Ok(Self::LinearExp { weights: None }),
            "log" => Ok(Self::Log { weights: None }),
            other => Err(Error::Config(format!("unknown trade function '{other}' (expected am, gm, qm, exp_shift, linear_exp or log)"))),
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            Self::Arithmetic => "am",
            Self::Geometric => "gm",
            Self::PowerLog { .. } => "qm",
            Self::ExpShift { .. } => "exp_shift",
            Self::LinearExp { .. } => "linear_exp",
            Self::Log { .. } => "log",
        }
    }

    pub fn build(&self, n: usize) -> Result<TradeFunction<f64>> {
        let weights = |w: &Option<Vec<f64>>| -> Result<WeightVector<f64>> {
            match w {
                Some(v) if v.len() != n => {
                    Err(Error::Config(format!("trade function has {} weights for {n} assets", v.len())))
                }
                Some(v) => WeightVector::new(v.clone()),
                None => Ok(WeightVector::equal(n)),
            }
        };
        match self {
            Self::Arithmetic => TradeFunction::arithmetic(n),
            Self::Geometric => TradeFunction::geometric(n),
            Self::PowerLog { p, weights: w } => TradeFunction::quasi_arithmetic(MeanGenerator::PowerLog { p: *p }, weights(w)?),
            Self::ExpShift { p, weights: w } => TradeFunction::quasi_arithmetic(MeanGenerator::ExpShift { p: *p }, weights(w)?),
            Self::LinearExp { weights: w } => TradeFunction::quasi_arithmetic(MeanGenerator::LinearExp, weights(w)?),
            Self::Log { weights: w } => TradeFunction::quasi_arithmetic(MeanGenerator::Log, weights(w)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeeSpec {
    Uniform(f64),
    PerAsset(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    pub reserves: Vec<f64>,
    /// Discount rates `gamma_i`, one number or one per asset.
    pub fees: FeeSpec,
    pub trade_function: TradeFunctionSpec,
    /// Index of the price-normalizing asset; the last asset when omitted.
    #[serde(default)]
    pub numeraire: Option<usize>,
}

/// `pi = market prices` with `pi[t_index] *= t` and `pi[s_index] *= s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UtilityConfig {
    pub t_index: usize,
    pub s_index: usize,
    pub t: f64,
    pub s: f64,
}

impl Default for UtilityConfig {
    fn default() -> Self {
        Self { t_index: 0, s_index: 1, t: 1.0, s: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep1dConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for Sweep1dConfig {
    fn default() -> Self {
        Self { t_min: 0.5, t_max: 2.0, points: 151 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep2dConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub s_points: usize,
}

impl Default for Sweep2dConfig {
    fn default() -> Self {
        Self { t_min: 0.5, t_max: 2.0, t_points: 61, s_min: 0.5, s_max: 2.0, s_points: 61 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub constraint_tol: f64,
    pub stationarity_tol: f64,
    pub multistart_count: usize,
    pub complementarity_cleanup: bool,
    pub polish: bool,
    pub seed: u64,
    pub y_cap_multiple: f64,
    pub barrier_shift: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::<f64>::default();
        Self {
            max_outer_iterations: d.max_outer_iterations,
            max_inner_iterations: d.max_inner_iterations,
            initial_penalty: d.initial_penalty,
            penalty_growth: d.penalty_growth,
            constraint_tol: d.constraint_tol,
            stationarity_tol: d.stationarity_tol,
            multistart_count: d.multistart_count,
            complementarity_cleanup: d.complementarity_cleanup,
            polish: d.polish,
            seed: d.seed,
            y_cap_multiple: d.y_cap_multiple,
            barrier_shift: d.barrier_shift,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions<f64> {
        SolverOptions {
            max_outer_iterations: self.max_outer_iterations,
            max_inner_iterations: self.max_inner_iterations,
            initial_penalty: self.initial_penalty,
            penalty_growth: self.penalty_growth,
            constraint_tol: self.constraint_tol,
            stationarity_tol: self.stationarity_tol,
            multistart_count: self.multistart_count,
            complementarity_cleanup: self.complementarity_cleanup,
            polish: self.polish,
            seed: self.seed,
            y_cap_multiple: self.y_cap_multiple,
            barrier_shift: self.barrier_shift,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub resolution: f64,
    pub y_cap_multiple: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { resolution: 1e-3, y_cap_multiple: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem for every artifact; the trade function's short name when empty.
    pub prefix: String,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), prefix: String::new(), svg: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub pool: PoolConfig,
    #[serde(default)]
    pub utility: UtilityConfig,
    #[serde(default)]
    pub sweep1d: Sweep1dConfig,
    #[serde(default)]
    pub sweep2d: Sweep2dConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// `||x - y||_inf` at or below which a solver trade counts as no trade.
    #[serde(default = "default_no_trade_threshold")]
    pub no_trade_threshold: f64,
    #[serde(default = "default_verify_tol")]
    pub verify_tol: f64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_no_trade_threshold() -> f64 {
    1e-4
}

fn default_verify_tol() -> f64 {
    1e-5
}

fn check_range(name: &str, lo: f64, hi: f64, points: usize) -> Result<()> {
    if !(lo > 0.0 && hi.is_finite() && lo < hi) {
        return Err(Error::Config(format!("{name} range must satisfy 0 < min < max < inf, got [{lo}, {hi}]")));
    }
    if points < 2 {
        return Err(Error::Config(format!("{name} needs at least 2 grid points, got {points}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.pool.reserves.len();
        if n == 0 {
            return Err(Error::Config("pool needs at least one asset".into()));
        }
        if self.utility.t_index >= n || self.utility.s_index >= n {
            return Err(Error::Config(format!("perturbed indices must be below {n}")));
        }
        if !(self.utility.t > 0.0 && self.utility.s > 0.0) {
            return Err(Error::Config("t and s must be positive".into()));
        }
        let s1 = &self.sweep1d;
        check_range("sweep1d t", s1.t_min, s1.t_max, s1.points)?;
        let s2 = &self.sweep2d;
        check_range("sweep2d t", s2.t_min, s2.t_max, s2.t_points)?;
        check_range("sweep2d s", s2.s_min, s2.s_max, s2.s_points)?;
        if !(self.no_trade_threshold > 0.0) || !(self.verify_tol > 0.0) {
            return Err(Error::Config("no_trade_threshold and verify_tol must be positive".into()));
        }
        if !(self.oracle.resolution > 0.0 && self.oracle.y_cap_multiple > 0.0) {
            return Err(Error::Config("oracle resolution and y_cap_multiple must be positive".into()));
        }
        self.solver.options().validate()?;
        self.pool()?;
        Ok(())
    }

    pub fn pool(&self) -> Result<Pool<f64>> {
        let n = self.pool.reserves.len();
        let fees = match &self.pool.fees {
            FeeSpec::Uniform(g) => FeeSchedule::uniform(*g, n)?,
            FeeSpec::PerAsset(v) => {
                if v.len() != n {
                    return Err(Error::Config(format!("{} fees for {n} assets", v.len())));
                }
                FeeSchedule::new(v.clone())?
            }
        };
        let tf = self.pool.trade_function.build(n)?;
        let pool = Pool::new(self.pool.reserves.clone(), fees, tf)?;
        match self.pool.numeraire {
            Some(k) => pool.with_numeraire(k),
            None => Ok(pool),
        }
    }

    /// Market prices of `pool` with the configured perturbations applied.
    pub fn utility_at(&self, pool: &Pool<f64>, t: f64, s: Option<f64>) -> Result<LinearUtility<f64>> {
        let mut pi = pool.prices()?;
        pi[self.utility.t_index] *= t;
        if let Some(s) = s {
            pi[self.utility.s_index] *= s;
        }
        LinearUtility::new(pi)
    }

    pub fn stem(&self) -> String {
        if self.output.prefix.is_empty() {
            self.pool.trade_function.short_name().to_string()
        } else {
            self.output.prefix.clone()
        }
    }
}
