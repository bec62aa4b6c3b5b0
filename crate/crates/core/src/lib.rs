//! Optimal trading against constant function market makers whose trade
//! function is a weighted quasi-arithmetic mean.
//!
//! The library is generic over the scalar type (`f32` or `f64`); the aliases at
//! the crate root fix `f64`, which is what the CLI and experiments use.

pub mod error;
pub mod experiments;
pub mod market;
pub mod notrade;
pub mod optimality;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod special;
pub mod trade_function;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TradeFunction64 = trade_function::TradeFunction<f64>;
pub type Pool64 = market::Pool<f64>;
pub type Trade64 = market::Trade<f64>;
pub type FeeSchedule64 = market::FeeSchedule<f64>;
pub type LinearUtility64 = market::LinearUtility<f64>;
pub type SolverOptions64 = solver::SolverOptions<f64>;
pub type SolveResult64 = solver::SolveResult<f64>;

pub type TradeFunction32 = trade_function::TradeFunction<f32>;
pub type Pool32 = market::Pool<f32>;
pub type Trade32 = market::Trade<f32>;
