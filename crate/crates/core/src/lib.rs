//! Rolling-window electricity market simulator: multi-interval economic
//! dispatch with energy storage, LMP/TLMP price extraction from dual
//! variables, lost-opportunity-cost settlement, and bid-perturbation
//! experiments.

pub mod dispatch;
pub mod forecast;
pub mod incentives;
pub mod market;
pub mod pricing;
pub mod settlement;
pub mod solver;

pub use market::{BidParameter, EsrSpec, GeneratorSpec, MarketConfig};
pub use solver::{LpProblem, LpSolution, LpStatus};
