//! Log-Laplace stochastic volatility: special functions, the conditional
//! model, simulation, estimation, forecasting and the study pipelines built
//! on top of them.

pub mod estimate;
pub mod forecast;
pub mod ingest;
pub mod model;
pub mod quad;
pub mod series;
pub mod simulate;
pub mod study;
pub mod specfun;

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
mod oracle;
