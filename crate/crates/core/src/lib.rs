pub mod baseline;
pub mod cdf;
pub mod distribution;
pub mod error;
pub mod metrics;
pub mod mimo;
pub mod output;
pub mod quantile;
pub mod ris;
pub mod rng;
pub mod sampling;
pub mod selftest;
pub mod solver;
pub mod special;
pub mod stats;

pub use distribution::{Component, GeneralizedChiSquare, NoncentralChiSquare, ReliabilityTarget};
pub use error::{Error, Result};
pub use solver::{BoundMethod, BoundReport, SolverConfig, Tolerance};
