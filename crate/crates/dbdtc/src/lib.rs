//! Distributionally balanced sampling designs over minimum tactical
//! configurations.
//!
//! A tactical configuration lists `M` samples of fixed size `n` over a
//! population of `N` units such that every unit appears in exactly `c`
//! samples, with `M = N / gcd(N, n)` and `c = n / gcd(N, n)`. Drawing one of
//! the samples uniformly at random yields a fixed-size design with equal
//! inclusion probabilities `n / N` exactly. This crate constructs such
//! configurations, optimizes them by simulated annealing to minimize the
//! expected energy distance between sample and population auxiliary-variable
//! distributions, and evaluates the resulting designs against standard
//! baselines (simple random sampling, ordered systematic sampling, the local
//! pivotal method, and an annealed circular-sequence design).

pub mod anneal;
pub mod circular;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod population;
pub mod report;
pub mod samplers;
pub mod scale;
pub mod seeds;
pub mod tactical;

pub use error::{Error, Result};
pub use geometry::{DistanceProvider, PhiVector};
pub use population::Population;
pub use tactical::TacticalConfiguration;
