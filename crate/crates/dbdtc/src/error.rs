//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("column '{name}' not found in header")]
    UnknownColumn { name: String },
    #[error("non-numeric value '{value}' at data row {row}, column '{column}'")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("no usable rows remain after filtering")]
    EmptyPopulation,
    #[error("population must have at least one unit and one auxiliary variable")]
    DegeneratePopulation,
    #[error("duplicate unit id '{id}'")]
    DuplicateId { id: String },
    #[error("sample size {sample_size} invalid for population of size {population_size}")]
    InvalidSampleSize {
        sample_size: usize,
        population_size: usize,
    },
    #[error("cyclic pattern must have length {expected_len} with exactly {expected_ones} ones")]
    MalformedCyclicPattern {
        expected_len: usize,
        expected_ones: usize,
    },
    #[error("permutation is not a bijection on 0..{n}")]
    InvalidPermutation { n: usize },
    #[error(
        "swap of unit {unit_u} (column {column_a}) with unit {unit_v} (column {column_b}) \
         is not admissible"
    )]
    InadmissibleSwap {
        column_a: usize,
        column_b: usize,
        unit_u: u32,
        unit_v: u32,
    },
    #[error("inclusion probabilities must sum to an integer; got {sum}")]
    NonIntegralProbabilitySum { sum: f64 },
    #[error("inclusion probability {value} at index {index} outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("sample generator returned {actual} units, expected {expected}")]
    WrongSampleSize { expected: usize, actual: usize },
    #[error("neighbor group size {k} invalid for sample of size {sample_size}")]
    InvalidNeighborCount { k: usize, sample_size: usize },
    #[error("zero inclusion probability on sampled unit {unit}")]
    ZeroInclusionProbability { unit: u32 },
    #[error("design support is empty")]
    EmptySupport,
    #[error("invalid annealing schedule: {reason}")]
    InvalidSchedule { reason: String },
    #[error("worker count {workers} exceeds pair budget {budget}")]
    WorkerBudgetExceeded { workers: usize, budget: usize },
    #[error("cached energies drifted {relative:.3e} relative from recomputed values")]
    EnergyDrift { relative: f64 },
    #[error("malformed configuration file at line {line}: {reason}")]
    MalformedConfigFile { line: usize, reason: String },
    #[error("compression size {m_star} outside 1..={max}")]
    CompressionSizeOutOfRange { m_star: usize, max: usize },
    #[error("stratum '{label}': sample size {sample_size} exceeds stratum size {stratum_size}")]
    StratumSampleTooLarge {
        label: String,
        sample_size: usize,
        stratum_size: usize,
    },
    #[error("population carries no strata labels")]
    MissingStrata,
    #[error("stratum '{label}' not present in the population")]
    UnknownStratum { label: String },
    #[error("order column {column} out of range for {dims} auxiliary variables")]
    OrderColumnOutOfRange { column: usize, dims: usize },
    #[error("target '{name}' has {actual} values, population has {expected}")]
    TargetLengthMismatch {
        name: String,
        expected: usize,
        actual: usize,
    },
    #[error("unknown design '{0}'")]
    UnknownDesign(String),
}
