//! Error type shared by every module of the core crate.

use thiserror::Error;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: must be at least {min}")]
    InvalidDimension { dim: usize, min: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid index pair ({i}, {j}) for dimension {dim}: need i < j < dim")]
    InvalidIndexPair { i: usize, j: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point of norm {norm} lies outside the closed unit ball")]
    OutsideBall { norm: f64 },

    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite entry in {what}")]
    NonFinite { what: &'static str },

    #[error("matrix is not orthogonal: |M^T M - I|_F = {deviation}")]
    NotOrthogonal { deviation: f64 },

    #[error("gradient disagrees with finite differences (residual {residual})")]
    InconsistentGradient { residual: f64 },

    #[error("angle profile leaves its admissible band at theta = {theta}")]
    ProfileBand { theta: f64 },

    #[error("angular mean {eta} outside [{lower}, {upper}]")]
    EtaBand { eta: f64, lower: f64, upper: f64 },

    #[error("polarization ratio {ratio} outside the admissible range")]
    Polarization { ratio: f64 },

    #[error("weights are not balanced: sum = {sum}")]
    Unbalanced { sum: f64 },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("linear program did not converge within {iterations} pivots")]
    IterationLimit { iterations: usize },

    #[error("projection is not idempotent: max deviation {deviation}")]
    NotIdempotent { deviation: f64 },

    #[error("restricted basis has rank {rank} < {expected} on the net")]
    RankDeficient { rank: usize, expected: usize },

    #[error("point set is not invariant under the group")]
    NotInvariant,

    #[error("net would contain {points} points, limit is {limit}")]
    ResourceLimit { points: usize, limit: usize },

    #[error("empty {what}")]
    Empty { what: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
