//! JSON file formats for quadratics, nets and discrete projections.

use nalgebra::DMatrix;
use polyproj_core::oracle::{DiscreteProjection, FiniteBallNet};
use polyproj_core::polynomials::Quadratic;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `{dim, upper}` with the row-major upper triangle of the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticRecord {
    pub dim: usize,
    pub upper: Vec<f64>,
}

impl From<&Quadratic> for QuadraticRecord {
    fn from(q: &Quadratic) -> Self {
        Self {
            dim: q.dim(),
            upper: q.upper(),
        }
    }
}

impl TryFrom<&QuadraticRecord> for Quadratic {
    type Error = CliError;

    fn try_from(r: &QuadraticRecord) -> Result<Self, CliError> {
        Ok(Quadratic::from_upper(r.dim, &r.upper)?)
    }
}

/// Points of a net, base point first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetRecord {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
}

impl From<&FiniteBallNet> for NetRecord {
    fn from(net: &FiniteBallNet) -> Self {
        Self {
            dim: net.dim(),
            points: net.points().to_vec(),
        }
    }
}

impl TryFrom<&NetRecord> for FiniteBallNet {
    type Error = CliError;

    fn try_from(r: &NetRecord) -> Result<Self, CliError> {
        if r.points.iter().any(|p| p.len() != r.dim) {
            return Err(CliError::Usage("net points do not match its dimension".into()));
        }
        Ok(FiniteBallNet::from_points(r.points.clone())?)
    }
}

/// `basis[i][a]` is basis function `a` at point `i`; `weights[a][i]` is
/// coefficient functional `a` at point `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub net: NetRecord,
    pub basis: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(CliError::Usage(format!("{what}: ragged matrix")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(r, c, &flat))
}

impl ProjectionRecord {
    pub fn new(net: &FiniteBallNet, q: &DiscreteProjection) -> Self {
        Self {
            net: net.into(),
            basis: rows(q.basis()),
            weights: rows(q.weights()),
        }
    }

    /// Rebuilds the net and the projection, re-checking every invariant.
    pub fn load(&self) -> Result<(FiniteBallNet, DiscreteProjection), CliError> {
        let net = FiniteBallNet::try_from(&self.net)?;
        let q = DiscreteProjection::from_parts(matrix(&self.basis, "basis")?, matrix(&self.weights, "weights")?)?;
        if q.points() != net.len() {
            return Err(CliError::Usage("projection does not match its net".into()));
        }
        Ok((net, q))
    }
}
