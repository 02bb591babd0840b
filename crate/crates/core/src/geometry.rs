//! Euclidean vectors and elements of the orthogonal group `O_n`.
//!
//! Besides Haar sampling this module carries the handful of concrete group
//! elements used by the invariance argument: coordinate reflections,
//! coordinate swaps, and planar rotations embedded as `ω ⊕ 1_{n-2}`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Tolerance on `|MᵀM − I|_F` accepted for an orthogonal matrix.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Generator used for every stochastic routine in the crate.
pub type SampleRng = ChaCha8Rng;

/// Independent, reproducible stream `stream` of the generator seeded by `seed`.
///
/// ChaCha streams never overlap, so shards of a computation can draw from
/// `stream_rng(seed, 0)`, `stream_rng(seed, 1)`, ... and reduce
/// deterministically.
pub fn stream_rng(seed: u64, stream: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A finite point of `ℝⁿ`, `n ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanVector(Vec<f64>);

impl EuclideanVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension { dim: 0, min: 1 });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { what: "vector" });
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(alloc::vec![0.0; dim])
    }

    /// The `k`-th standard basis vector (zero-based).
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, dim });
        }
        let mut v = alloc::vec![0.0; dim];
        v[k] = 1.0;
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl AsRef<[f64]> for EuclideanVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean norm of a slice, scaled to avoid overflow.
pub fn norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * libm::sqrt(s)
}

/// An element of `O_n`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    m: DMatrix<f64>,
}

impl OrthogonalMatrix {
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension { dim, min: 1 });
        }
        Ok(Self {
            m: DMatrix::identity(dim, dim),
        })
    }

    /// Wraps `m` after checking `|MᵀM − I|_F ≤ 1e-10`.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidDimension { dim: 0, min: 1 });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "matrix" });
        }
        let out = Self { m };
        let deviation = out.orthogonality_defect();
        if deviation > ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal { deviation });
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `|MᵀM − I|_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        (self.m.transpose() * &self.m - DMatrix::<f64>::identity(n, n)).norm()
    }

    pub fn determinant(&self) -> f64 {
        self.m.clone().determinant()
    }

    /// The inverse, which for an orthogonal matrix is the transpose.
    pub fn inverse(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    /// The product `self · other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            m: &self.m * &other.m,
        })
    }

    /// `Mx`.
    pub fn apply(&self, x: &EuclideanVector) -> Result<EuclideanVector> {
        check_dim(self.dim(), x.dim())?;
        let mut out = alloc::vec![0.0; self.dim()];
        self.apply_into(x.as_slice(), &mut out);
        Ok(EuclideanVector(out))
    }

    /// Unchecked `out = Mx` for hot loops; lengths must equal `dim()`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += self.m[(i, j)] * xj;
            }
            *o = acc;
        }
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// Draws a Haar-distributed element of `O_dim`.
///
/// Gaussian matrix, Householder QR, then each column of `Q` is multiplied by
/// the sign of the matching diagonal entry of `R`. Without that sign fix the
/// distribution of `Q` depends on the QR convention and is not Haar.
pub fn haar_sample_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<OrthogonalMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension { dim, min: 1 });
    }
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..dim {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    Ok(OrthogonalMatrix { m: q })
}

/// Uniform angle on `[0, 2π)`, i.e. a Haar sample of `SO_2`.
pub fn sample_so2<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let theta = 2.0 * PI * rng.random::<f64>();
    // 2π·u can round up to 2π for u just below 1
    if theta >= 2.0 * PI {
        0.0
    } else {
        theta
    }
}

/// Reflection negating coordinate `k` (zero-based).
pub fn coordinate_reflection(dim: usize, k: usize) -> Result<OrthogonalMatrix> {
    if k >= dim {
        return Err(Error::IndexOutOfRange { index: k, dim });
    }
    let mut m = DMatrix::identity(dim, dim);
    m[(k, k)] = -1.0;
    Ok(OrthogonalMatrix { m })
}

/// Permutation matrix exchanging coordinates `i < j` (zero-based).
pub fn coordinate_swap(dim: usize, i: usize, j: usize) -> Result<OrthogonalMatrix> {
    if !(i < j && j < dim) {
        return Err(Error::InvalidIndexPair { i, j, dim });
    }
    let mut m = DMatrix::identity(dim, dim);
    m[(i, i)] = 0.0;
    m[(j, j)] = 0.0;
    m[(i, j)] = 1.0;
    m[(j, i)] = 1.0;
    Ok(OrthogonalMatrix { m })
}

/// Rotation by `theta` in the plane of the first two coordinates, identity on
/// the remaining `dim − 2`.
pub fn embed_so2_rotation(dim: usize, theta: f64) -> Result<OrthogonalMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, min: 2 });
    }
    if !theta.is_finite() {
        return Err(Error::NonFinite { what: "angle" });
    }
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    let mut m = DMatrix::identity(dim, dim);
    m[(0, 0)] = c;
    m[(0, 1)] = -s;
    m[(1, 0)] = s;
    m[(1, 1)] = c;
    Ok(OrthogonalMatrix { m })
}

/// Applies the planar rotation by `theta` to `(x, y)`.
#[inline]
pub fn rotate_plane(theta_sin: f64, theta_cos: f64, x: f64, y: f64) -> (f64, f64) {
    (theta_cos * x - theta_sin * y, theta_sin * x + theta_cos * y)
}

/// Uniform point of the closed unit ball in `ℝ^dim`.
pub fn sample_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut x = sample_sphere(dim, rng);
    let r = libm::pow(rng.random::<f64>(), 1.0 / dim as f64);
    x.iter_mut().for_each(|v| *v *= r);
    x
}

/// Uniform point of the unit sphere in `ℝ^dim`.
pub fn sample_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&x);
        if n > 1e-300 {
            return x.into_iter().map(|v| v / n).collect();
        }
    }
}
