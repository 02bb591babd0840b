//! 2-homogeneous polynomials `P(x) = xᵀAx` on Euclidean space.
//!
//! On the Euclidean ball the sup-norm of `P` is the spectral radius of `A`,
//! the symmetric bilinear form `P̌(x, y) = xᵀAy` has the same norm, and the
//! Lipschitz norm of `P` restricted to the ball is exactly twice the sup-norm.
//! All three are computed from spectra rather than by optimization.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{EuclideanVector, OrthogonalMatrix};

/// Tolerance for the Euclidean polarization identity `‖P̌‖ = ‖P‖`.
pub const POLARIZATION_TOL: f64 = 1e-10;

/// A quadratic form with a symmetric coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    a: DMatrix<f64>,
}

impl Quadratic {
    /// Builds the form with matrix `(A + Aᵀ)/2`.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        if a.nrows() == 0 {
            return Err(Error::InvalidDimension { dim: 0, min: 1 });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "coefficient matrix" });
        }
        let sym = (&a + a.transpose()) * 0.5;
        Ok(Self { a: sym })
    }

    /// Builds the form from the row-major upper triangle (diagonal included).
    pub fn from_upper(dim: usize, upper: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension { dim, min: 1 });
        }
        let expected = dim * (dim + 1) / 2;
        if upper.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: upper.len(),
            });
        }
        let mut a = DMatrix::zeros(dim, dim);
        let mut it = upper.iter();
        for i in 0..dim {
            for j in i..dim {
                let v = *it.next().unwrap_or(&0.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        Self::from_matrix(a)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::zeros(dim, dim))
    }

    /// `N(x) = |x|²`.
    pub fn norm_squared(dim: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Row-major upper triangle, the serialized form.
    pub fn upper(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                out.push(self.a[(i, j)]);
            }
        }
        out
    }

    pub fn eval(&self, x: &EuclideanVector) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(self.eval_slice(x.as_slice()))
    }

    /// Unchecked `xᵀAx`.
    pub fn eval_slice(&self, x: &[f64]) -> f64 {
        self.bilinear_slice(x, x)
    }

    /// Unchecked `xᵀAy`, the symmetric bilinear form of `P`.
    pub fn bilinear_slice(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for (j, yj) in y.iter().enumerate() {
                row += self.a[(i, j)] * yj;
            }
            acc += xi * row;
        }
        acc
    }

    /// Unchecked `∇P(x) = 2Ax` written into `out`.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += self.a[(i, j)] * xj;
            }
            *o = 2.0 * acc;
        }
    }

    /// Eigenvalues of `A`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = if is_diagonal(&self.a) {
            (0..self.dim()).map(|i| self.a[(i, i)]).collect()
        } else {
            nalgebra::SymmetricEigen::new(self.a.clone())
                .eigenvalues
                .iter()
                .copied()
                .collect()
        };
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `sup_{|x| ≤ 1} |P(x)|`, the spectral radius of `A`.
    pub fn sup_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0f64, |m, l| m.max(l.abs()))
    }

    /// Lipschitz norm of `P` restricted to the closed unit ball: `2‖P‖`.
    pub fn lip_norm_on_ball(&self) -> f64 {
        2.0 * self.sup_norm()
    }

    /// `sup_{|x|,|y| ≤ 1} |xᵀAy|`, i.e. the largest singular value of `A`.
    pub fn bilinear_norm(&self) -> f64 {
        if is_diagonal(&self.a) {
            return (0..self.dim()).fold(0.0f64, |m, i| m.max(self.a[(i, i)].abs()));
        }
        nalgebra::SVD::new(self.a.clone(), false, false)
            .singular_values
            .iter()
            .fold(0.0f64, |m, s| m.max(*s))
    }

    /// Compares `‖P‖` with `‖P̌‖`.
    ///
    /// In general `1 ≤ ‖P̌‖/‖P‖ ≤ 2²/2! = 2`; on a Hilbert space the ratio is
    /// exactly 1. A ratio outside `[1, 2]`, or away from 1 by more than
    /// `POLARIZATION_TOL`, is reported as an error.
    pub fn polarization_check(&self) -> Result<PolarizationCheck> {
        let sup_norm = self.sup_norm();
        let bilinear_norm = self.bilinear_norm();
        let ratio = if sup_norm == 0.0 && bilinear_norm == 0.0 {
            1.0
        } else {
            bilinear_norm / sup_norm
        };
        let slack = POLARIZATION_TOL;
        if !(1.0 - slack..=2.0 + slack).contains(&ratio) || (ratio - 1.0).abs() > slack {
            return Err(Error::Polarization { ratio });
        }
        Ok(PolarizationCheck {
            sup_norm,
            bilinear_norm,
            ratio,
        })
    }

    /// `P ∘ M`, with matrix `MᵀAM`.
    pub fn compose_rotation(&self, m: &OrthogonalMatrix) -> Result<Self> {
        if m.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: m.dim(),
            });
        }
        let q = m.matrix();
        Self::from_matrix(q.transpose() * &self.a * q)
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        Self::from_matrix(&self.a * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Self::from_matrix(&self.a + &other.a)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0)?)
    }

    /// Raises the degree to `k` via `(x, t) ↦ t^{k−2} P(x)`.
    pub fn homogenize(&self, k: u32) -> Result<HomogenizedPolynomial> {
        if k < 2 {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k as f64,
                reason: "degree must be at least 2",
            });
        }
        Ok(HomogenizedPolynomial {
            degree: k,
            base: self.clone(),
        })
    }
}

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0))
}

/// Result of [`Quadratic::polarization_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationCheck {
    pub sup_norm: f64,
    pub bilinear_norm: f64,
    pub ratio: f64,
}

/// The three diagonal forms `N`, `N₂` and `N_d` on `ℝ^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormForms {
    /// `x₁² + … + x_n²`
    pub full: Quadratic,
    /// `x₁² + x₂²`
    pub planar: Quadratic,
    /// `x₁² + … + x_d²`
    pub leading: Quadratic,
}

pub fn basis_n2_nd(dim: usize, d: usize) -> Result<NormForms> {
    if !(2..=dim).contains(&d) {
        return Err(Error::InvalidParameter {
            name: "d",
            value: d as f64,
            reason: "need 2 <= d <= dim",
        });
    }
    let head = |k: usize| -> Result<Quadratic> {
        let diag: Vec<f64> = (0..dim).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
        Quadratic::diagonal(&diag)
    };
    Ok(NormForms {
        full: head(dim)?,
        planar: head(2)?,
        leading: head(d)?,
    })
}

/// A degree-`k` form on `ℝ^dim × ℝ` of the shape `t^{k−2} P(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedPolynomial {
    degree: u32,
    base: Quadratic,
}

impl HomogenizedPolynomial {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn base(&self) -> &Quadratic {
        &self.base
    }

    pub fn eval(&self, x: &EuclideanVector, t: f64) -> Result<f64> {
        Ok(libm::pow(t, (self.degree - 2) as f64) * self.base.eval(x)?)
    }

    /// Setting `t = 1` recovers the original quadratic.
    pub fn dehomogenize(&self) -> &Quadratic {
        &self.base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{embed_so2_rotation, haar_sample_orthogonal, sample_ball, stream_rng};
    use core::f64::consts::PI;
    use rand_distr::{Distribution, StandardNormal};

    fn v(c: &[f64]) -> EuclideanVector {
        EuclideanVector::new(c.to_vec()).unwrap()
    }

    fn random_symmetric(dim: usize, rng: &mut crate::geometry::SampleRng) -> Quadratic {
        let m = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut *rng));
        Quadratic::from_matrix(m).unwrap()
    }

    #[test]
    fn evaluation() {
        let n = Quadratic::norm_squared(3).unwrap();
        assert_eq!(n.eval(&v(&[1.0, 2.0, 2.0])).unwrap(), 9.0);
        assert_eq!(n.eval(&v(&[0.0, 0.0, 0.0])).unwrap(), 0.0);
        let p = Quadratic::diagonal(&[1.0, -1.0]).unwrap();
        assert_eq!(p.eval(&v(&[3.0, 4.0])).unwrap(), -7.0);
        assert!(matches!(
            p.eval(&v(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn construction_symmetrizes() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let q = Quadratic::from_matrix(m).unwrap();
        assert_eq!(q.matrix(), &q.matrix().transpose());
        assert_eq!(q.matrix()[(0, 1)], 1.0);
        let mut bad = DMatrix::<f64>::identity(2, 2);
        bad[(0, 0)] = f64::INFINITY;
        assert!(Quadratic::from_matrix(bad).is_err());
    }

    #[test]
    fn upper_round_trip() {
        let q = Quadratic::from_upper(3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(q.matrix()[(2, 1)], 5.0);
        assert_eq!(q.upper(), [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(Quadratic::from_upper(3, &[1.0]).is_err());
    }

    #[test]
    fn sup_norm_is_spectral_radius() {
        assert_eq!(Quadratic::norm_squared(4).unwrap().sup_norm(), 1.0);
        assert_eq!(Quadratic::diagonal(&[2.0, -5.0]).unwrap().sup_norm(), 5.0);
    }

    #[test]
    fn lip_norm_examples() {
        assert_eq!(Quadratic::norm_squared(6).unwrap().lip_norm_on_ball(), 2.0);
        let p = Quadratic::diagonal(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.lip_norm_on_ball(), 2.0);
    }

    #[test]
    fn polarization_is_an_equality() {
        let c = Quadratic::norm_squared(3).unwrap().polarization_check().unwrap();
        assert_eq!(c.ratio, 1.0);
        let c = Quadratic::diagonal(&[1.0, -1.0]).unwrap().polarization_check().unwrap();
        assert_eq!((c.sup_norm, c.bilinear_norm, c.ratio), (1.0, 1.0, 1.0));
        let mut rng = stream_rng(1, 0);
        for dim in 1..7 {
            let c = random_symmetric(dim, &mut rng).polarization_check().unwrap();
            assert!((c.ratio - 1.0).abs() < POLARIZATION_TOL);
        }
        assert_eq!(Quadratic::zero(3).unwrap().polarization_check().unwrap().ratio, 1.0);
    }

    #[test]
    fn rotation_composition() {
        let mut rng = stream_rng(2, 0);
        let p = random_symmetric(4, &mut rng);
        let id = OrthogonalMatrix::identity(4).unwrap();
        assert_eq!(p.compose_rotation(&id).unwrap(), p);
        let m = haar_sample_orthogonal(4, &mut rng).unwrap();
        let n = Quadratic::norm_squared(4).unwrap().compose_rotation(&m).unwrap();
        assert!((n.matrix() - DMatrix::<f64>::identity(4, 4)).norm() < 1e-12);
        let pm = p.compose_rotation(&m).unwrap();
        for _ in 0..50 {
            let x = v(&sample_ball(4, &mut rng));
            let lhs = pm.eval(&x).unwrap();
            let rhs = p.eval(&m.apply(&x).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
        let q = Quadratic::diagonal(&[1.0, 0.0]).unwrap();
        let r = q.compose_rotation(&embed_so2_rotation(2, PI / 2.0).unwrap()).unwrap();
        assert!((r.matrix() - DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0]))).norm() < 1e-15);
    }

    #[test]
    fn norm_forms() {
        let f = basis_n2_nd(5, 3).unwrap();
        assert_eq!(f.leading.eval(&v(&[1.0; 5])).unwrap(), 3.0);
        let tail = f.full.sub(&f.leading).unwrap();
        assert_eq!(tail.eval(&v(&[0.0, 0.0, 0.0, 1.0, 1.0])).unwrap(), 2.0);
        assert_eq!(f.planar.eval(&v(&[0.6, 0.8, 0.0, 0.0, 0.0])).unwrap(), 1.0);
        assert!(basis_n2_nd(5, 1).is_err());
        assert!(basis_n2_nd(5, 6).is_err());
    }

    #[test]
    fn homogenization() {
        let n2 = Quadratic::norm_squared(2).unwrap();
        let h = n2.homogenize(3).unwrap();
        assert_eq!(h.eval(&v(&[1.0, 1.0]), 2.0).unwrap(), 4.0);
        let h2 = n2.homogenize(2).unwrap();
        assert_eq!(h2.eval(&v(&[0.3, 0.4]), 7.0).unwrap(), n2.eval(&v(&[0.3, 0.4])).unwrap());
        assert_eq!(h.dehomogenize(), &n2);
        assert!(n2.homogenize(1).is_err());
    }

    #[test]
    fn sup_norm_is_rotation_invariant() {
        let mut rng = stream_rng(4, 0);
        for dim in 2..8 {
            let p = random_symmetric(dim, &mut rng);
            let m = haar_sample_orthogonal(dim, &mut rng).unwrap();
            let r = p.compose_rotation(&m).unwrap();
            assert!((r.sup_norm() - p.sup_norm()).abs() < 1e-10);
        }
    }
}
