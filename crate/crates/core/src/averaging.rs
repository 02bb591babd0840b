//! Averages over the orthogonal group and over planar rotations.
//!
//! Monte-Carlo function averages `f̃ = ∫ f∘ω dμ(ω)`, the closed form of the
//! planar-rotation average of `ψ₁₂`, the angular mean `η` of the profile, and
//! the reduction of a quadratic to the two-parameter family
//! `α·N₂ + β·(N − N₂)` reached by invariance.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{
    haar_sample_orthogonal, norm, rotate_plane, sample_ball, sample_so2, stream_rng, EuclideanVector,
    OrthogonalMatrix,
};
use crate::polynomials::Quadratic;
use crate::witness::profile::DELTA_MAX;
use crate::witness::{rho_prime_unchecked, rho_unchecked, SmoothFunction, SmoothedAngleProfile, Witness, WitnessParams, BALL_SLACK};

/// Largest `m · n²` for which Haar samples of `O_n` are kept in memory.
pub const MAX_STORED_ENTRIES: usize = 50_000_000;

/// Rounding slack on the η band.
pub const ETA_BAND_SLACK: f64 = 1e-15;

/// Sum by recursive halving; the result depends only on the slice, not on
/// how work is split.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Group over which a function is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingGroup {
    /// Haar measure on `O_n`.
    Orthogonal,
    /// Rotations of the `(x₁, x₂)` plane, identity on the other coordinates.
    PlanarRotations,
}

#[derive(Debug, Clone)]
enum GroupSamples {
    Orthogonal(Vec<OrthogonalMatrix>),
    /// `(sin θ, cos θ)`.
    Planar(Vec<(f64, f64)>),
}

/// Mean of a Monte-Carlo average at one point together with its standard
/// error `sample std / √m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McValue {
    pub mean: f64,
    /// Infinite when `m = 1`.
    pub stderr: f64,
}

/// `x ↦ (1/m) Σ_s f(ω_s x)` for a fixed family of `m` group samples.
#[derive(Debug, Clone)]
pub struct AveragedFunction<F> {
    f: F,
    dim: usize,
    samples: GroupSamples,
}

/// Draws `m` Haar samples of `group` acting on `ℝ^dim` from `seed` and
/// returns the averaged evaluator of `f`.
pub fn average_function_mc<F>(f: F, dim: usize, group: AveragingGroup, m: usize, seed: u64) -> Result<AveragedFunction<F>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if m == 0 {
        return Err(Error::Empty { what: "sample set" });
    }
    let mut rng = stream_rng(seed, 0);
    let samples = match group {
        AveragingGroup::Orthogonal => {
            if dim == 0 {
                return Err(Error::InvalidDimension { dim, min: 1 });
            }
            if m.saturating_mul(dim * dim) > MAX_STORED_ENTRIES {
                return Err(Error::ResourceLimit {
                    points: m,
                    limit: MAX_STORED_ENTRIES / (dim * dim),
                });
            }
            let mut v = Vec::with_capacity(m);
            for _ in 0..m {
                v.push(haar_sample_orthogonal(dim, &mut rng)?);
            }
            GroupSamples::Orthogonal(v)
        }
        AveragingGroup::PlanarRotations => {
            if dim < 2 {
                return Err(Error::InvalidDimension { dim, min: 2 });
            }
            GroupSamples::Planar(
                (0..m)
                    .map(|_| {
                        let t = sample_so2(&mut rng);
                        (libm::sin(t), libm::cos(t))
                    })
                    .collect(),
            )
        }
    };
    Ok(AveragedFunction { f, dim, samples })
}

impl<F: Fn(&[f64]) -> Result<f64>> AveragedFunction<F> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_count(&self) -> usize {
        match &self.samples {
            GroupSamples::Orthogonal(v) => v.len(),
            GroupSamples::Planar(v) => v.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<McValue> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut y = x.to_vec();
        let values: Vec<f64> = match &self.samples {
            GroupSamples::Orthogonal(v) => v
                .iter()
                .map(|w| {
                    w.apply_into(x, &mut y);
                    (self.f)(&y)
                })
                .collect::<Result<_>>()?,
            GroupSamples::Planar(v) => v
                .iter()
                .map(|&(s, c)| {
                    let (a, b) = rotate_plane(s, c, x[0], x[1]);
                    y[0] = a;
                    y[1] = b;
                    (self.f)(&y)
                })
                .collect::<Result<_>>()?,
        };
        let m = values.len() as f64;
        let mean = pairwise_sum(&values) / m;
        let stderr = if values.len() < 2 {
            f64::INFINITY
        } else {
            let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            libm::sqrt(pairwise_sum(&sq) / (m - 1.0) / m)
        };
        Ok(McValue { mean, stderr })
    }
}

/// The angular mean `η = (2/π) ∫_0^{π/2} τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaEstimate {
    pub value: f64,
    /// Difference between the quadrature at `nodes` and `2·nodes`, plus a
    /// rounding allowance.
    pub error_bound: f64,
    pub delta: f64,
}

/// Composite Simpson quadrature of `τ`, each polynomial piece integrated on
/// its own so the rule is exact up to rounding; checks
/// `π/72 − δ ≤ η ≤ π/72`.
pub fn compute_eta(tau: &SmoothedAngleProfile, nodes: usize) -> Result<EtaEstimate> {
    if nodes < 64 {
        return Err(Error::InvalidParameter {
            name: "nodes",
            value: nodes as f64,
            reason: "quadrature needs at least 64 nodes",
        });
    }
    let coarse = simpson_pieces(tau, nodes);
    let fine = simpson_pieces(tau, 2 * nodes);
    let value = 2.0 / PI * coarse;
    let error_bound = 2.0 / PI * (coarse - fine).abs() + ETA_BAND_SLACK;
    let delta = tau.delta();
    let (lower, upper) = (DELTA_MAX - delta, DELTA_MAX);
    if value > upper + ETA_BAND_SLACK || value < lower - ETA_BAND_SLACK {
        return Err(Error::EtaBand {
            eta: value,
            lower,
            upper,
        });
    }
    Ok(EtaEstimate {
        value,
        error_bound,
        delta,
    })
}

fn simpson_pieces(tau: &SmoothedAngleProfile, nodes: usize) -> f64 {
    let pieces = tau.pieces();
    let per_piece = (nodes / pieces.len()).max(2);
    let intervals = per_piece + per_piece % 2;
    let mut parts = Vec::with_capacity(pieces.len());
    for p in pieces {
        let h = (p.end - p.start) / intervals as f64;
        let mut acc = p.value(p.start) + p.value(p.end);
        for k in 1..intervals {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * p.value(p.start + k as f64 * h);
        }
        parts.push(acc * h / 3.0);
    }
    pairwise_sum(&parts)
}

/// `ψ̃(x) = ϱ(√(x₁² + x₂²))·η`, the planar-rotation average of `ψ₁₂`.
pub fn so2_average_psi_closed(x: &EuclideanVector, params: &WitnessParams, eta: f64) -> Result<f64> {
    let x = x.as_slice();
    if x.len() < 2 {
        return Err(Error::InvalidDimension { dim: x.len(), min: 2 });
    }
    let r = norm(x);
    if r > 1.0 + BALL_SLACK {
        return Err(Error::OutsideBall { norm: r });
    }
    Ok(rho_unchecked(libm::hypot(x[0], x[1]), params.eps()) * eta)
}

/// `x ↦ η·N₂(x) − ψ̃(x)` on `ℝⁿ`; its Lipschitz constant is `4εη`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedWitnessGap {
    pub dim: usize,
    pub eps: f64,
    pub eta: f64,
}

impl AveragedWitnessGap {
    pub fn new(params: &WitnessParams, eta: f64) -> Self {
        Self {
            dim: params.n(),
            eps: params.eps(),
            eta,
        }
    }

    /// `4εη`.
    pub fn lip_bound(&self) -> f64 {
        4.0 * self.eps * self.eta
    }
}

impl SmoothFunction for AveragedWitnessGap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let r = libm::hypot(x[0], x[1]);
        Ok(self.eta * (r * r - rho_unchecked(r, self.eps)))
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = 0.0);
        let r = libm::hypot(x[0], x[1]);
        if r == 0.0 {
            return Ok(());
        }
        // η·(2r − ϱ'(r)) along x/r, with 2r − ϱ'(r) = 4ε outside r = 2ε
        let s = self.eta * (2.0 - rho_prime_unchecked(r, self.eps) / r);
        out[0] = s * x[0];
        out[1] = s * x[1];
        Ok(())
    }
}

/// The coefficients of the nearest member of `α·N₂ + β·(N − N₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
    /// Frobenius norm of the part of the matrix outside the family.
    pub residual: f64,
    /// Set when `n < 3`: there is no `β` block and `β` is reported as 0.
    pub beta_block_empty: bool,
}

/// Least-squares projection of `q` onto `span{diag(1,1,0,…), diag(0,0,1,…)}`.
pub fn extract_alpha_beta(q: &Quadratic) -> AlphaBeta {
    let a = q.matrix();
    let n = q.dim();
    let lead = n.min(2);
    let alpha = (0..lead).map(|i| a[(i, i)]).sum::<f64>() / lead as f64;
    let beta_block_empty = n < 3;
    let beta = if beta_block_empty {
        0.0
    } else {
        (2..n).map(|i| a[(i, i)]).sum::<f64>() / (n - 2) as f64
    };
    let mut sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            let fit = match (i == j, i < 2) {
                (false, _) => 0.0,
                (true, true) => alpha,
                (true, false) => beta,
            };
            let e = a[(i, j)] - fit;
            sq += e * e;
        }
    }
    AlphaBeta {
        alpha,
        beta,
        residual: libm::sqrt(sq),
        beta_block_empty,
    }
}

/// The function `x ↦ ψ₁₂(ωx)`.
#[derive(Debug, Clone, Copy)]
pub struct RotatedWitness<'a> {
    witness: &'a Witness,
    rotation: &'a OrthogonalMatrix,
}

impl<'a> RotatedWitness<'a> {
    pub fn new(witness: &'a Witness, rotation: &'a OrthogonalMatrix) -> Result<Self> {
        if rotation.dim() != witness.params().n() {
            return Err(Error::DimensionMismatch {
                expected: witness.params().n(),
                found: rotation.dim(),
            });
        }
        Ok(Self { witness, rotation })
    }

    pub fn dim(&self) -> usize {
        self.rotation.dim()
    }

    pub fn rotation(&self) -> &OrthogonalMatrix {
        self.rotation
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut y = alloc::vec![0.0; x.len()];
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        self.rotation.apply_into(x, &mut y);
        self.witness.psi_ij(&y, 0, 1)
    }
}

/// A linear map from rotated copies of `ψ₁₂` to quadratics, standing in for
/// a projection.
pub trait WitnessMap {
    fn apply(&self, f: &RotatedWitness<'_>) -> Result<Quadratic>;
}

/// Ignores its input.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantMap(pub Quadratic);

impl WitnessMap for ConstantMap {
    fn apply(&self, _f: &RotatedWitness<'_>) -> Result<Quadratic> {
        Ok(self.0.clone())
    }
}

/// Sends `ψ₁₂∘ω` to `P∘ω`, hence commutes with the group action.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantMap(pub Quadratic);

impl WitnessMap for EquivariantMap {
    fn apply(&self, f: &RotatedWitness<'_>) -> Result<Quadratic> {
        self.0.compose_rotation(f.rotation())
    }
}

/// Least-squares quadratic fit of the input sampled on a fixed design.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresMap {
    dim: usize,
    design: Vec<Vec<f64>>,
    /// Pseudo-inverse of the design matrix, `n(n+1)/2 × design.len()`.
    solve: DMatrix<f64>,
}

impl LeastSquaresMap {
    /// `points` uniform design points of the ball drawn from `seed`.
    pub fn random(dim: usize, points: usize, seed: u64) -> Result<Self> {
        let unknowns = dim * (dim + 1) / 2;
        if points < unknowns {
            return Err(Error::RankDeficient {
                rank: points,
                expected: unknowns,
            });
        }
        let mut rng = stream_rng(seed, 0);
        let design: Vec<Vec<f64>> = (0..points).map(|_| sample_ball(dim, &mut rng)).collect();
        let features = DMatrix::from_fn(points, unknowns, |p, k| {
            let (i, j) = upper_index(dim, k);
            let x = &design[p];
            if i == j {
                x[i] * x[i]
            } else {
                2.0 * x[i] * x[j]
            }
        });
        let svd = features.svd(true, true);
        let rank = svd.rank(1e-12 * svd.singular_values.max());
        if rank < unknowns {
            return Err(Error::RankDeficient {
                rank,
                expected: unknowns,
            });
        }
        let solve = svd.pseudo_inverse(1e-14).map_err(|_| Error::RankDeficient {
            rank,
            expected: unknowns,
        })?;
        Ok(Self { dim, design, solve })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn upper_index(dim: usize, mut k: usize) -> (usize, usize) {
    for i in 0..dim {
        let row = dim - i;
        if k < row {
            return (i, i + k);
        }
        k -= row;
    }
    unreachable!("upper-triangle index out of range")
}

impl WitnessMap for LeastSquaresMap {
    fn apply(&self, f: &RotatedWitness<'_>) -> Result<Quadratic> {
        let values: Vec<f64> = self.design.iter().map(|x| f.eval(x)).collect::<Result<_>>()?;
        let coef = &self.solve * DVector::from_vec(values);
        Quadratic::from_upper(self.dim, coef.as_slice())
    }
}

/// `(1/m) Σ_s L(ψ₁₂∘ω_s)∘ω_s⁻¹` over `m` Haar samples of `O_n`.
pub fn symmetrize_map_on_witness<L: WitnessMap + ?Sized>(
    witness: &Witness,
    map: &L,
    m: usize,
    seed: u64,
) -> Result<Quadratic> {
    if m == 0 {
        return Err(Error::Empty { what: "sample set" });
    }
    let n = witness.params().n();
    let mut rng = stream_rng(seed, 0);
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for _ in 0..m {
        let w = haar_sample_orthogonal(n, &mut rng)?;
        let image = map.apply(&RotatedWitness::new(witness, &w)?)?;
        if image.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: image.dim(),
            });
        }
        acc += image.compose_rotation(&w.inverse())?.matrix();
    }
    Quadratic::from_matrix(acc / m as f64)
}
