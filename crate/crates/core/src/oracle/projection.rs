//! Projections of the discrete `Lip₀` space of a net onto a subspace of
//! restricted quadratics, their exact operator norms, local search for small
//! norms, and averaging over a finite symmetry group.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{stream_rng, OrthogonalMatrix};
use crate::polynomials::Quadratic;

use super::simplex::maximize;
use super::transport::free_norm_with_dual;
use super::FiniteBallNet;

/// Accepted `max |WB − I|`.
pub const IDEMPOTENCE_TOL: f64 = 1e-10;

/// Cutting-plane iterations per restart.
pub const MINIMIZER_MAX_ITERATIONS: usize = 400;

const MATCH_TOL: f64 = 1e-9;

/// `f ↦ Σ_a (W f)_a · b_a`, with basis values `B` (`points × k`, zero row at
/// the base point) and coefficient functionals `W` (`k × points`).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteProjection {
    basis: DMatrix<f64>,
    weights: DMatrix<f64>,
}

/// Monomial basis `x_i x_j`, `i ≤ j`, of the quadratics on `ℝ^dim`.
pub fn quadratic_basis(dim: usize) -> Result<Vec<Quadratic>> {
    let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in i..dim {
            let mut a = DMatrix::zeros(dim, dim);
            if i == j {
                a[(i, i)] = 1.0;
            } else {
                a[(i, j)] = 0.5;
                a[(j, i)] = 0.5;
            }
            out.push(Quadratic::from_matrix(a)?);
        }
    }
    Ok(out)
}

/// Values of each quadratic at each net point (`points × k`); fails unless
/// the columns are linearly independent.
pub fn restricted_basis_matrix(net: &FiniteBallNet, basis: &[Quadratic]) -> Result<DMatrix<f64>> {
    if basis.is_empty() {
        return Err(Error::Empty { what: "basis" });
    }
    for q in basis {
        if q.dim() != net.dim() {
            return Err(Error::DimensionMismatch {
                expected: net.dim(),
                found: q.dim(),
            });
        }
    }
    let b = DMatrix::from_fn(net.len(), basis.len(), |i, a| basis[a].eval_slice(net.point(i)));
    check_rank(&b)?;
    Ok(b)
}

fn check_rank(b: &DMatrix<f64>) -> Result<()> {
    let k = b.ncols();
    let svd = b.clone().svd(false, false);
    let top = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * top.max(1e-300)).count();
    if rank < k || top == 0.0 {
        return Err(Error::RankDeficient { rank, expected: k });
    }
    Ok(())
}

/// `(BᵀB)⁻¹Bᵀ`.
fn left_inverse(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = b.transpose() * b;
    let inv = gram.try_inverse().ok_or(Error::RankDeficient {
        rank: 0,
        expected: b.ncols(),
    })?;
    Ok(inv * b.transpose())
}

impl DiscreteProjection {
    /// Checks shapes, the zero base row, and `WB = I`. The base-point column
    /// of `W` is irrelevant (functions vanish there) and is set to zero.
    pub fn from_parts(basis: DMatrix<f64>, mut weights: DMatrix<f64>) -> Result<Self> {
        let (p, k) = basis.shape();
        if weights.shape() != (k, p) {
            return Err(Error::DimensionMismatch {
                expected: k * p,
                found: weights.nrows() * weights.ncols(),
            });
        }
        if p == 0 || k == 0 {
            return Err(Error::Empty { what: "projection" });
        }
        if basis.row(0).iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidParameter {
                name: "basis",
                value: basis.row(0).amax(),
                reason: "basis functions must vanish at the base point",
            });
        }
        if basis.iter().chain(weights.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "projection" });
        }
        weights.column_mut(0).fill(0.0);
        let q = Self { basis, weights };
        let defect = q.idempotence_defect();
        if defect > IDEMPOTENCE_TOL {
            return Err(Error::NotIdempotent { deviation: defect });
        }
        Ok(q)
    }

    /// Orthogonal (least-squares) projection in the coordinates of the net.
    pub fn least_squares(basis: DMatrix<f64>) -> Result<Self> {
        check_rank(&basis)?;
        let w = left_inverse(&basis)?;
        Self::from_parts(basis, w)
    }

    /// `W = Z + (I − ZB)(BᵀB)⁻¹Bᵀ`, the projection whose functionals are
    /// closest to `Z`.
    pub fn correcting(basis: DMatrix<f64>, z: &DMatrix<f64>) -> Result<Self> {
        check_rank(&basis)?;
        let k = basis.ncols();
        let mut z = z.clone();
        z.column_mut(0).fill(0.0);
        let w = &z + (DMatrix::identity(k, k) - &z * &basis) * left_inverse(&basis)?;
        Self::from_parts(basis, w)
    }

    /// [`Self::correcting`] with Gaussian `Z` of standard deviation `scale`.
    pub fn random<R: Rng + ?Sized>(basis: DMatrix<f64>, scale: f64, rng: &mut R) -> Result<Self> {
        let (p, k) = basis.shape();
        let z = DMatrix::from_fn(k, p, |_, _| scale * Distribution::<f64>::sample(&StandardNormal, rng));
        Self::correcting(basis, &z)
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn points(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// `max |WB − I|`.
    pub fn idempotence_defect(&self) -> f64 {
        let k = self.rank();
        (&self.weights * &self.basis - DMatrix::<f64>::identity(k, k)).amax()
    }

    /// `Q f` as values on the net.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.points() {
            return Err(Error::DimensionMismatch {
                expected: self.points(),
                found: values.len(),
            });
        }
        let f = DMatrix::from_column_slice(values.len(), 1, values);
        Ok((&self.basis * (&self.weights * f)).as_slice().to_vec())
    }

    /// Rescales basis vector `a` by `s` and its functional by `1/s`.
    pub fn rescale_basis(&self, a: usize, s: f64) -> Result<Self> {
        if a >= self.rank() || s == 0.0 || !s.is_finite() {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: s,
                reason: "need a nonzero finite factor and a valid index",
            });
        }
        let mut basis = self.basis.clone();
        let mut weights = self.weights.clone();
        basis.column_mut(a).scale_mut(s);
        weights.row_mut(a).scale_mut(1.0 / s);
        Self::from_parts(basis, weights)
    }

    /// `ℓ_pq(f) = (Qf)(p) − (Qf)(q)` as weights, balanced at the base point.
    fn pair_functional(&self, p: usize, q: usize) -> Vec<f64> {
        let diff = self.basis.row(p) - self.basis.row(q);
        let row = diff * &self.weights;
        let mut w: Vec<f64> = row.iter().copied().collect();
        w[0] = 0.0;
        let s: f64 = w.iter().sum();
        w[0] = -s;
        w
    }
}

/// The exact discrete operator norm and where it is attained.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorNorm {
    pub norm: f64,
    /// Pair `(p, q)` whose difference quotient of `Qf` attains the norm.
    pub pair: (usize, usize),
    /// `f` with `Lip(f) ≤ 1` attaining it.
    pub maximizer: Vec<f64>,
}

struct PairValue {
    value: f64,
    p: usize,
    q: usize,
    maximizer: Vec<f64>,
}

fn pair_values(q: &DiscreteProjection, net: &FiniteBallNet) -> Result<Vec<PairValue>> {
    let p = net.len();
    let mut out = Vec::with_capacity(p * (p - 1) / 2);
    for i in 0..p {
        for j in i + 1..p {
            let d = net.distance(i, j);
            let w: Vec<f64> = q.pair_functional(i, j).into_iter().map(|v| v / d).collect();
            let fnorm = free_norm_with_dual(&w, net)?;
            out.push(PairValue {
                value: fnorm.value,
                p: i,
                q: j,
                maximizer: fnorm.maximizer,
            });
        }
    }
    Ok(out)
}

/// `‖Q‖ = max_{p≠q} ‖ℓ_pq‖_free / d(p, q)`: the Lipschitz norm of `Qf` is a
/// maximum of the linear functionals `ℓ_pq/d(p,q)`, and the supremum of each
/// over the Lipschitz ball is its transportation norm.
pub fn projection_operator_norm(q: &DiscreteProjection, net: &FiniteBallNet) -> Result<OperatorNorm> {
    if q.points() != net.len() {
        return Err(Error::DimensionMismatch {
            expected: net.len(),
            found: q.points(),
        });
    }
    if net.len() < 2 {
        return Err(Error::Empty { what: "net pairs" });
    }
    let defect = q.idempotence_defect();
    if defect > IDEMPOTENCE_TOL {
        return Err(Error::NotIdempotent { deviation: defect });
    }
    let values = pair_values(q, net)?;
    let best = values
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .ok_or(Error::Empty { what: "net pairs" })?;
    Ok(OperatorNorm {
        norm: best.value,
        pair: (best.p, best.q),
        maximizer: best.maximizer,
    })
}

/// Result of [`minimize_projection_norm`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizedProjection {
    pub projection: DiscreteProjection,
    /// Exact norm of `projection`: an upper bound on the minimal norm.
    pub norm: f64,
    /// Cutting-plane lower bound on the minimal norm from the best restart.
    pub lower_bound: f64,
    /// Best norm reached by each restart.
    pub restart_norms: Vec<f64>,
    pub iterations: usize,
}

/// Searches the projections onto `span(basis)` for a small operator norm.
///
/// Projections are `W = W₀ + Y Nᵀ` with `W₀` the least-squares one and `N`
/// an orthonormal basis of the functionals vanishing on the subspace. The
/// norm is convex in `Y` (a maximum of transport norms of linear images of
/// `Y`), so each restart runs Kelley's cutting-plane method: every exact
/// evaluation yields optimal dual functions, hence linear minorants, and an
/// LP over the minorants proposes the next `Y`.
pub fn minimize_projection_norm(
    net: &FiniteBallNet,
    basis: &DMatrix<f64>,
    restarts: usize,
    seed: u64,
) -> Result<MinimizedProjection> {
    if basis.nrows() != net.len() {
        return Err(Error::DimensionMismatch {
            expected: net.len(),
            found: basis.nrows(),
        });
    }
    check_rank(basis)?;
    let start = DiscreteProjection::least_squares(basis.clone())?;
    let (p, k) = basis.shape();
    let null = complement_basis(basis);
    let r = null.ncols();
    if r == 0 {
        let norm = projection_operator_norm(&start, net)?.norm;
        return Ok(MinimizedProjection {
            projection: start,
            norm,
            lower_bound: norm,
            restart_norms: alloc::vec![norm; restarts.max(1)],
            iterations: 0,
        });
    }
    let w0 = start.weights().clone();
    let bound = 1e3 * w0.amax().max(1.0);

    let build = |y: &[f64]| -> Result<DiscreteProjection> {
        let ym = DMatrix::from_row_slice(k, r, y);
        let mut w = w0.clone();
        let delta = ym * null.transpose();
        for a in 0..k {
            for i in 1..p {
                w[(a, i)] += delta[(a, i - 1)];
            }
        }
        DiscreteProjection::from_parts(basis.clone(), w)
    };

    let mut best: Option<(f64, f64, DiscreteProjection)> = None;
    let mut restart_norms = Vec::new();
    let mut total_iterations = 0;
    for s in 0..restarts.max(1) {
        let mut rng = stream_rng(seed, s as u64);
        let mut y: Vec<f64> = if s == 0 {
            alloc::vec![0.0; k * r]
        } else {
            (0..k * r).map(|_| 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect::<Vec<f64>>()
        };
        // cuts: value(y) ≥ c0 + gᵀy
        let mut cuts: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut upper = f64::INFINITY;
        let mut lower = f64::NEG_INFINITY;
        let mut incumbent = None;
        for _ in 0..MINIMIZER_MAX_ITERATIONS {
            total_iterations += 1;
            let q = build(&y)?;
            let mut values = pair_values(&q, net)?;
            values.sort_by(|a, b| b.value.total_cmp(&a.value).then((a.p, a.q).cmp(&(b.p, b.q))));
            let norm = values[0].value;
            if norm < upper {
                upper = norm;
                incumbent = Some(q.clone());
            }
            for v in values.iter().take(3) {
                cuts.push(cut_for(basis, &w0, &null, v, net));
            }
            if upper - lower <= 1e-9 * upper {
                break;
            }
            let (t, next) = solve_master(&cuts, k * r, bound)?;
            lower = lower.max(t);
            y = next;
            if upper - lower <= 1e-9 * upper {
                break;
            }
        }
        let incumbent = incumbent.ok_or(Error::Empty { what: "search" })?;
        restart_norms.push(upper);
        if best.as_ref().is_none_or(|b| upper < b.0) {
            best = Some((upper, lower, incumbent));
        }
    }
    let (norm, lower_bound, projection) = best.ok_or(Error::Empty { what: "search" })?;
    Ok(MinimizedProjection {
        projection,
        norm,
        lower_bound,
        restart_norms,
        iterations: total_iterations,
    })
}

/// Orthonormal basis (columns) of `{v : Bᵀv = 0}` over the non-base points.
fn complement_basis(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, k) = basis.shape();
    let m = p - 1;
    let b = basis.rows(1, m).into_owned();
    let proj = DMatrix::<f64>::identity(m, m)
        - &b * (b.transpose() * &b).try_inverse().unwrap_or_else(|| DMatrix::zeros(k, k)) * b.transpose();
    let eig = SymmetricEigen::new(proj);
    let mut cols: Vec<(f64, usize)> = eig.eigenvalues.iter().copied().enumerate().map(|(i, v)| (v, i)).collect();
    cols.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let r = m.saturating_sub(k);
    let mut out = DMatrix::zeros(m, r);
    for (c, &(_, i)) in cols.iter().take(r).enumerate() {
        out.set_column(c, &eig.eigenvectors.column(i));
    }
    out
}

/// Linear minorant `y ↦ c0 + gᵀy` of the norm from one pair's dual function.
fn cut_for(
    basis: &DMatrix<f64>,
    w0: &DMatrix<f64>,
    null: &DMatrix<f64>,
    v: &PairValue,
    net: &FiniteBallNet,
) -> (f64, Vec<f64>) {
    let (p, k) = basis.shape();
    let r = null.ncols();
    let d = net.distance(v.p, v.q);
    let g: Vec<f64> = (0..k).map(|a| (basis[(v.p, a)] - basis[(v.q, a)]) / d).collect();
    let f = &v.maximizer;
    let wf: Vec<f64> = (0..k).map(|a| (1..p).map(|i| w0[(a, i)] * f[i]).sum()).collect();
    let c0 = g.iter().zip(&wf).map(|(a, b)| a * b).sum();
    let h: Vec<f64> = (0..r).map(|b| (1..p).map(|i| null[(i - 1, b)] * f[i]).sum()).collect();
    let mut coef = Vec::with_capacity(k * r);
    for ga in &g {
        for hb in &h {
            coef.push(ga * hb);
        }
    }
    (c0, coef)
}

/// `min t` subject to `t ≥ c0 + gᵀy` for every cut and `|y_i| ≤ bound`.
fn solve_master(cuts: &[(f64, Vec<f64>)], dim: usize, bound: f64) -> Result<(f64, Vec<f64>)> {
    // variables x = y + bound ∈ [0, 2·bound], then t ≥ 0
    let nv = dim + 1;
    let rows = cuts.len() + dim;
    let mut a = alloc::vec![0.0; rows * nv];
    let mut b = alloc::vec![0.0; rows];
    for (r, (c0, g)) in cuts.iter().enumerate() {
        a[r * nv..r * nv + dim].copy_from_slice(g);
        a[r * nv + dim] = -1.0;
        b[r] = bound * g.iter().sum::<f64>() - c0;
    }
    for i in 0..dim {
        let r = cuts.len() + i;
        a[r * nv + i] = 1.0;
        b[r] = 2.0 * bound;
    }
    let mut c = alloc::vec![0.0; nv];
    c[dim] = -1.0;
    let sol = maximize(&c, &a, &b)?;
    let y = sol.x[..dim].iter().map(|v| v - bound).collect();
    Ok((sol.x[dim], y))
}

/// Closes a set of orthogonal matrices under multiplication.
pub fn finite_group_closure(generators: &[OrthogonalMatrix], limit: usize) -> Result<Vec<OrthogonalMatrix>> {
    let first = generators.first().ok_or(Error::Empty { what: "generators" })?;
    let dim = first.dim();
    let mut group = alloc::vec![OrthogonalMatrix::identity(dim)?];
    let mut frontier = 0;
    while frontier < group.len() {
        let g = group[frontier].clone();
        frontier += 1;
        for h in generators {
            let gh = g.compose(h)?;
            if !group.iter().any(|e| (e.matrix() - gh.matrix()).amax() < MATCH_TOL) {
                group.push(gh);
                if group.len() > limit {
                    return Err(Error::ResourceLimit {
                        points: group.len(),
                        limit,
                    });
                }
            }
        }
    }
    Ok(group)
}

/// `σ_g(i)`: index of the point `g·p_i`.
fn point_permutation(net: &FiniteBallNet, g: &OrthogonalMatrix) -> Result<Vec<usize>> {
    if g.dim() != net.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            found: g.dim(),
        });
    }
    let mut y = alloc::vec![0.0; net.dim()];
    (0..net.len())
        .map(|i| {
            g.apply_into(net.point(i), &mut y);
            net.find(&y, MATCH_TOL).ok_or(Error::NotInvariant)
        })
        .collect()
}

/// `(1/|G|) Σ_g (Q(f∘g))∘g⁻¹` for a finite group `G` of isometries
/// (given as its full element list) leaving the net invariant.
///
/// The subspace must be `G`-invariant; then `B` transforms by matrices
/// `R(g)` with `Π_{g⁻¹}B = B·R(g)` and the average is again a projection with
/// functionals `(1/|G|) Σ_g R(g)·W·Π_g`.
pub fn symmetrize_discrete_projection(
    q: &DiscreteProjection,
    net: &FiniteBallNet,
    group: &[OrthogonalMatrix],
) -> Result<DiscreteProjection> {
    if group.is_empty() {
        return Err(Error::Empty { what: "group" });
    }
    if q.points() != net.len() {
        return Err(Error::DimensionMismatch {
            expected: net.len(),
            found: q.points(),
        });
    }
    let b = q.basis();
    let (p, k) = b.shape();
    let left = left_inverse(b)?;
    let mut acc = DMatrix::<f64>::zeros(k, p);
    for g in group {
        let sigma = point_permutation(net, g)?;
        let mut inv = alloc::vec![0; p];
        for (i, &s) in sigma.iter().enumerate() {
            inv[s] = i;
        }
        // (Π_{g⁻¹} B)_i = B_{σ⁻¹(i)}
        let moved = DMatrix::from_fn(p, k, |i, a| b[(inv[i], a)]);
        let rg = &left * &moved;
        let residual = (b * &rg - &moved).amax();
        if residual > IDEMPOTENCE_TOL * b.amax().max(1.0) {
            return Err(Error::NotInvariant);
        }
        // (W Π_g)_{a, σ(j)} = W_{a, j}
        let mut wp = DMatrix::<f64>::zeros(k, p);
        for j in 0..p {
            for a in 0..k {
                wp[(a, sigma[j])] += q.weights()[(a, j)];
            }
        }
        acc += rg * wp;
    }
    DiscreteProjection::from_parts(b.clone(), acc / group.len() as f64)
}
