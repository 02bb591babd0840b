//! Finite models of the problem: pointed nets of the unit ball, their
//! Lipschitz norms, and operator norms of projections onto restricted
//! quadratics computed exactly by transportation linear programs.

mod projection;
pub mod simplex;
mod transport;

use alloc::vec::Vec;
use core::f64::consts::PI;

pub use projection::{
    finite_group_closure, minimize_projection_norm, projection_operator_norm, quadratic_basis, restricted_basis_matrix,
    symmetrize_discrete_projection, DiscreteProjection, MinimizedProjection, OperatorNorm, MINIMIZER_MAX_ITERATIONS,
};
pub use transport::{free_norm_of_functional, free_norm_with_dual, FreeNorm, BALANCE_TOL};

use crate::error::{Error, Result};
use crate::geometry::{norm, sample_ball, sample_sphere, stream_rng};
use crate::polynomials::Quadratic;

/// Largest number of points in a net.
pub const MAX_NET_POINTS: usize = 10_000;

/// Slack on the ball constraint for net points.
pub const NET_BALL_SLACK: f64 = 1e-12;

/// How the points of a net are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetScheme {
    /// Lattice of spacing `2/resolution` through the origin, cut by the ball.
    Grid,
    /// Spheres of radii `j/resolution`, `j = 1..=resolution`.
    Shells,
    /// `resolution^n` uniform points of the ball drawn from the seed.
    Random { seed: u64 },
}

/// Finite pointed subset of the closed unit ball with `points[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteBallNet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl FiniteBallNet {
    /// Validates an explicit point list: first point zero, all points in the
    /// ball, all points distinct.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty { what: "net" })?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidDimension { dim, min: 1 });
        }
        if points.len() > MAX_NET_POINTS {
            return Err(Error::ResourceLimit {
                points: points.len(),
                limit: MAX_NET_POINTS,
            });
        }
        if first.iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidParameter {
                name: "points[0]",
                value: norm(first),
                reason: "the base point must be the origin",
            });
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "net point" });
            }
            let r = norm(p);
            if r > 1.0 + NET_BALL_SLACK {
                return Err(Error::OutsideBall { norm: r });
            }
        }
        let net = Self { dim, points };
        for i in 0..net.len() {
            for j in i + 1..net.len() {
                if net.distance(i, j) == 0.0 {
                    return Err(Error::InvalidIndexPair { i, j, dim: net.len() });
                }
            }
        }
        Ok(net)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Euclidean distance, computed on demand.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.points[i], &self.points[j]);
        let mut s = 0.0;
        for (x, y) in a.iter().zip(b) {
            s += (x - y) * (x - y);
        }
        libm::sqrt(s)
    }

    pub fn distance_matrix(&self) -> Vec<f64> {
        let p = self.len();
        let mut d = alloc::vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                d[i * p + j] = self.distance(i, j);
            }
        }
        d
    }

    /// Index of the point within `tol` of `x`.
    pub fn find(&self, x: &[f64], tol: f64) -> Option<usize> {
        self.points.iter().position(|p| {
            p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= tol * tol
        })
    }
}

/// Builds a deterministic net of `ℝⁿ`'s unit ball.
pub fn build_net(n: usize, resolution: usize, scheme: NetScheme) -> Result<FiniteBallNet> {
    if n == 0 {
        return Err(Error::InvalidDimension { dim: n, min: 1 });
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter {
            name: "resolution",
            value: resolution as f64,
            reason: "must be at least 2",
        });
    }
    let mut points = alloc::vec![alloc::vec![0.0; n]];
    match scheme {
        NetScheme::Grid => {
            let half = resolution / 2;
            let side = 2 * half + 1;
            // the ball holds a fixed fraction of the cube, so an oversized cube
            // is rejected without enumeration
            let cube = libm::pow(side as f64, n as f64);
            if cube > 1e3 * MAX_NET_POINTS as f64 {
                return Err(Error::ResourceLimit {
                    points: usize::MAX,
                    limit: MAX_NET_POINTS,
                });
            }
            let r2 = (resolution * resolution) as i64;
            let h = 2.0 / resolution as f64;
            let mut k = alloc::vec![-(half as i64); n];
            loop {
                let s: i64 = k.iter().map(|v| v * v).sum();
                if 4 * s <= r2 && s > 0 {
                    points.push(k.iter().map(|&v| v as f64 * h).collect());
                    if points.len() > MAX_NET_POINTS {
                        return Err(Error::ResourceLimit {
                            points: points.len(),
                            limit: MAX_NET_POINTS,
                        });
                    }
                }
                let mut i = 0;
                loop {
                    if i == n {
                        return FiniteBallNet::from_points(points);
                    }
                    if k[i] < half as i64 {
                        k[i] += 1;
                        break;
                    }
                    k[i] = -(half as i64);
                    i += 1;
                }
            }
        }
        NetScheme::Shells => {
            for j in 1..=resolution {
                let r = j as f64 / resolution as f64;
                let shell = shell_directions(n, j)?;
                if points.len() + shell.len() > MAX_NET_POINTS {
                    return Err(Error::ResourceLimit {
                        points: points.len() + shell.len(),
                        limit: MAX_NET_POINTS,
                    });
                }
                points.extend(shell.into_iter().map(|u| u.into_iter().map(|v| v * r).collect::<Vec<f64>>()));
            }
            FiniteBallNet::from_points(points)
        }
        NetScheme::Random { seed } => {
            let count = libm::pow(resolution as f64, n as f64);
            if count + 1.0 > MAX_NET_POINTS as f64 {
                return Err(Error::ResourceLimit {
                    points: if count < usize::MAX as f64 { count as usize + 1 } else { usize::MAX },
                    limit: MAX_NET_POINTS,
                });
            }
            let mut rng = stream_rng(seed, 0);
            for _ in 0..count as usize {
                points.push(sample_ball(n, &mut rng));
            }
            FiniteBallNet::from_points(points)
        }
    }
}

/// Unit directions for the `j`-th shell.
fn shell_directions(n: usize, j: usize) -> Result<Vec<Vec<f64>>> {
    match n {
        1 => Ok(alloc::vec![alloc::vec![1.0], alloc::vec![-1.0]]),
        2 => {
            let m = 4 * j;
            Ok((0..m)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / m as f64;
                    alloc::vec![libm::cos(t), libm::sin(t)]
                })
                .collect())
        }
        _ => {
            // ±e_i, then pseudo-random directions from a fixed stream per shell
            let extra = 4usize.saturating_mul(j.saturating_pow(n as u32 - 1));
            if extra > MAX_NET_POINTS {
                return Err(Error::ResourceLimit {
                    points: extra,
                    limit: MAX_NET_POINTS,
                });
            }
            let mut dirs = Vec::with_capacity(2 * n + extra);
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut e = alloc::vec![0.0; n];
                    e[i] = s;
                    dirs.push(e);
                }
            }
            let mut rng = stream_rng(0x5eed, j as u64);
            for _ in 0..extra {
                dirs.push(sample_sphere(n, &mut rng));
            }
            Ok(dirs)
        }
    }
}

/// A function on a net vanishing at the base point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction<'a> {
    net: &'a FiniteBallNet,
    values: Vec<f64>,
}

impl<'a> DiscreteFunction<'a> {
    pub fn new(net: &'a FiniteBallNet, values: Vec<f64>) -> Result<Self> {
        if values.len() != net.len() {
            return Err(Error::DimensionMismatch {
                expected: net.len(),
                found: values.len(),
            });
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidParameter {
                name: "f(0)",
                value: values[0],
                reason: "functions must vanish at the base point",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "function values" });
        }
        Ok(Self { net, values })
    }

    pub fn net(&self) -> &'a FiniteBallNet {
        self.net
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `max_{p ≠ q} |f(p) − f(q)| / d(p, q)`.
pub fn discrete_lip_norm(f: &DiscreteFunction<'_>) -> f64 {
    discrete_lip_norm_values(f.net, &f.values)
}

/// [`discrete_lip_norm`] on a raw value vector.
pub fn discrete_lip_norm_values(net: &FiniteBallNet, values: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            best = best.max((values[i] - values[j]).abs() / net.distance(i, j));
        }
    }
    best
}

/// `P` evaluated at every point of the net.
pub fn restrict_quadratic<'a>(p: &Quadratic, net: &'a FiniteBallNet) -> Result<DiscreteFunction<'a>> {
    if p.dim() != net.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            found: p.dim(),
        });
    }
    let values = net.points.iter().map(|x| p.eval_slice(x)).collect();
    DiscreteFunction::new(net, values)
}
