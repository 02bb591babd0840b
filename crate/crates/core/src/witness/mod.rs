//! The witness functions.
//!
//! A planar function `ψ(x, y) = ϱ(r)·τ(θ)` (polar coordinates) vanishes near
//! both coordinate axes and is 2-Lipschitz. Lifting it to every coordinate
//! plane of `ℝⁿ` and summing gives `Ψ = Σ_{i<j≤n} ψ_ij` and
//! `Ψ_d = Σ_{i<j≤d} ψ_ij`; because at most `1/ε²` coordinates of a point of
//! the ball reach `ε`, both sums stay `1/ε⁴`-Lipschitz independently of `n`.

mod lipschitz;
pub mod profile;

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

pub use lipschitz::{estimate_lip, LipEstimate, SamplerConfig, SmoothFunction};
pub use profile::{tau0, ProfilePiece, ProfileReport, SmoothedAngleProfile};

use crate::error::{Error, Result};
use crate::geometry::norm;

/// Slack on the unit-ball constraint absorbing rounding of sampled points.
pub const BALL_SLACK: f64 = 1e-12;

/// `(n, ε, δ)` together with the derived `d = ⌊n/√2⌋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessParams {
    n: usize,
    eps: f64,
    delta: f64,
    d: usize,
}

impl WitnessParams {
    pub fn new(n: usize, eps: f64, delta: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension { dim: n, min: 3 });
        }
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: eps,
                reason: "need 0 < eps < 1/2",
            });
        }
        if !(delta > 0.0 && delta < profile::DELTA_MAX) {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                reason: "need 0 < delta < pi/72",
            });
        }
        debug_assert!(n as f64 - 2.0 * SQRT_2 > 0.0);
        Ok(Self {
            n,
            eps,
            delta,
            d: floor_div_sqrt2(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `⌊n/√2⌋`.
    pub fn d(&self) -> usize {
        self.d
    }

    /// The analytic Lipschitz bound `1/ε⁴` for `Ψ` and `Ψ_d`.
    pub fn sum_lip_bound(&self) -> f64 {
        1.0 / libm::pow(self.eps, 4.0)
    }
}

/// `⌊n/√2⌋` in exact integer arithmetic: the largest `d` with `2d² ≤ n²`.
pub fn floor_div_sqrt2(n: usize) -> usize {
    ((n as u128 * n as u128) / 2).isqrt() as usize
}

/// `ϱ(r) = (r − 2ε)²` for `r ≥ 2ε`, else 0, on `[0, 1]`.
pub fn rho(r: f64, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain {
            what: "rho",
            value: r,
        });
    }
    Ok(rho_unchecked(r, eps))
}

#[inline]
pub(crate) fn rho_unchecked(r: f64, eps: f64) -> f64 {
    let s = r - 2.0 * eps;
    if s > 0.0 {
        s * s
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn rho_prime_unchecked(r: f64, eps: f64) -> f64 {
    let s = r - 2.0 * eps;
    if s > 0.0 {
        2.0 * s
    } else {
        0.0
    }
}

fn check_ball(x: &[f64]) -> Result<()> {
    let r = norm(x);
    if r > 1.0 + BALL_SLACK || !r.is_finite() {
        Err(Error::OutsideBall { norm: r })
    } else {
        Ok(())
    }
}

/// The witness family for fixed parameters: `ψ`, `ψ_ij`, `Ψ`, `Ψ_d` and their
/// gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    params: WitnessParams,
    tau: SmoothedAngleProfile,
}

impl Witness {
    pub fn new(params: WitnessParams) -> Result<Self> {
        let tau = SmoothedAngleProfile::build(params.delta)?;
        Ok(Self { params, tau })
    }

    /// Uses a caller-supplied angle profile instead of the built one.
    pub fn with_profile(params: WitnessParams, tau: SmoothedAngleProfile) -> Self {
        Self { params, tau }
    }

    pub fn params(&self) -> &WitnessParams {
        &self.params
    }

    pub fn profile(&self) -> &SmoothedAngleProfile {
        &self.tau
    }

    /// `ψ(x, y)` on the closed unit disc.
    pub fn psi(&self, x: f64, y: f64) -> Result<f64> {
        check_ball(&[x, y])?;
        Ok(self.psi_unchecked(x, y))
    }

    /// `ψ` without the domain check.
    ///
    /// The angle is `θ = atan2(|y|, |x|) ∈ [0, π/2]`; since `τ` is symmetric
    /// about `π/4` this agrees with the `arctan|x/y|` reading.
    #[inline]
    pub fn psi_unchecked(&self, x: f64, y: f64) -> f64 {
        let eps = self.params.eps;
        let (ax, ay) = (x.abs(), y.abs());
        if ax < eps || ay < eps {
            return 0.0;
        }
        let r = libm::hypot(ax, ay);
        let radial = rho_unchecked(r, eps);
        if radial == 0.0 {
            return 0.0;
        }
        radial * self.tau.value(libm::atan2(ay, ax))
    }

    /// `∇ψ(x, y)` in closed form.
    pub fn grad_psi(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        check_ball(&[x, y])?;
        Ok(self.grad_psi_unchecked(x, y))
    }

    /// In polar coordinates `∇ψ = ϱ'τ·e_r + (ϱτ'/r)·e_θ`, with
    /// `∂θ/∂x = −sgn(x)|y|/r²` and `∂θ/∂y = sgn(y)|x|/r²`.
    #[inline]
    pub fn grad_psi_unchecked(&self, x: f64, y: f64) -> (f64, f64) {
        let eps = self.params.eps;
        let (ax, ay) = (x.abs(), y.abs());
        if ax < eps || ay < eps {
            return (0.0, 0.0);
        }
        let r = libm::hypot(ax, ay);
        if r <= 2.0 * eps {
            return (0.0, 0.0);
        }
        let theta = libm::atan2(ay, ax);
        let t = self.tau.value(theta);
        let dt = self.tau.derivative(theta);
        let radial = rho_prime_unchecked(r, eps) * t / r;
        let angular = rho_unchecked(r, eps) * dt / (r * r);
        let gx = radial * x - angular * x.signum() * ay;
        let gy = radial * y + angular * y.signum() * ax;
        (gx, gy)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.params.n {
            return Err(Error::DimensionMismatch {
                expected: self.params.n,
                found: x.len(),
            });
        }
        check_ball(x)
    }

    /// `ψ_ij(x) = ψ(x_i, x_j)`, zero-based `i < j < n`.
    pub fn psi_ij(&self, x: &[f64], i: usize, j: usize) -> Result<f64> {
        self.check_point(x)?;
        if !(i < j && j < self.params.n) {
            return Err(Error::InvalidIndexPair {
                i,
                j,
                dim: self.params.n,
            });
        }
        Ok(self.psi_unchecked(x[i], x[j]))
    }

    /// `Ψ(x)`, summed over active coordinates only.
    pub fn big_psi(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.pair_sum(x, self.params.n))
    }

    /// `Ψ_d(x)`, summed over active coordinates among the first `d`.
    pub fn big_psi_d(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.pair_sum(x, self.params.d))
    }

    /// The naive `O(n²)` double sum over all pairs `i < j < limit`.
    pub fn pair_sum_naive(&self, x: &[f64], limit: usize) -> Result<f64> {
        self.check_point(x)?;
        let mut acc = 0.0;
        for i in 0..limit {
            for j in i + 1..limit {
                acc += self.psi_unchecked(x[i], x[j]);
            }
        }
        Ok(acc)
    }

    fn pair_sum(&self, x: &[f64], limit: usize) -> f64 {
        let active = active_indices(&x[..limit], self.params.eps);
        let mut acc = 0.0;
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                acc += self.psi_unchecked(x[i], x[j]);
            }
        }
        acc
    }

    /// `∇Ψ(x)`.
    pub fn grad_big_psi(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.pair_gradient(x, self.params.n))
    }

    /// `∇Ψ_d(x)`.
    pub fn grad_big_psi_d(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.pair_gradient(x, self.params.d))
    }

    fn pair_gradient(&self, x: &[f64], limit: usize) -> Vec<f64> {
        let mut g = alloc::vec![0.0; x.len()];
        let active = active_indices(&x[..limit], self.params.eps);
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                let (gi, gj) = self.grad_psi_unchecked(x[i], x[j]);
                g[i] += gi;
                g[j] += gj;
            }
        }
        g
    }

    /// The planar witness as a [`SmoothFunction`] on `ℝ²`.
    pub fn planar(&self) -> WitnessFunction<'_> {
        WitnessFunction {
            witness: self,
            kind: WitnessKind::Planar,
        }
    }

    /// `Ψ` as a [`SmoothFunction`] on `ℝⁿ`.
    pub fn full_sum(&self) -> WitnessFunction<'_> {
        WitnessFunction {
            witness: self,
            kind: WitnessKind::Full,
        }
    }

    /// `Ψ_d` as a [`SmoothFunction`] on `ℝⁿ`.
    pub fn leading_sum(&self) -> WitnessFunction<'_> {
        WitnessFunction {
            witness: self,
            kind: WitnessKind::Leading,
        }
    }
}

/// `{i : |x_i| ≥ ε}`; its size is at most `1/ε²` on the unit ball.
pub fn active_indices(x: &[f64], eps: f64) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= eps)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WitnessKind {
    Planar,
    Full,
    Leading,
}

/// Borrowed view of one of the witness functions.
#[derive(Debug, Clone, Copy)]
pub struct WitnessFunction<'a> {
    witness: &'a Witness,
    kind: WitnessKind,
}

impl SmoothFunction for WitnessFunction<'_> {
    fn dim(&self) -> usize {
        match self.kind {
            WitnessKind::Planar => 2,
            _ => self.witness.params.n,
        }
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            WitnessKind::Planar => self.witness.psi(x[0], x[1]),
            WitnessKind::Full => self.witness.big_psi(x),
            WitnessKind::Leading => self.witness.big_psi_d(x),
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match self.kind {
            WitnessKind::Planar => {
                let (gx, gy) = self.witness.grad_psi(x[0], x[1])?;
                out[0] = gx;
                out[1] = gy;
            }
            WitnessKind::Full => out.copy_from_slice(&self.witness.grad_big_psi(x)?),
            WitnessKind::Leading => out.copy_from_slice(&self.witness.grad_big_psi_d(x)?),
        }
        Ok(())
    }
}

/// `(2·π/12)² + 1`, the analytic bound on `|∇ψ|²`.
pub fn planar_grad_sq_bound() -> f64 {
    let t = 2.0 * PI / 12.0;
    t * t + 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_ball, stream_rng};
    use rand::Rng;

    fn witness(n: usize, eps: f64, delta: f64) -> Witness {
        Witness::new(WitnessParams::new(n, eps, delta).unwrap()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(WitnessParams::new(2, 0.1, 0.01).is_err());
        assert!(WitnessParams::new(3, 0.5, 0.01).is_err());
        assert!(WitnessParams::new(3, 0.0, 0.01).is_err());
        assert!(WitnessParams::new(3, 0.1, PI / 72.0).is_err());
        assert!(WitnessParams::new(3, 0.1, 0.0).is_err());
        let p = WitnessParams::new(3, 0.1, 0.01).unwrap();
        assert_eq!(p.d(), 2);
    }

    #[test]
    fn d_matches_floor() {
        for n in 3..5000usize {
            let d = floor_div_sqrt2(n);
            assert!(2 * d * d <= n * n && 2 * (d + 1) * (d + 1) > n * n);
            assert_eq!(d, libm::floor(n as f64 / SQRT_2) as usize);
        }
    }

    #[test]
    fn rho_values() {
        assert_eq!(rho(0.2, 0.1).unwrap(), 0.0);
        assert!((rho(1.0, 0.1).unwrap() - 0.64).abs() < 1e-15);
        assert!(rho(1.5, 0.1).is_err());
        assert!(rho(-0.1, 0.1).is_err());
        // derivative against finite differences
        let eps = 0.1;
        let h = 1e-6;
        for k in 1..1000 {
            let r = k as f64 / 1000.0;
            if (r - 2.0 * eps).abs() < 2.0 * h || r + h > 1.0 {
                continue;
            }
            let fd = (rho(r + h, eps).unwrap() - rho(r - h, eps).unwrap()) / (2.0 * h);
            assert!((fd - rho_prime_unchecked(r, eps)).abs() < 1e-6);
        }
    }

    #[test]
    fn psi_vanishes_near_axes() {
        let w = witness(3, 0.05, PI / 100.0);
        let mut rng = stream_rng(1, 0);
        for _ in 0..10_000 {
            let p = sample_ball(2, &mut rng);
            let (x, y) = (p[0], p[1]);
            let v = w.psi(x, y).unwrap();
            if x.abs() < 0.05 || y.abs() < 0.05 {
                assert_eq!(v, 0.0);
            }
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn psi_symmetries() {
        let w = witness(3, 0.05, PI / 100.0);
        let mut rng = stream_rng(2, 0);
        for _ in 0..10_000 {
            let p = sample_ball(2, &mut rng);
            let (x, y) = (p[0], p[1]);
            let v = w.psi(x, y).unwrap();
            assert!((v - w.psi(y, x).unwrap()).abs() <= 1e-15);
            assert_eq!(v, w.psi(-x, y).unwrap());
            assert_eq!(v, w.psi(x, -y).unwrap());
        }
    }

    #[test]
    fn psi_on_the_diagonal() {
        let eps = 0.05;
        let delta = PI / 100.0;
        let w = witness(3, eps, delta);
        let r = libm::sqrt(0.5);
        // oracle: the two closed forms evaluated separately
        let expected = (r - 2.0 * eps) * (r - 2.0 * eps) * (PI / 12.0 - delta / 2.0);
        assert!((w.psi(0.5, 0.5).unwrap() - expected).abs() < 1e-15);
        assert!(w.psi(0.8, 0.8).is_err());
    }

    #[test]
    fn planar_gradient_matches_finite_differences() {
        let w = witness(3, 0.1, PI / 100.0);
        let mut rng = stream_rng(3, 0);
        let h = 1e-5;
        let mut checked = 0;
        while checked < 10_000 {
            let p = sample_ball(2, &mut rng);
            let (x, y) = (p[0] * 0.999, p[1] * 0.999);
            if w.psi_unchecked(x, y) == 0.0 {
                continue;
            }
            let (gx, gy) = w.grad_psi(x, y).unwrap();
            let fx = (w.psi_unchecked(x + h, y) - w.psi_unchecked(x - h, y)) / (2.0 * h);
            let fy = (w.psi_unchecked(x, y + h) - w.psi_unchecked(x, y - h)) / (2.0 * h);
            assert!((gx - fx).abs() < 1e-6 && (gy - fy).abs() < 1e-6);
            checked += 1;
        }
    }

    #[test]
    fn planar_gradient_bound() {
        let w = witness(3, 0.05, PI / 100.0);
        let mut rng = stream_rng(4, 0);
        let mut max: f64 = 0.0;
        for _ in 0..200_000 {
            let p = sample_ball(2, &mut rng);
            let (gx, gy) = w.grad_psi(p[0], p[1]).unwrap();
            let g2 = gx * gx + gy * gy;
            assert!(g2 <= planar_grad_sq_bound() + 1e-12);
            max = max.max(libm::sqrt(g2));
        }
        assert!(max <= 2.0);
        assert_eq!(w.grad_psi(0.01, 0.9).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn lifted_pairs() {
        let w = witness(5, 0.1, 0.01);
        let x = [0.5, 0.0, 0.45, 0.3, 0.1];
        assert_eq!(w.psi_ij(&x, 0, 1).unwrap(), 0.0);
        assert_eq!(w.psi_ij(&x, 0, 2).unwrap(), w.psi(0.5, 0.45).unwrap());
        let swapped = [0.45, 0.0, 0.5, 0.3, 0.1];
        assert!((w.psi_ij(&swapped, 0, 2).unwrap() - w.psi_ij(&x, 0, 2).unwrap()).abs() < 1e-15);
        assert!(w.psi_ij(&x, 2, 2).is_err());
        assert!(w.psi_ij(&x, 3, 5).is_err());
        assert!(w.psi_ij(&[0.1; 4], 0, 1).is_err());
    }

    #[test]
    fn big_psi_examples() {
        let w = witness(8, 0.05, PI / 100.0);
        let mut e1 = [0.0; 8];
        e1[0] = 1.0;
        assert_eq!(w.big_psi(&e1).unwrap(), 0.0);
        let s = libm::sqrt(0.5);
        let mut x = [0.0; 8];
        x[0] = s;
        x[1] = s;
        assert_eq!(w.big_psi(&x).unwrap(), w.psi(s, s).unwrap());
    }

    #[test]
    fn active_sum_equals_naive_sum() {
        let w = witness(64, 0.1, 0.02);
        let mut rng = stream_rng(5, 0);
        for t in 0..1000 {
            let x = sparse_point(64, 0.1, t, &mut rng);
            assert_eq!(w.big_psi(&x).unwrap(), w.pair_sum_naive(&x, 64).unwrap());
            assert_eq!(
                w.big_psi_d(&x).unwrap(),
                w.pair_sum_naive(&x, w.params().d()).unwrap()
            );
        }
    }

    /// Ball point with a handful of large coordinates, so that pairs are active.
    fn sparse_point(n: usize, eps: f64, t: usize, rng: &mut crate::geometry::SampleRng) -> Vec<f64> {
        let k = 2 + t % ((1.0 / (eps * eps)) as usize).min(n - 1);
        let mut x = alloc::vec![0.0; n];
        for _ in 0..k {
            let i = rng.random_range(0..n);
            x[i] = rng.random_range(-1.0..1.0);
        }
        let r = norm(&x);
        if r > 0.0 {
            let scale = libm::pow(rng.random::<f64>(), 0.3) / r;
            x.iter_mut().for_each(|v| *v *= scale);
        }
        x
    }

    #[test]
    fn active_indices_examples() {
        let mut x = alloc::vec![0.0; 6];
        x[0] = 0.6;
        x[1] = 0.6;
        x[2] = 0.1;
        assert_eq!(active_indices(&x, 0.5), [0, 1]);
        assert!(active_indices(&[0.0; 4], 0.1).is_empty());
        let mut rng = stream_rng(6, 0);
        for _ in 0..100_000 {
            let x = sample_ball(20, &mut rng);
            assert!(active_indices(&x, 0.1).len() <= 100);
        }
    }

    #[test]
    fn big_psi_gradient() {
        let w = witness(16, 0.1, 0.02);
        let mut rng = stream_rng(7, 0);
        let h = 1e-5;
        for t in 0..1000 {
            let mut x = sparse_point(16, 0.1, t, &mut rng);
            x.iter_mut().for_each(|v| *v *= 0.999);
            let g = w.grad_big_psi(&x).unwrap();
            for k in 0..16 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let fd = (w.big_psi(&xp).unwrap() - w.big_psi(&xm).unwrap()) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-6, "t={t} k={k}: {fd} vs {}", g[k]);
            }
            assert!(norm(&g) <= w.params().sum_lip_bound());
        }
        let mut off = [0.0; 16];
        off[3] = 0.9;
        assert!(w.grad_big_psi(&off).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn big_psi_hyperoctahedral_invariance() {
        let w = witness(10, 0.1, 0.02);
        let d = w.params().d();
        let mut rng = stream_rng(8, 0);
        for t in 0..200 {
            let x = sparse_point(10, 0.1, t, &mut rng);
            let base = w.big_psi(&x).unwrap();
            let base_d = w.big_psi_d(&x).unwrap();
            let mut y: Vec<f64> = x.iter().map(|v| if rng.random::<bool>() { -v } else { *v }).collect();
            assert!((w.big_psi(&y).unwrap() - base).abs() <= 1e-15);
            assert!((w.big_psi_d(&y).unwrap() - base_d).abs() <= 1e-15);
            y.reverse();
            assert!((w.big_psi(&y).unwrap() - base).abs() <= 1e-14);
            let mut z = x.clone();
            z[..d].rotate_left(1);
            z[d..].rotate_right(1);
            assert!((w.big_psi_d(&z).unwrap() - base_d).abs() <= 1e-14);
        }
    }

    #[test]
    fn locality_of_inactive_coordinates() {
        let w = witness(6, 0.2, 0.02);
        let x = [0.5, 0.45, 0.1, 0.0, -0.05, 0.0];
        let base = w.big_psi(&x).unwrap();
        let mut y = x;
        y[2] = 0.15;
        y[4] = -0.19;
        assert_eq!(w.big_psi(&y).unwrap(), base);
    }

    #[test]
    fn outside_ball_is_rejected() {
        let w = witness(3, 0.1, 0.01);
        assert!(matches!(w.psi(1.0, 1.0), Err(Error::OutsideBall { .. })));
        assert!(w.psi(1.0 + 1e-13, 0.0).is_ok());
        assert!(w.big_psi(&[1.0, 0.5, 0.0]).is_err());
    }
}
