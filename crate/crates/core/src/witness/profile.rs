//! The angular profile of the planar witness.
//!
//! `τ₀(θ) = max{π/12 − |θ − π/4|, 0}` is a tent supported on `[π/6, π/3]`.
//! [`SmoothedAngleProfile::build`] replaces it by an explicit piecewise
//! cubic function `τ` with
//!
//! * `τ₀ − δ ≤ τ ≤ τ₀` (in fact `τ₀ − δ/2 ≤ τ`),
//! * `τ(π/4 + s) = τ(π/4 − s)`,
//! * `|τ'| ≤ 1`.
//!
//! Each kink is rounded by letting the slope move between its two one-sided
//! values with a triangular second derivative, so `τ` is even `C²` and its
//! pieces are cubics. The tent interior is lowered by `δ/4` so that the
//! rounded convex corners at `π/6` and `π/3` stay under `τ₀` (a `C¹` function
//! with `τ(π/6) = 0` and slope at most 1 cannot rejoin the rising edge); the
//! apex window has half-width `3δ/4`, which puts `τ(π/4)` at `π/12 − δ/2`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Lower edge of the tent support.
pub const TENT_START: f64 = PI / 6.0;
/// Apex of the tent.
pub const TENT_APEX: f64 = PI / 4.0;
/// Upper edge of the tent support.
pub const TENT_END: f64 = PI / 3.0;
/// Height of the tent.
pub const TENT_HEIGHT: f64 = PI / 12.0;
/// Largest admissible smoothing parameter (exclusive).
pub const DELTA_MAX: f64 = PI / 72.0;

/// `τ₀(θ) = max{π/12 − |θ − π/4|, 0}` on `[0, π/2]`.
pub fn tau0(theta: f64) -> Result<f64> {
    if !(0.0..=PI / 2.0).contains(&theta) {
        return Err(Error::Domain {
            what: "tau0",
            value: theta,
        });
    }
    Ok(tau0_unchecked(theta))
}

pub(crate) fn tau0_unchecked(theta: f64) -> f64 {
    (TENT_HEIGHT - (theta - TENT_APEX).abs()).max(0.0)
}

/// One polynomial piece `c0 + c1·s + c2·s² + c3·s³`, `s = θ − start`, on
/// `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePiece {
    pub start: f64,
    pub end: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl ProfilePiece {
    #[inline]
    pub fn value(&self, theta: f64) -> f64 {
        let s = theta - self.start;
        self.c0 + s * (self.c1 + s * (self.c2 + s * self.c3))
    }

    #[inline]
    pub fn derivative(&self, theta: f64) -> f64 {
        let s = theta - self.start;
        self.c1 + s * (2.0 * self.c2 + 3.0 * s * self.c3)
    }

    /// Exact integral over the piece (Simpson's rule is exact for cubics).
    pub fn integral(&self) -> f64 {
        let mid = 0.5 * (self.start + self.end);
        (self.end - self.start) / 6.0
            * (self.value(self.start) + 4.0 * self.value(mid) + self.value(self.end))
    }
}

/// A continuous piecewise cubic profile on `[0, π/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedAngleProfile {
    delta: f64,
    pieces: Vec<ProfilePiece>,
}

impl SmoothedAngleProfile {
    /// The `C¹` mollification of `τ₀` with parameter `0 < δ < π/72`.
    pub fn build(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < DELTA_MAX) {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                reason: "need 0 < delta < pi/72",
            });
        }
        let lower = delta / 4.0;
        let cap = 0.75 * delta;
        let mut pieces = Vec::with_capacity(11);
        pieces.push(piece(0.0, TENT_START, 0.0, 0.0));
        round_corner(&mut pieces, TENT_START, 2.0 * lower, 0.0, 1.0);
        push_line(&mut pieces, TENT_APEX - cap, 1.0);
        round_corner(&mut pieces, TENT_APEX - cap, 2.0 * cap, 1.0, -1.0);
        push_line(&mut pieces, TENT_END - 2.0 * lower, -1.0);
        round_corner(&mut pieces, TENT_END - 2.0 * lower, 2.0 * lower, -1.0, 0.0);
        pieces.push(piece(TENT_END, PI / 2.0, 0.0, 0.0));
        Ok(Self { delta, pieces })
    }

    /// The unsmoothed tent `τ₀` itself, as a (non-`C¹`) profile with `δ = 0`.
    pub fn tent() -> Self {
        Self {
            delta: 0.0,
            pieces: alloc::vec![
                piece(0.0, TENT_START, 0.0, 0.0),
                piece(TENT_START, TENT_APEX, 0.0, 1.0),
                piece(TENT_APEX, TENT_END, TENT_HEIGHT, -1.0),
                piece(TENT_END, PI / 2.0, 0.0, 0.0),
            ],
        }
    }

    /// Builds a profile from arbitrary pieces.
    ///
    /// The pieces must tile `[0, π/2]` in order and join continuously; no
    /// smoothness, band or symmetry property is checked here (see
    /// [`SmoothedAngleProfile::verify`]).
    pub fn from_pieces(delta: f64, pieces: Vec<ProfilePiece>) -> Result<Self> {
        let first = pieces.first().ok_or(Error::Empty { what: "profile" })?;
        let last = pieces[pieces.len() - 1];
        if first.start != 0.0 || (last.end - PI / 2.0).abs() > 1e-15 {
            return Err(Error::InvalidParameter {
                name: "pieces",
                value: first.start,
                reason: "pieces must cover [0, pi/2]",
            });
        }
        for w in pieces.windows(2) {
            if w[0].end != w[1].start || w[0].start > w[0].end {
                return Err(Error::InvalidParameter {
                    name: "pieces",
                    value: w[0].end,
                    reason: "pieces must be contiguous and ordered",
                });
            }
            if (w[0].value(w[0].end) - w[1].c0).abs() > 1e-12 {
                return Err(Error::InvalidParameter {
                    name: "pieces",
                    value: w[0].end,
                    reason: "profile must be continuous",
                });
            }
        }
        Ok(Self { delta, pieces })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn pieces(&self) -> &[ProfilePiece] {
        &self.pieces
    }

    /// Interior breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.start).collect()
    }

    fn locate(&self, theta: f64) -> &ProfilePiece {
        self.pieces
            .iter()
            .find(|p| theta <= p.end)
            .unwrap_or(&self.pieces[self.pieces.len() - 1])
    }

    /// `τ(θ)`; arguments are clamped into `[0, π/2]`.
    #[inline]
    pub fn value(&self, theta: f64) -> f64 {
        let t = theta.clamp(0.0, PI / 2.0);
        self.locate(t).value(t)
    }

    /// `τ'(θ)`, using the right-hand piece at a breakpoint.
    #[inline]
    pub fn derivative(&self, theta: f64) -> f64 {
        let t = theta.clamp(0.0, PI / 2.0);
        self.pieces
            .iter()
            .find(|p| t < p.end)
            .unwrap_or(&self.pieces[self.pieces.len() - 1])
            .derivative(t)
    }

    /// `∫_0^{π/2} τ`, exact piece by piece.
    pub fn integral(&self) -> f64 {
        self.pieces.iter().map(ProfilePiece::integral).sum()
    }

    /// Maximal mismatch of one-sided derivatives across breakpoints.
    pub fn c1_defect(&self) -> f64 {
        self.pieces
            .windows(2)
            .map(|w| (w[0].derivative(w[0].end) - w[1].derivative(w[1].start)).abs())
            .fold(0.0, f64::max)
    }

    /// Checks the three defining properties on a uniform grid of `grid + 1`
    /// points and reports the worst violations.
    pub fn verify(&self, grid: usize) -> ProfileReport {
        let grid = grid.max(2);
        let mut report = ProfileReport {
            band_violation: 0.0,
            symmetry_defect: 0.0,
            max_slope: 0.0,
            c1_defect: self.c1_defect(),
        };
        for k in 0..=grid {
            let theta = PI / 2.0 * k as f64 / grid as f64;
            let t = self.value(theta);
            let t0 = tau0_unchecked(theta);
            let below = (t0 - self.delta) - t;
            let above = t - t0;
            report.band_violation = report.band_violation.max(below).max(above).max(-t);
            let s = theta - TENT_APEX;
            let mirrored = self.value(TENT_APEX - s);
            report.symmetry_defect = report.symmetry_defect.max((t - mirrored).abs());
            report.max_slope = report.max_slope.max(self.derivative(theta).abs());
        }
        report
    }
}

fn piece(start: f64, end: f64, c0: f64, c1: f64) -> ProfilePiece {
    ProfilePiece {
        start,
        end,
        c0,
        c1,
        c2: 0.0,
        c3: 0.0,
    }
}

fn end_value(pieces: &[ProfilePiece]) -> f64 {
    let last = pieces[pieces.len() - 1];
    last.value(last.end)
}

/// Appends a straight segment from the current end up to `end`.
fn push_line(pieces: &mut Vec<ProfilePiece>, end: f64, slope: f64) {
    let start = pieces[pieces.len() - 1].end;
    let c0 = end_value(pieces);
    pieces.push(piece(start, end, c0, slope));
}

/// Appends two cubics on `[start, start + width]` along which the slope moves
/// from `from` to `to` with a triangular second derivative of peak
/// `2(to − from)/width`.
fn round_corner(pieces: &mut Vec<ProfilePiece>, start: f64, width: f64, from: f64, to: f64) {
    let half = 0.5 * width;
    let peak = 2.0 * (to - from) / width;
    let c0 = end_value(pieces);
    let rising = ProfilePiece {
        start,
        end: start + half,
        c0,
        c1: from,
        c2: 0.0,
        c3: peak / (3.0 * width),
    };
    let mid = rising.value(rising.end);
    let falling = ProfilePiece {
        start: start + half,
        end: start + width,
        c0: mid,
        c1: 0.5 * (from + to),
        c2: 0.5 * peak,
        c3: -peak / (3.0 * width),
    };
    pieces.push(rising);
    pieces.push(falling);
}

/// Worst-case defects of a profile; all should be (near) zero except
/// `max_slope`, which must not exceed 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileReport {
    /// Largest amount by which `τ` leaves `[max(τ₀ − δ, 0), τ₀]`.
    pub band_violation: f64,
    pub symmetry_defect: f64,
    pub max_slope: f64,
    pub c1_defect: f64,
}

impl ProfileReport {
    pub fn is_admissible(&self) -> bool {
        self.band_violation <= 1e-15
            && self.symmetry_defect <= 1e-14
            && self.max_slope <= 1.0 + 1e-12
            && self.c1_defect <= 1e-12
    }
}
