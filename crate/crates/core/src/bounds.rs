//! The closing arithmetic: from the Lipschitz constants of `Q(Ψ)` and
//! `Q(Ψ_d)` and the lower bound on `α` to `‖Q‖ ≥ C(n − 2√2)^{1/5}`.
//!
//! The last inequality contains the unknown norm `K` on both sides. It is
//! solved for `K` once and for all: either `2εK ≤ 1`, and then
//! `K ≥ c_δ·A / (1/ε⁴ + 2ε·c_δ·A)` with `A = n − 2√2`, or `K > 1/(2ε)`.

use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::witness::floor_div_sqrt2;
use crate::witness::profile::DELTA_MAX;

/// `λ* = (2/3)(√2 + 2)`, where both case constants meet.
pub const LAMBDA_STAR: f64 = 2.0 / 3.0 * (SQRT_2 + 2.0);

/// `(2/3)(√2 − 1)`, the common value of `λ* − 2` and `√2 − λ*/2`.
pub const BRANCH_CONSTANT: f64 = 2.0 / 3.0 * (SQRT_2 - 1.0);

/// Smallest `δ` used by the optimizers. Any `δ > 0` leaves the solved bound
/// a relative `≈ 23·δ` below its `δ → 0` limit.
pub const DELTA_FLOOR: f64 = 1e-15;

/// `c = (2/3)(√2 − 1)·π/72`.
pub fn c_const() -> f64 {
    BRANCH_CONSTANT * DELTA_MAX
}

/// `C = (2^{4/5}/5)·c^{1/5}`.
pub fn big_c_const() -> f64 {
    libm::pow(2.0, 0.8) / 5.0 * libm::pow(c_const(), 0.2)
}

/// `n − 2√2`, which must be positive.
fn excess(n: usize) -> Result<f64> {
    let a = n as f64 - 2.0 * SQRT_2;
    if n < 3 || a <= 0.0 {
        return Err(Error::InvalidDimension { dim: n, min: 3 });
    }
    Ok(a)
}

/// `Lip(Q(Ψ)) = 2|α(n−1) + β(n−1)(n−2)/2|` for `Q(ψ₁₂) = αN₂ + β(N − N₂)`.
pub fn lip_q_psi(alpha: f64, beta: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidDimension { dim: n, min: 3 });
    }
    let m = n as f64;
    Ok(2.0 * (alpha * (m - 1.0) + beta * (m - 1.0) * (m - 2.0) / 2.0).abs())
}

/// `2|α(d−1) + β(d−1)(d−2)/2|`, a lower bound on `Lip(Q(Ψ_d))` obtained by
/// restricting to the first `d` coordinates.
pub fn lip_q_psi_d_lb(alpha: f64, beta: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension { dim: d, min: 2 });
    }
    let m = d as f64;
    Ok(2.0 * (alpha * (m - 1.0) + beta * (m - 1.0) * (m - 2.0) / 2.0).abs())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 2.0 && lambda < 2.0 * SQRT_2) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "need 2 < lambda < 2*sqrt(2)",
        });
    }
    Ok(())
}

/// `min{(λ−2)|α|(n−1), (√2−λ/2)|α|(n−2√2)}`, the guaranteed value of
/// `max{Lip(Q(Ψ)), Lip(Q(Ψ_d))}` for the case threshold `λ`.
pub fn case_split_bound(alpha: f64, n: usize, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let a = excess(n)?;
    let large = (lambda - 2.0) * alpha.abs() * (n as f64 - 1.0);
    let small = (SQRT_2 - lambda / 2.0) * alpha.abs() * a;
    Ok(large.min(small))
}

/// The same bound with both cases weakened to the factor `n − 2√2`:
/// `min{λ−2, √2−λ/2}·|α|(n−2√2)`. This is the form optimized by `λ*`.
pub fn case_split_uniform_bound(alpha: f64, n: usize, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let a = excess(n)?;
    Ok((lambda - 2.0).min(SQRT_2 - lambda / 2.0) * alpha.abs() * a)
}

/// Which branch of the case split applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundCase {
    /// `|β| ≥ λ|α|/(n−2)`: `Q(Ψ)` carries the bound.
    BetaLarge,
    /// `|β| < λ|α|/(n−2)`: `Q(Ψ_d)` carries the bound.
    BetaSmall,
    /// `2εK > 1`, so `K > 1/(2ε)` directly. The solved first branch is
    /// strictly below `1/(2ε)`, so this label only appears if rounding
    /// makes the two meet.
    EpsLarge,
}

impl BoundCase {
    pub fn label(self) -> &'static str {
        match self {
            BoundCase::BetaLarge => "beta-large",
            BoundCase::BetaSmall => "beta-small",
            BoundCase::EpsLarge => "eps-large",
        }
    }
}

/// Term-by-term evaluation of the case argument at `λ*`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseCheck {
    pub case: BoundCase,
    /// Successive lines of the inequality chain; each should dominate the
    /// next. The last entry is `(2/3)(√2−1)|α|(n−2√2)`.
    pub chain: Vec<f64>,
    /// Smallest `(line_i − line_{i+1}) / max(1, |line_i|, |line_{i+1}|)`.
    pub slack: f64,
}

/// Decides the case for `(α, β, n)` at `λ*` and evaluates every line of the
/// corresponding chain of inequalities.
pub fn verify_case_split(alpha: f64, beta: f64, n: usize) -> Result<CaseCheck> {
    let a = excess(n)?;
    let m = n as f64;
    let lambda = LAMBDA_STAR;
    let (aa, ab) = (alpha.abs(), beta.abs());
    let bound = BRANCH_CONSTANT * aa * a;
    let (case, chain) = if ab >= lambda * aa / (m - 2.0) {
        let chain = alloc::vec![
            lip_q_psi(alpha, beta, n)?,
            ab * (m - 1.0) * (m - 2.0) - 2.0 * aa * (m - 1.0),
            (lambda - 2.0) * aa * (m - 1.0),
            bound,
        ];
        (BoundCase::BetaLarge, chain)
    } else {
        let d = floor_div_sqrt2(n);
        let dm = d as f64;
        let chain = alloc::vec![
            lip_q_psi_d_lb(alpha, beta, d)?,
            2.0 * aa * (dm - 1.0) - ab * (dm - 1.0) * (dm - 2.0),
            2.0 * aa * (dm - 1.0) - lambda * aa * (dm - 1.0) * (dm - 2.0) / (m - 2.0),
            2.0 * aa * (dm - 1.0) - lambda * aa * (dm - 1.0) / SQRT_2,
            aa * (dm - 1.0) * (2.0 - lambda / SQRT_2),
            (SQRT_2 - lambda / 2.0) * aa * a,
            bound,
        ];
        (BoundCase::BetaSmall, chain)
    };
    let slack = chain
        .windows(2)
        .map(|w| (w[0] - w[1]) / 1f64.max(w[0].abs()).max(w[1].abs()))
        .fold(f64::INFINITY, f64::min);
    Ok(CaseCheck { case, chain, slack })
}

/// `(π/72 − δ)(1 − 2εK)`, clamped at 0 once `2εK ≥ 1`.
pub fn alpha_lower_bound(eps: f64, delta: f64, k: f64) -> Result<f64> {
    check_delta(delta)?;
    check_eps(eps)?;
    if !k.is_finite() || k < 0.0 {
        return Err(Error::InvalidParameter {
            name: "K",
            value: k,
            reason: "need a finite K >= 0",
        });
    }
    Ok(((DELTA_MAX - delta) * (1.0 - 2.0 * eps * k)).max(0.0))
}

/// `C·(n − 2√2)^{1/5}`.
pub fn closed_form_bound(n: usize) -> Result<f64> {
    Ok(big_c_const() * libm::pow(excess(n)?, 0.2))
}

/// `ε = 2^{1/5} / (c^{1/5}(n − 2√2)^{1/5})`, the minimizer of
/// `1/ε⁴ + 2εc(n−2√2)`.
pub fn closed_form_eps(n: usize) -> Result<f64> {
    let a = excess(n)?;
    Ok(libm::pow(2.0, 0.2) / (libm::pow(c_const(), 0.2) * libm::pow(a, 0.2)))
}

/// `1/ε⁴ + 2εc(n − 2√2)`.
pub fn bracket(n: usize, eps: f64) -> Result<f64> {
    let a = excess(n)?;
    let e2 = eps * eps;
    Ok(1.0 / (e2 * e2) + 2.0 * eps * c_const() * a)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < DELTA_MAX) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            reason: "need 0 < delta < pi/72",
        });
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            reason: "need a finite eps > 0",
        });
    }
    Ok(())
}

/// Outcome of the closing step for one parameter choice, or of a search.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    /// Polynomial degree; 2 for the quadratic case.
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub lambda: f64,
    pub c: f64,
    pub big_c: f64,
    pub case: BoundCase,
    /// Solved bound at `(eps, delta)`.
    pub k_lower: f64,
    /// `C(n − 2√2)^{1/5}`.
    pub closed_form_k_lower: f64,
    /// Best solved bound found by a search; equals `k_lower` for a single
    /// evaluation.
    pub optimizer_k_lower: f64,
}

/// Solved bound for degree `k`: the Lipschitz budget is `k/(2ε⁴)` and `α`
/// gains the factor `k − 1`.
fn solved(a: f64, k: usize, eps: f64, delta: f64) -> (f64, BoundCase) {
    let cd = BRANCH_CONSTANT * (DELTA_MAX - delta) * (k as f64 - 1.0);
    let e2 = eps * eps;
    let budget = k as f64 / 2.0 / (e2 * e2);
    let first = cd * a / (budget + 2.0 * eps * cd * a);
    let second = 1.0 / (2.0 * eps);
    if first <= second {
        (first, BoundCase::BetaSmall)
    } else {
        (second, BoundCase::EpsLarge)
    }
}

fn report(n: usize, k: usize, eps: f64, delta: f64) -> Result<BoundReport> {
    if k < 2 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k as f64,
            reason: "degree must be at least 2",
        });
    }
    check_eps(eps)?;
    check_delta(delta)?;
    let a = excess(n)?;
    let (k_lower, case) = solved(a, k, eps, delta);
    Ok(BoundReport {
        n,
        k,
        eps,
        delta,
        lambda: LAMBDA_STAR,
        c: c_const(),
        big_c: big_c_const(),
        case,
        k_lower,
        closed_form_k_lower: closed_form_bound(n)?,
        optimizer_k_lower: k_lower,
    })
}

/// `K ≥ min{c_δ(n−2√2)/(1/ε⁴ + 2εc_δ(n−2√2)), 1/(2ε)}` with
/// `c_δ = (2/3)(√2−1)(π/72 − δ)`.
///
/// `ε` may be any positive number: the closing argument never evaluates the
/// witness, so the `ε < 1/2` restriction of the witness does not apply.
pub fn combined_bound(n: usize, eps: f64, delta: f64) -> Result<BoundReport> {
    report(n, 2, eps, delta)
}

/// [`combined_bound`] for degree-`k` polynomials.
pub fn combined_bound_degree(n: usize, k: usize, eps: f64, delta: f64) -> Result<BoundReport> {
    report(n, k, eps, delta)
}

/// 241 log-spaced values of `ε` spanning `[ε*/100, 100·ε*]` around the
/// closed-form `ε*`.
pub fn default_eps_grid(n: usize) -> Result<Vec<f64>> {
    let center = closed_form_eps(n)?;
    Ok((0..=240)
        .map(|i| center * libm::pow(10.0, -2.0 + i as f64 / 60.0))
        .collect())
}

pub fn default_delta_grid() -> Vec<f64> {
    alloc::vec![DELTA_FLOOR, 1e-12, 1e-9, 1e-6, 1e-3]
}

/// Maximizes the solved bound over the grids, then refines `ε` by golden
/// section between the neighbours of the best grid point. The closed-form
/// `ε*` is always tried as well.
pub fn optimize_bound(n: usize, eps_grid: &[f64], delta_grid: &[f64]) -> Result<BoundReport> {
    optimize_degree(n, 2, eps_grid, delta_grid)
}

fn optimize_degree(n: usize, k: usize, eps_grid: &[f64], delta_grid: &[f64]) -> Result<BoundReport> {
    if eps_grid.is_empty() {
        return Err(Error::Empty { what: "eps grid" });
    }
    if delta_grid.is_empty() {
        return Err(Error::Empty { what: "delta grid" });
    }
    let mut eps_sorted = eps_grid.to_vec();
    for &e in &eps_sorted {
        check_eps(e)?;
    }
    eps_sorted.sort_by(f64::total_cmp);
    eps_sorted.dedup();
    let mut best: Option<BoundReport> = None;
    let consider = |r: BoundReport, best: &mut Option<BoundReport>| {
        if best.as_ref().is_none_or(|b| r.k_lower > b.k_lower) {
            *best = Some(r);
        }
    };
    let mut best_index = 0;
    for &delta in delta_grid {
        for (i, &eps) in eps_sorted.iter().enumerate() {
            let r = report(n, k, eps, delta)?;
            let better = best.as_ref().is_none_or(|b| r.k_lower > b.k_lower);
            consider(r, &mut best);
            if better {
                best_index = i;
            }
        }
    }
    let grid_best = best.clone().ok_or(Error::Empty { what: "grid" })?;
    let delta = grid_best.delta;
    let lo = eps_sorted[best_index.saturating_sub(1)];
    let hi = eps_sorted[(best_index + 1).min(eps_sorted.len() - 1)];
    if hi > lo {
        let eps = golden_section_max(libm::log(lo), libm::log(hi), 200, |t| {
            let a = n as f64 - 2.0 * SQRT_2;
            solved(a, k, libm::exp(t), delta).0
        });
        consider(report(n, k, libm::exp(eps), delta)?, &mut best);
    }
    consider(report(n, k, closed_form_eps(n)?, delta)?, &mut best);
    let mut out = best.ok_or(Error::Empty { what: "grid" })?;
    out.optimizer_k_lower = out.k_lower;
    Ok(out)
}

/// Argmax of a unimodal `f` on `[a, b]`.
fn golden_section_max(mut a: f64, mut b: f64, iterations: usize, f: impl Fn(f64) -> f64) -> f64 {
    let ratio = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iterations {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
        if b - a <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

/// Optimized solved bound for `k`-homogeneous polynomials.
pub fn higher_order_bound(n: usize, k: usize) -> Result<BoundReport> {
    if k < 2 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k as f64,
            reason: "degree must be at least 2",
        });
    }
    optimize_degree(n, k, &default_eps_grid(n)?, &default_delta_grid())
}

/// One row of a bound table.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub n: usize,
    pub k: usize,
    pub closed_form_bound: f64,
    pub optimizer_bound: f64,
    pub eps_star: f64,
    pub delta: f64,
    pub case: BoundCase,
}

/// Optimized bounds for every `n` of the list, in order.
pub fn bound_table(ns: &[usize], k: usize) -> Result<Vec<BoundRow>> {
    ns.iter()
        .map(|&n| {
            let r = higher_order_bound(n, k)?;
            Ok(BoundRow {
                n,
                k,
                closed_form_bound: r.closed_form_k_lower,
                optimizer_bound: r.optimizer_k_lower,
                eps_star: r.eps,
                delta: r.delta,
                case: r.case,
            })
        })
        .collect()
}
