use std::f64::consts::PI;

use polyproj_core::geometry::{norm, sample_ball, stream_rng, SampleRng};
use polyproj_core::witness::{
    estimate_lip, SamplerConfig, SmoothFunction, SmoothedAngleProfile, Witness, WitnessParams,
};
use rand::Rng;
use serde::Serialize;

use crate::config::{parse_auto, parse_single, Settings};
use crate::error::CliError;
use crate::output::{csv_string, emit, json_string, summary, Field, Format, Num};

pub const DEFAULT_N: usize = 8;
pub const DEFAULT_EPS: f64 = 0.3;
pub const DEFAULT_DELTA: f64 = PI / 100.0;
pub const DEFAULT_SAMPLES: usize = 10_000;
/// Gradient/finite-difference agreement.
pub const FD_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-6;
/// Slope multiplier of the faulty profile.
const CORRUPTION: f64 = 4.0;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: &'static str,
    pub passed: bool,
    /// Worst sampled value.
    pub value: Num,
    pub limit: Num,
    pub seed: u64,
}

fn record(name: &'static str, value: f64, limit: f64, seed: u64) -> CheckRecord {
    CheckRecord {
        name,
        passed: value <= limit,
        value: Num(value),
        limit: Num(limit),
        seed,
    }
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    n: usize,
    eps: Num,
    delta: Num,
    seed: u64,
    samples: usize,
    corrupt_tau: bool,
    passed: bool,
    checks: &'a [CheckRecord],
}

fn corrupted(delta: f64) -> Result<SmoothedAngleProfile, CliError> {
    let good = SmoothedAngleProfile::build(delta)?;
    let pieces = good
        .pieces()
        .iter()
        .map(|p| {
            let mut p = *p;
            p.c0 *= CORRUPTION;
            p.c1 *= CORRUPTION;
            p.c2 *= CORRUPTION;
            p.c3 *= CORRUPTION;
            p
        })
        .collect();
    Ok(SmoothedAngleProfile::from_pieces(delta, pieces)?)
}

/// Points whose support fits the active-coordinate budget, inside radius
/// `1 − 1e-5` so finite-difference stencils stay in the ball.
fn sparse_points(dim: usize, eps: f64, count: usize, rng: &mut SampleRng) -> Vec<Vec<f64>> {
    let budget = ((1.0 / (eps * eps)) as usize).clamp(2, dim);
    (0..count)
        .map(|k| {
            let mut x = vec![0.0; dim];
            if k % 2 == 0 {
                x = sample_ball(dim, rng);
            } else {
                let s = rng.random_range(2..=budget);
                let mut idx: Vec<usize> = (0..dim).collect();
                for t in 0..s {
                    let j = rng.random_range(t..dim);
                    idx.swap(t, j);
                }
                let dir = sample_ball(s, rng);
                let r = norm(&dir).max(1e-300);
                let radius = rng.random_range(0.3..1.0);
                for (t, v) in dir.iter().enumerate() {
                    x[idx[t]] = v / r * radius;
                }
            }
            x.iter_mut().for_each(|v| *v *= 1.0 - 1e-5);
            x
        })
        .collect()
}

fn fd_residual<F: SmoothFunction>(f: &F, points: &[Vec<f64>]) -> Result<f64, CliError> {
    let mut g = vec![0.0; f.dim()];
    let mut worst = 0.0f64;
    for x in points {
        f.gradient(x, &mut g)?;
        let mut y = x.clone();
        for i in 0..x.len() {
            y[i] = x[i] + FD_STEP;
            let up = f.value(&y)?;
            y[i] = x[i] - FD_STEP;
            let down = f.value(&y)?;
            y[i] = x[i];
            worst = worst.max(((up - down) / (2.0 * FD_STEP) - g[i]).abs());
        }
    }
    Ok(worst)
}

fn lip_config(samples: usize, seed: u64, support: Option<usize>) -> SamplerConfig {
    SamplerConfig {
        uniform: samples,
        sphere: samples / 4,
        shell: samples,
        shell_inner: 0.3,
        shell_support: support,
        fd_checks: 0,
        seed,
        ..SamplerConfig::default()
    }
}

pub fn run_checks(n: usize, eps: f64, delta: f64, samples: usize, seed: u64, corrupt: bool) -> Result<Vec<CheckRecord>, CliError> {
    let params = WitnessParams::new(n, eps, delta)?;
    let tau = if corrupt { corrupted(delta)? } else { SmoothedAngleProfile::build(delta)? };
    let report = tau.verify(10_000);
    let w = Witness::with_profile(params, tau);
    let mut rng = stream_rng(seed, 0);
    let mut checks = Vec::new();

    let admissible = if report.is_admissible() { 0.0 } else { 1.0 };
    checks.push(record("angle-profile-admissible", admissible, 0.0, seed));
    checks.push(record("angle-profile-slope", report.max_slope, 1.0 + 1e-12, seed));

    // support and symmetry of the planar witness
    let mut support = 0.0f64;
    let mut symmetry = 0.0f64;
    let mut swap = 0.0f64;
    for _ in 0..samples {
        let p = sample_ball(2, &mut rng);
        let (x, y) = (p[0], p[1]);
        let v = w.psi(x, y)?;
        if x.abs() < eps || y.abs() < eps {
            support = support.max(v.abs());
        }
        for u in [w.psi(-x, y)?, w.psi(x, -y)?, w.psi(-x, -y)?] {
            symmetry = symmetry.max((u - v).abs());
        }
        swap = swap.max((w.psi(y, x)? - v).abs());
    }
    checks.push(record("planar-support", support, 0.0, seed));
    checks.push(record("planar-symmetry", symmetry, 0.0, seed));
    // reflection of the angle about π/4, exact only up to rounding
    checks.push(record("planar-swap-symmetry", swap, 1e-15, seed));

    // gradients against central differences
    let planar_points = sparse_points(2, eps, samples, &mut rng);
    let spatial_points = sparse_points(n, eps, samples, &mut rng);
    let fd = fd_residual(&w.planar(), &planar_points)?
        .max(fd_residual(&w.full_sum(), &spatial_points)?)
        .max(fd_residual(&w.leading_sum(), &spatial_points)?);
    checks.push(record("gradient-consistency", fd, FD_TOL, seed));

    // sampled Lipschitz constants against the analytic caps
    let planar = estimate_lip(&w.planar(), &lip_config(samples, seed, None))?;
    checks.push(record("planar-lipschitz", planar.lower, 2.0, seed));
    let cap = 1.0 / (eps * eps * eps * eps);
    let support_cap = Some(((1.0 / (eps * eps)) as usize).max(2));
    let full = estimate_lip(&w.full_sum(), &lip_config(samples, seed.wrapping_add(1), support_cap))?;
    checks.push(record("sum-lipschitz", full.lower, cap, seed.wrapping_add(1)));
    let lead = estimate_lip(&w.leading_sum(), &lip_config(samples, seed.wrapping_add(2), support_cap))?;
    checks.push(record("leading-sum-lipschitz", lead.lower, cap, seed.wrapping_add(2)));

    // invariance of the full sum under signed permutations
    let mut invariance = 0.0f64;
    for x in spatial_points.iter().take(samples.min(2_000)) {
        let mut y = x.clone();
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        y.swap(i, j);
        y[rng.random_range(0..n)] *= -1.0;
        let (a, b) = (w.big_psi(x)?, w.big_psi(&y)?);
        invariance = invariance.max((a - b).abs() / a.abs().max(1.0));
    }
    checks.push(record("sum-invariance", invariance, 1e-15, seed));
    Ok(checks)
}

pub fn witness_check(s: &Settings) -> Result<String, CliError> {
    let n = parse_single("n", s.n.as_deref().unwrap_or(&DEFAULT_N.to_string()))?;
    let eps = parse_auto("eps", s.eps.as_deref().unwrap_or("auto"))?.unwrap_or(DEFAULT_EPS);
    let delta = parse_auto("delta", s.delta.as_deref().unwrap_or("auto"))?.unwrap_or(DEFAULT_DELTA);
    let samples = s.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    if samples > 10_000_000 {
        return Err(CliError::Resource(format!("--samples {samples} exceeds 10000000")));
    }
    let seed = s.seed.unwrap_or(0);
    let checks = run_checks(n, eps, delta, samples, seed, s.corrupt_tau)?;
    let passed = checks.iter().all(|c| c.passed);
    let text = match s.format.unwrap_or(Format::Json) {
        Format::Json => json_string(&Report {
            command: "witness-check",
            n,
            eps: Num(eps),
            delta: Num(delta),
            seed,
            samples,
            corrupt_tau: s.corrupt_tau,
            passed,
            checks: &checks,
        })?,
        Format::Csv => csv_string(
            &["name", "passed", "value", "limit", "seed"],
            &checks
                .iter()
                .map(|c| {
                    vec![
                        Field::Text(c.name.into()),
                        Field::Bool(c.passed),
                        Field::Float(c.value.0),
                        Field::Float(c.limit.0),
                        Field::Int(c.seed as i64),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    };
    emit(s.out.as_deref(), &text)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if !failed.is_empty() {
        return Err(CliError::Check(failed.join(", ")));
    }
    Ok(summary(&[("checks passed", checks.len().to_string())]))
}
