use std::f64::consts::PI;

use nalgebra::DMatrix;
use polyproj_core::averaging::{
    average_function_mc, compute_eta, extract_alpha_beta, so2_average_psi_closed, symmetrize_map_on_witness,
    AveragingGroup, ConstantMap, EquivariantMap,
};
use polyproj_core::geometry::{sample_ball, stream_rng, EuclideanVector};
use polyproj_core::polynomials::Quadratic;
use polyproj_core::witness::{Witness, WitnessParams};
use rand::Rng;
use serde::Serialize;

use crate::commands::witness::CheckRecord;
use crate::config::{parse_auto, parse_single, Settings};
use crate::error::CliError;
use crate::output::{csv_string, emit, json_string, nums, summary, Field, Format, Num};

pub const DEFAULT_N: usize = 6;
pub const DEFAULT_EPS: f64 = 0.2;
pub const DEFAULT_DELTA: f64 = PI / 100.0;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const TEST_POINTS: usize = 20;
/// Allowed `|mc − closed form|` in standard errors.
pub const STDERR_TOL: f64 = 4.0;
/// Required shrink factor of the invariance residual from `m/64` to `m`
/// samples (the Monte-Carlo rate predicts 8).
pub const RESIDUAL_SHRINK: f64 = 2.0;
/// Haar samples used for the map symmetrization.
const MAP_SAMPLE_CAP: usize = 20_000;

#[derive(Debug, Clone, Serialize)]
pub struct McRecord {
    pub m: usize,
    pub seed: u64,
    pub point: Vec<Num>,
    pub mc_value: Num,
    pub closed_form: Num,
    pub stderr: Num,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    n: usize,
    eps: Num,
    delta: Num,
    seed: u64,
    samples: usize,
    eta: Num,
    eta_error_bound: Num,
    passed: bool,
    checks: &'a [CheckRecord],
    records: &'a [McRecord],
}

fn check(name: &'static str, value: f64, limit: f64, seed: u64) -> CheckRecord {
    CheckRecord {
        name,
        passed: value <= limit,
        value: Num(value),
        limit: Num(limit),
        seed,
    }
}

pub fn average_check(s: &Settings) -> Result<String, CliError> {
    let n = parse_single("n", s.n.as_deref().unwrap_or(&DEFAULT_N.to_string()))?;
    let eps = parse_auto("eps", s.eps.as_deref().unwrap_or("auto"))?.unwrap_or(DEFAULT_EPS);
    let delta = parse_auto("delta", s.delta.as_deref().unwrap_or("auto"))?.unwrap_or(DEFAULT_DELTA);
    let m = s.samples.unwrap_or(DEFAULT_SAMPLES);
    if m < 64 {
        return Err(CliError::Usage("--samples must be at least 64".into()));
    }
    if m > 100_000_000 {
        return Err(CliError::Resource(format!("--samples {m} exceeds 100000000")));
    }
    let seed = s.seed.unwrap_or(0);
    let params = WitnessParams::new(n, eps, delta)?;
    let witness = Witness::new(params)?;
    let mut checks = Vec::new();

    // angular mean and its band
    let (eta, eta_err) = match compute_eta(witness.profile(), 1024) {
        Ok(e) => {
            checks.push(check("eta-band", 0.0, 0.0, seed));
            (e.value, e.error_bound)
        }
        Err(polyproj_core::Error::EtaBand { eta, .. }) => {
            checks.push(check("eta-band", 1.0, 0.0, seed));
            (eta, f64::NAN)
        }
        Err(e) => return Err(e.into()),
    };

    // Monte-Carlo planar average against its closed form
    let mut rng = stream_rng(seed, 1);
    let avg = average_function_mc(|x: &[f64]| witness.psi_ij(x, 0, 1), n, AveragingGroup::PlanarRotations, m, seed)?;
    let mut records = Vec::with_capacity(TEST_POINTS);
    let mut worst = 0.0f64;
    for _ in 0..TEST_POINTS {
        let x = sample_ball(n, &mut rng);
        let v = avg.eval(&x)?;
        let closed = so2_average_psi_closed(&EuclideanVector::new(x.clone())?, &params, eta)?;
        let z = if v.stderr > 0.0 {
            (v.mean - closed).abs() / v.stderr
        } else if v.mean == closed {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
        records.push(McRecord {
            m,
            seed,
            point: nums(&x),
            mc_value: Num(v.mean),
            closed_form: Num(closed),
            stderr: Num(v.stderr),
        });
    }
    checks.push(check("planar-average-closed-form", worst, STDERR_TOL, seed));

    // symmetrized synthetic maps
    let upper: Vec<f64> = (0..n * (n + 1) / 2).map(|_| rng.random_range(-1.0..1.0)).collect();
    let constant = ConstantMap(Quadratic::from_upper(n, &upper)?);
    let big = m.min(MAP_SAMPLE_CAP);
    let small = (big / 64).max(1);
    let coarse = extract_alpha_beta(&symmetrize_map_on_witness(&witness, &constant, small, seed)?).residual;
    let fine = extract_alpha_beta(&symmetrize_map_on_witness(&witness, &constant, big, seed.wrapping_add(1))?).residual;
    checks.push(check("invariance-residual-decay", fine * RESIDUAL_SHRINK, coarse, seed));

    let image = Quadratic::from_matrix(DMatrix::from_fn(n, n, |i, j| if i == j { if i < 2 { 1.0 } else { 0.5 } } else { 0.0 }))?;
    let fixed = symmetrize_map_on_witness(&witness, &EquivariantMap(image.clone()), small, seed)?;
    let drift = (fixed.matrix() - image.matrix()).amax();
    checks.push(check("equivariant-map-fixed", drift, 1e-12, seed));

    let passed = checks.iter().all(|c| c.passed);
    let text = match s.format.unwrap_or(Format::Json) {
        Format::Json => json_string(&Report {
            command: "average-check",
            n,
            eps: Num(eps),
            delta: Num(delta),
            seed,
            samples: m,
            eta: Num(eta),
            eta_error_bound: Num(eta_err),
            passed,
            checks: &checks,
            records: &records,
        })?,
        Format::Csv => {
            let rows: Vec<Vec<Field>> = records
                .iter()
                .map(|r| {
                    vec![
                        Field::Int(r.m as i64),
                        Field::Int(r.seed as i64),
                        Field::Text(r.point.iter().map(|v| crate::output::significant(v.0, crate::output::CSV_DIGITS)).collect::<Vec<_>>().join(" ")),
                        Field::Float(r.mc_value.0),
                        Field::Float(r.closed_form.0),
                        Field::Float(r.stderr.0),
                    ]
                })
                .collect();
            csv_string(&["m", "seed", "point", "mc_value", "closed_form", "stderr"], &rows)?
        }
    };
    emit(s.out.as_deref(), &text)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if !failed.is_empty() {
        return Err(CliError::Check(failed.join(", ")));
    }
    Ok(summary(&[
        ("eta", crate::output::significant(eta, 17)),
        ("max |mc - closed| / stderr", crate::output::significant(worst, 6)),
    ]))
}
