use std::time::Instant;

use polyproj_core::oracle::{build_net, minimize_projection_norm, quadratic_basis, restricted_basis_matrix, NetScheme};
use serde::Serialize;

use crate::commands::witness::CheckRecord;
use crate::config::{parse_list, parse_single, Scheme, Settings};
use crate::error::CliError;
use crate::formats::ProjectionRecord;
use crate::output::{csv_string, emit, json_string, significant, summary, Field, Format, Num};

pub const DEFAULT_N: usize = 1;
pub const DEFAULT_RESOLUTIONS: &str = "4,8,16";
pub const DEFAULT_RESTARTS: usize = 3;
/// Largest net handed to the minimizer.
pub const MAX_MINIMIZER_POINTS: usize = 200;
/// Slack below 1 tolerated for a minimized norm.
pub const NORM_FLOOR_TOL: f64 = 1e-12;
/// Allowed ratio between the largest and smallest minimized norm.
pub const STABILITY_RATIO: f64 = 1.05;
const MAX_RESTARTS: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub n: usize,
    pub resolution: usize,
    pub points: usize,
    pub subspace_dim: usize,
    pub minimized_norm: Num,
    pub lower_bound: Num,
    pub restarts: usize,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<Num>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    scheme: &'static str,
    seed: u64,
    passed: bool,
    rows: &'a [OracleRow],
    checks: &'a [CheckRecord],
}

fn scheme_of(s: Scheme, seed: u64) -> NetScheme {
    match s {
        Scheme::Grid => NetScheme::Grid,
        Scheme::Shells => NetScheme::Shells,
        Scheme::Random => NetScheme::Random { seed },
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Grid => "grid",
        Scheme::Shells => "shells",
        Scheme::Random => "random",
    }
}

pub fn oracle(s: &Settings) -> Result<String, CliError> {
    let n = parse_single("n", s.n.as_deref().unwrap_or(&DEFAULT_N.to_string()))?;
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let resolutions = parse_list("resolutions", s.resolutions.as_deref().unwrap_or(DEFAULT_RESOLUTIONS))?;
    let restarts = s.restarts.unwrap_or(DEFAULT_RESTARTS);
    if restarts == 0 || restarts > MAX_RESTARTS {
        return Err(CliError::Usage(format!("--restarts must be in 1..={MAX_RESTARTS}")));
    }
    if s.eps.is_some() || s.delta.is_some() || s.k.is_some() {
        return Err(CliError::Usage("oracle takes no --k, --eps or --delta".into()));
    }
    let scheme = s.scheme.unwrap_or(Scheme::Grid);
    let seed = s.seed.unwrap_or(0);
    let basis = quadratic_basis(n)?;

    let mut rows = Vec::with_capacity(resolutions.len());
    let mut records = Vec::with_capacity(resolutions.len());
    for (idx, &res) in resolutions.iter().enumerate() {
        let net = build_net(n, res, scheme_of(scheme, seed.wrapping_add(idx as u64)))?;
        if net.len() > MAX_MINIMIZER_POINTS {
            return Err(CliError::Resource(format!(
                "resolution {res} gives {} points; the minimizer accepts at most {MAX_MINIMIZER_POINTS}",
                net.len()
            )));
        }
        let b = restricted_basis_matrix(&net, &basis)?;
        let start = Instant::now();
        let best = minimize_projection_norm(&net, &b, restarts, seed)?;
        let elapsed = start.elapsed().as_secs_f64();
        rows.push(OracleRow {
            n,
            resolution: res,
            points: net.len(),
            subspace_dim: b.ncols(),
            minimized_norm: Num(best.norm),
            lower_bound: Num(best.lower_bound),
            restarts,
            iterations: best.iterations,
            wall_time_s: s.timing.then_some(Num(elapsed)),
        });
        if s.projections.is_some() {
            records.push(ProjectionRecord::new(&net, &best.projection));
        }
    }

    let norms: Vec<f64> = rows.iter().map(|r| r.minimized_norm.0).collect();
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let checks = vec![
        CheckRecord {
            name: "minimal-norm-at-least-one",
            passed: lo >= 1.0 - NORM_FLOOR_TOL,
            value: Num(lo),
            limit: Num(1.0 - NORM_FLOOR_TOL),
            seed,
        },
        CheckRecord {
            name: "cross-resolution-stability",
            passed: hi <= STABILITY_RATIO * lo,
            value: Num(hi / lo),
            limit: Num(STABILITY_RATIO),
            seed,
        },
    ];
    let passed = checks.iter().all(|c| c.passed);

    let text = match s.format.unwrap_or(Format::Csv) {
        Format::Json => json_string(&Report {
            command: "oracle",
            scheme: scheme_name(scheme),
            seed,
            passed,
            rows: &rows,
            checks: &checks,
        })?,
        Format::Csv => {
            let mut header = vec![
                "n",
                "resolution",
                "points",
                "subspace_dim",
                "minimized_norm",
                "lower_bound",
                "restarts",
                "iterations",
            ];
            if s.timing {
                header.push("wall_time_s");
            }
            let body: Vec<Vec<Field>> = rows
                .iter()
                .map(|r| {
                    let mut row = vec![
                        Field::Int(r.n as i64),
                        Field::Int(r.resolution as i64),
                        Field::Int(r.points as i64),
                        Field::Int(r.subspace_dim as i64),
                        Field::Float(r.minimized_norm.0),
                        Field::Float(r.lower_bound.0),
                        Field::Int(r.restarts as i64),
                        Field::Int(r.iterations as i64),
                    ];
                    if let Some(t) = r.wall_time_s {
                        row.push(Field::Float(t.0));
                    }
                    row
                })
                .collect();
            csv_string(&header, &body)?
        }
    };
    emit(s.out.as_deref(), &text)?;
    if let Some(path) = &s.projections {
        emit(Some(path), &json_string(&records)?)?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if !failed.is_empty() {
        return Err(CliError::Check(failed.join(", ")));
    }
    Ok(summary(&[
        ("smallest minimized norm", significant(lo, 12)),
        ("largest minimized norm", significant(hi, 12)),
    ]))
}
