use polyproj_core::bounds::{big_c_const, bound_table, closed_form_bound, closed_form_eps, combined_bound_degree, BoundRow};
use serde::Serialize;

use crate::config::{parse_auto, parse_list, parse_single, Settings};
use crate::error::CliError;
use crate::output::{csv_string, emit, json_string, significant, summary, Field, Format, Num};

/// `δ` used when only `ε` is fixed.
pub const FIXED_DELTA: f64 = 1e-12;
/// Relative slack of the "optimizer ≥ closed form" check.
pub const DOMINATION_TOL: f64 = 1e-12;

pub const HEADER: [&str; 7] = ["n", "k", "closed_form_bound", "optimizer_bound", "eps_star", "delta", "case"];

#[derive(Serialize)]
struct RowJson {
    n: usize,
    k: usize,
    closed_form_bound: Num,
    optimizer_bound: Num,
    eps_star: Num,
    delta: Num,
    case: &'static str,
}

fn rows_for(ns: &[usize], k: usize, eps: Option<f64>, delta: Option<f64>) -> Result<Vec<BoundRow>, CliError> {
    if eps.is_none() && delta.is_none() {
        return Ok(bound_table(ns, k)?);
    }
    ns.iter()
        .map(|&n| {
            let e = match eps {
                Some(e) => e,
                None => closed_form_eps(n)?,
            };
            let r = combined_bound_degree(n, k, e, delta.unwrap_or(FIXED_DELTA))?;
            Ok(BoundRow {
                n,
                k,
                closed_form_bound: closed_form_bound(n)?,
                optimizer_bound: r.k_lower,
                eps_star: r.eps,
                delta: r.delta,
                case: r.case,
            })
        })
        .collect()
}

fn render(rows: &[BoundRow], format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let body: Vec<Vec<Field>> = rows
                .iter()
                .map(|r| {
                    vec![
                        Field::Int(r.n as i64),
                        Field::Int(r.k as i64),
                        Field::Float(r.closed_form_bound),
                        Field::Float(r.optimizer_bound),
                        Field::Float(r.eps_star),
                        Field::Float(r.delta),
                        Field::Text(r.case.label().into()),
                    ]
                })
                .collect();
            csv_string(&HEADER, &body)
        }
        Format::Json => {
            let body: Vec<RowJson> = rows
                .iter()
                .map(|r| RowJson {
                    n: r.n,
                    k: r.k,
                    closed_form_bound: Num(r.closed_form_bound),
                    optimizer_bound: Num(r.optimizer_bound),
                    eps_star: Num(r.eps_star),
                    delta: Num(r.delta),
                    case: r.case.label(),
                })
                .collect();
            json_string(&body)
        }
    }
}

fn dominated(rows: &[BoundRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| r.optimizer_bound < r.closed_form_bound * (1.0 - DOMINATION_TOL))
        .map(|r| format!("n={} k={}", r.n, r.k))
        .collect()
}

fn check_dims(ns: &[usize]) -> Result<(), CliError> {
    if ns.is_empty() {
        return Err(CliError::Usage("--n is empty".into()));
    }
    if let Some(n) = ns.iter().find(|&&n| n < 3) {
        return Err(CliError::Usage(format!("--n {n}: need n >= 3 so that n - 2*sqrt(2) > 0")));
    }
    Ok(())
}

pub fn bound(s: &Settings) -> Result<String, CliError> {
    let ns = parse_list("n", s.n.as_deref().unwrap_or("3..100"))?;
    check_dims(&ns)?;
    let k = parse_single("k", s.k.as_deref().unwrap_or("2"))?;
    let eps = parse_auto("eps", s.eps.as_deref().unwrap_or("auto"))?;
    let delta = parse_auto("delta", s.delta.as_deref().unwrap_or("auto"))?;
    let rows = rows_for(&ns, k, eps, delta)?;
    emit(s.out.as_deref(), &render(&rows, s.format.unwrap_or(Format::Csv))?)?;
    let searched = eps.is_none() && delta.is_none();
    let mut lines = vec![("constant C", significant(big_c_const(), 15)), ("rows", rows.len().to_string())];
    let bad = if searched { dominated(&rows) } else { Vec::new() };
    lines.push(("optimizer-dominates-closed-form", if searched { (bad.is_empty()).to_string() } else { "not checked (fixed eps/delta)".into() }));
    let text = summary(&lines);
    if !bad.is_empty() {
        return Err(CliError::Check(format!("optimizer-dominates-closed-form at {}", bad.join(", "))));
    }
    Ok(text)
}

pub fn table(s: &Settings) -> Result<String, CliError> {
    let ns = parse_list("n", s.n.as_deref().unwrap_or("3..100"))?;
    check_dims(&ns)?;
    let ks = parse_list("k", s.k.as_deref().unwrap_or("2..10"))?;
    if let Some(k) = ks.iter().find(|&&k| k < 2) {
        return Err(CliError::Usage(format!("--k {k}: degree must be at least 2")));
    }
    if s.eps.is_some() || s.delta.is_some() {
        return Err(CliError::Usage("table always optimizes eps and delta; use `bound` for fixed values".into()));
    }
    let mut rows = Vec::with_capacity(ns.len() * ks.len());
    for &k in &ks {
        rows.extend(bound_table(&ns, k)?);
    }
    emit(s.out.as_deref(), &render(&rows, s.format.unwrap_or(Format::Csv))?)?;
    let bad = dominated(&rows);
    let text = summary(&[
        ("constant C", significant(big_c_const(), 15)),
        ("rows", rows.len().to_string()),
        ("higher-degree-dominates-closed-form", bad.is_empty().to_string()),
    ]);
    if !bad.is_empty() {
        return Err(CliError::Check(format!("higher-degree-dominates-closed-form at {}", bad.join(", "))));
    }
    Ok(text)
}
