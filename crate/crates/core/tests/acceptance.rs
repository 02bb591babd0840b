//! Exit-gate checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; the process fails if any criterion fails.

mod common;

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use polyproj_core::averaging::{average_function_mc, compute_eta, AveragedWitnessGap, AveragingGroup};
use polyproj_core::bounds::{
    big_c_const, c_const, higher_order_bound, optimize_bound, closed_form_bound, closed_form_eps, combined_bound,
    verify_case_split, default_delta_grid, default_eps_grid, BRANCH_CONSTANT, LAMBDA_STAR,
};
use polyproj_core::geometry::{
    coordinate_reflection, coordinate_swap, norm, sample_ball, sample_sphere, stream_rng, SampleRng,
};
use polyproj_core::oracle::{
    build_net, finite_group_closure, minimize_projection_norm, projection_operator_norm, quadratic_basis,
    restricted_basis_matrix, symmetrize_discrete_projection, DiscreteProjection, FiniteBallNet, NetScheme,
};
use polyproj_core::polynomials::Quadratic;
use polyproj_core::witness::{SmoothFunction, SmoothedAngleProfile, Witness, WitnessParams};
use rand::Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Name, time limit in seconds, runner.
type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("constants", 1, constants),
        ("witness gradients", 180, witness_gradients),
        ("eta band", 1, eta_band),
        ("planar rotation average", 120, planar_average),
        ("averaged gap lipschitz bound", 60, averaged_gap),
        ("case split", 30, case_split),
        ("closing step", 60, closing_step),
        ("higher degree domination", 10, higher_degree),
        ("oracle exactness", 120, oracle_exactness),
        ("oracle stability", 300, oracle_stability),
        ("quadratic norms", 60, quadratic_norms),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:2} {:<30} {} ({}; {:.2}s of {}s)",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn constants() -> Outcome {
    let c = (2.0 / 3.0) * (SQRT_2 - 1.0) * (PI / 72.0);
    let big_c = 2f64.powf(0.8) / 5.0 * c.powf(0.2);
    let lambda = (2.0 / 3.0) * (SQRT_2 + 2.0);
    let branch = (2.0 / 3.0) * (SQRT_2 - 1.0);
    let errs = [
        (c_const() - c).abs(),
        (big_c_const() - big_c).abs(),
        (LAMBDA_STAR - lambda).abs(),
        (BRANCH_CONSTANT - branch).abs(),
        (LAMBDA_STAR - 2.0 - branch).abs(),
        (SQRT_2 - LAMBDA_STAR / 2.0 - branch).abs(),
    ];
    let worst = errs.iter().fold(0.0f64, |m, e| m.max(*e));
    let second_case = 1.0 / 2f64.powf(1.2) >= 2f64.powf(0.8) / 5.0;
    outcome(
        worst <= 1e-15 && second_case,
        format!("max deviation {worst:.3e}, second-case inequality {second_case}"),
    )
}

/// Uniform ball points (planar) or a mix of uniform and sparse points whose
/// support fits the active-coordinate budget, pulled inside radius 1 − 1e-5.
fn witness_points(dim: usize, eps: f64, count: usize, rng: &mut SampleRng) -> Vec<Vec<f64>> {
    let budget = ((1.0 / (eps * eps)) as usize).clamp(2, dim);
    (0..count)
        .map(|k| {
            let mut x = if dim == 2 || k % 2 == 0 {
                sample_ball(dim, rng)
            } else {
                let top = if k % 4 == 1 { budget.min(4) } else { budget };
                let s = rng.random_range(2..=top);
                let mut x = vec![0.0; dim];
                let dir = sample_sphere(s, rng);
                let mut idx: Vec<usize> = (0..dim).collect();
                for (t, v) in dir.into_iter().enumerate() {
                    let j = rng.random_range(t..dim);
                    idx.swap(t, j);
                    x[idx[t]] = v;
                }
                let r = rng.random_range(0.3..1.0);
                x.iter_mut().for_each(|v| *v *= r);
                x
            };
            x.iter_mut().for_each(|v| *v *= 1.0 - 1e-5);
            x
        })
        .collect()
}

/// `(max ‖∇f‖, max |∇f − central difference|)` over the points.
fn gradient_scan<F: SmoothFunction>(f: &F, points: &[Vec<f64>]) -> (f64, f64) {
    let h = 1e-6;
    let dim = f.dim();
    let mut g = vec![0.0; dim];
    let (mut gmax, mut fd) = (0.0f64, 0.0f64);
    for x in points {
        f.gradient(x, &mut g).unwrap();
        gmax = gmax.max(norm(&g));
        let mut y = x.clone();
        for i in 0..dim {
            y[i] = x[i] + h;
            let up = f.value(&y).unwrap();
            y[i] = x[i] - h;
            let down = f.value(&y).unwrap();
            y[i] = x[i];
            fd = fd.max(((up - down) / (2.0 * h) - g[i]).abs());
        }
    }
    (gmax, fd)
}

fn witness_gradients() -> Outcome {
    let settings = [(8, 0.3, PI / 100.0), (16, 0.2, PI / 100.0), (64, 0.3, PI / 200.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, &(n, eps, delta)) in settings.iter().enumerate() {
        let w = Witness::new(WitnessParams::new(n, eps, delta).unwrap()).unwrap();
        let mut rng = stream_rng(SEED, s as u64);
        let planar = witness_points(2, eps, 10_000, &mut rng);
        let spatial = witness_points(n, eps, 10_000, &mut rng);
        let (gp, fp) = gradient_scan(&w.planar(), &planar);
        let (gf, ff) = gradient_scan(&w.full_sum(), &spatial);
        let (gl, fl) = gradient_scan(&w.leading_sum(), &spatial);
        let cap = 1.0 / eps.powi(4);
        let fd = fp.max(ff).max(fl);
        pass &= gp <= 2.0 && gf <= cap && gl <= cap && fd <= 1e-6;
        parts.push(format!("n={n}: |grad psi| {gp:.4}, |grad Psi| {gf:.3}, |grad Psi_d| {gl:.3} <= {cap:.1}, fd {fd:.1e}"));
    }
    outcome(pass, parts.join("; "))
}

fn eta_band() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for delta in [PI / 73.0, PI / 100.0, PI / 1000.0] {
        let tau = SmoothedAngleProfile::build(delta).unwrap();
        match compute_eta(&tau, 1024) {
            Ok(e) => {
                let inside = e.value <= PI / 72.0 && e.value >= PI / 72.0 - delta;
                pass &= inside;
                parts.push(format!("delta {delta:.5}: eta {:.15}", e.value));
            }
            Err(err) => {
                pass = false;
                parts.push(format!("delta {delta:.5}: {err}"));
            }
        }
    }
    let tent = compute_eta(&SmoothedAngleProfile::tent(), 1024).unwrap();
    let dev = (tent.value - PI / 72.0).abs();
    pass &= dev <= 1e-14;
    parts.push(format!("tent deviation {dev:.1e}"));
    outcome(pass, parts.join(", "))
}

fn planar_average() -> Outcome {
    let (n, eps, delta) = (6, 0.2, PI / 100.0);
    let params = WitnessParams::new(n, eps, delta).unwrap();
    let w = Witness::new(params).unwrap();
    let eta = compute_eta(w.profile(), 1024).unwrap().value;
    let mut rng = stream_rng(SEED, 100);
    let points: Vec<Vec<f64>> = (0..100)
        .map(|_| {
            let planar = sample_ball(2, &mut rng);
            let room = (1.0 - planar[0] * planar[0] - planar[1] * planar[1]).max(0.0).sqrt();
            let mut x = planar;
            x.extend(sample_ball(n - 2, &mut rng).into_iter().map(|v| 0.5 * room * v));
            x
        })
        .collect();
    let closed: Vec<f64> = points
        .iter()
        .map(|x| {
            let r = x[0].hypot(x[1]);
            let s = (r - 2.0 * eps).max(0.0);
            s * s * eta
        })
        .collect();
    let f = |x: &[f64]| w.psi_ij(x, 0, 1);

    // 3 standard errors at m = 1e5
    let avg = average_function_mc(f, n, AveragingGroup::PlanarRotations, 100_000, SEED).unwrap();
    let mut worst = 0.0f64;
    for (x, c) in points.iter().zip(&closed) {
        let v = avg.eval(x).unwrap();
        let z = if v.stderr > 0.0 {
            (v.mean - c).abs() / v.stderr
        } else if v.mean == *c {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
    }

    // error scaling over independent seeds
    let ms = [1_000usize, 10_000, 100_000];
    let seeds = 24;
    let mut log_err = Vec::new();
    for &m in &ms {
        let mut sq = 0.0;
        for s in 0..seeds {
            let avg = average_function_mc(f, n, AveragingGroup::PlanarRotations, m, SEED + 1 + s).unwrap();
            for (x, c) in points.iter().zip(&closed) {
                let e = avg.eval(x).unwrap().mean - c;
                sq += e * e;
            }
        }
        log_err.push((sq / (seeds as f64 * points.len() as f64)).sqrt().ln());
    }
    let xs: Vec<f64> = ms.iter().map(|&m| (m as f64).ln()).collect();
    let slope = least_squares_slope(&xs, &log_err);
    outcome(
        worst <= 3.0 && (slope + 0.5).abs() <= 0.05,
        format!("max |mc - closed|/stderr {worst:.3}, log-log slope {slope:.4}"),
    )
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn averaged_gap() -> Outcome {
    let n = 4;
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, &(eps, delta)) in [(0.1, PI / 100.0), (0.2, PI / 200.0), (0.3, PI / 1000.0)].iter().enumerate() {
        let params = WitnessParams::new(n, eps, delta).unwrap();
        let tau = SmoothedAngleProfile::build(delta).unwrap();
        let eta = compute_eta(&tau, 1024).unwrap().value;
        let gap = AveragedWitnessGap::new(&params, eta);
        let bound = gap.lip_bound();
        let mut rng = stream_rng(SEED, 200 + s as u64);
        let mut g = vec![0.0; n];
        let mut worst = 0.0f64;
        for k in 0..1_000_000 {
            let mut x = if k % 2 == 0 { sample_ball(n, &mut rng) } else { sample_sphere(n, &mut rng) };
            if k % 2 == 1 {
                let r: f64 = rng.random();
                x.iter_mut().for_each(|v| *v *= r);
            }
            gap.gradient(&x, &mut g).unwrap();
            worst = worst.max(norm(&g));
        }
        pass &= worst <= bound * (1.0 + 1e-12);
        parts.push(format!("eps {eps}: sup {worst:.12} vs 4 eps eta {bound:.12}"));
    }
    outcome(pass, parts.join("; "))
}

fn case_split() -> Outcome {
    let mut rng = stream_rng(SEED, 300);
    let mut worst = f64::INFINITY;
    let mut counts = [0usize; 2];
    for t in 0..100_000 {
        let n = (3.0 * 10f64.powf(rng.random_range(0.0..3.5))) as usize;
        let n = n.max(3);
        let alpha = rng.random_range(-10.0..10.0) * 10f64.powf(rng.random_range(-3.0..3.0));
        let threshold = LAMBDA_STAR * alpha.abs() / (n as f64 - 2.0);
        let beta = match t % 3 {
            0 => threshold * (1.0 + rng.random_range(-1e-6..1e-6)),
            1 => threshold * rng.random_range(0.0..3.0),
            _ => rng.random_range(-1.0..1.0) * 10f64.powf(rng.random_range(-4.0..4.0)),
        };
        let beta = if rng.random::<bool>() { beta } else { -beta };
        let check = verify_case_split(alpha, beta, n).unwrap();
        counts[usize::from(check.case != polyproj_core::bounds::BoundCase::BetaLarge)] += 1;
        worst = worst.min(check.slack);
    }
    outcome(
        worst >= -1e-12,
        format!("min slack {worst:.3e} over 1e5 trials ({} beta-large, {} beta-small)", counts[0], counts[1]),
    )
}

fn closing_step() -> Outcome {
    let mut worst_eq = 0.0f64;
    let mut worst_dom = f64::INFINITY;
    let deltas = default_delta_grid();
    for n in 3..=10_000usize {
        let r = combined_bound(n, closed_form_eps(n).unwrap(), 1e-12).unwrap();
        let closed = closed_form_bound(n).unwrap();
        worst_eq = worst_eq.max((r.k_lower - closed).abs() / closed);
        let opt = optimize_bound(n, &default_eps_grid(n).unwrap(), &deltas).unwrap();
        worst_dom = worst_dom.min((opt.optimizer_k_lower - closed) / closed);
    }
    outcome(
        worst_eq <= 1e-6 && worst_dom >= -1e-12,
        format!("max relative gap to closed form {worst_eq:.2e}, min relative optimizer margin {worst_dom:.2e}"),
    )
}

fn higher_degree() -> Outcome {
    let mut worst = f64::INFINITY;
    for k in 2..=10 {
        for n in 3..=500 {
            let r = higher_order_bound(n, k).unwrap();
            let p = closed_form_bound(n).unwrap();
            worst = worst.min((r.optimizer_k_lower - p) / p);
        }
    }
    outcome(worst >= -1e-12, format!("min relative margin {worst:.3e}"))
}

fn random_net(dim: usize, points: usize, rng: &mut SampleRng) -> FiniteBallNet {
    let mut pts = vec![vec![0.0; dim]];
    for _ in 1..points {
        pts.push(sample_ball(dim, rng));
    }
    FiniteBallNet::from_points(pts).unwrap()
}

fn oracle_exactness() -> Outcome {
    let mut rng = stream_rng(SEED, 400);
    let mut worst_gap = 0.0f64;
    for t in 0..100 {
        let (dim, points) = if t % 2 == 0 { (1, rng.random_range(3..=6)) } else { (2, rng.random_range(5..=6)) };
        let net = random_net(dim, points, &mut rng);
        let b = restricted_basis_matrix(&net, &quadratic_basis(dim).unwrap()).unwrap();
        let q = DiscreteProjection::random(b, rng.random_range(0.2..2.0), &mut rng).unwrap();
        let exact = projection_operator_norm(&q, &net).unwrap().norm;
        let vertices = common::lip_ball_vertices(&net);
        let brute = common::vertex_norm(&q, &net, &vertices);
        worst_gap = worst_gap.max((exact - brute).abs() / brute.max(1.0));
    }

    // symmetrization on three symmetric nets
    let d4 = finite_group_closure(&[coordinate_reflection(2, 0).unwrap(), coordinate_swap(2, 0, 1).unwrap()], 16).unwrap();
    let flip = finite_group_closure(&[coordinate_reflection(1, 0).unwrap()], 4).unwrap();
    let cross = FiniteBallNet::from_points(vec![
        vec![0.0, 0.0],
        vec![0.5, 0.0],
        vec![-0.5, 0.0],
        vec![0.0, 0.5],
        vec![0.0, -0.5],
    ])
    .unwrap();
    let diag = [Quadratic::diagonal(&[1.0, 0.0]).unwrap(), Quadratic::diagonal(&[0.0, 1.0]).unwrap()];
    let line = build_net(1, 4, NetScheme::Grid).unwrap();
    let shells = build_net(2, 2, NetScheme::Shells).unwrap();
    let cases: [(&FiniteBallNet, DMatrix<f64>, &[_], bool); 3] = [
        (&line, restricted_basis_matrix(&line, &quadratic_basis(1).unwrap()).unwrap(), &flip, true),
        (&cross, restricted_basis_matrix(&cross, &diag).unwrap(), &d4, true),
        (&shells, restricted_basis_matrix(&shells, &quadratic_basis(2).unwrap()).unwrap(), &d4, false),
    ];
    let mut worst_increase = f64::NEG_INFINITY;
    for t in 0..100 {
        let (net, b, group, small) = &cases[t % 3];
        let q = DiscreteProjection::random(b.clone(), rng.random_range(0.2..2.0), &mut rng).unwrap();
        let s = symmetrize_discrete_projection(&q, net, group).unwrap();
        let before = projection_operator_norm(&q, net).unwrap().norm;
        let after = projection_operator_norm(&s, net).unwrap().norm;
        worst_increase = worst_increase.max(after - before);
        if *small {
            let vertices = common::lip_ball_vertices(net);
            let brute = common::vertex_norm(&s, net, &vertices);
            worst_gap = worst_gap.max((after - brute).abs() / brute.max(1.0));
        }
    }
    outcome(
        worst_gap <= 1e-8 && worst_increase <= 1e-9,
        format!("max |lp - vertices| {worst_gap:.2e}, max norm change under symmetrization {worst_increase:.3e}"),
    )
}

fn oracle_stability() -> Outcome {
    let mut norms = Vec::new();
    for res in [4, 8, 16] {
        let net = build_net(1, res, NetScheme::Grid).unwrap();
        let b = restricted_basis_matrix(&net, &quadratic_basis(1).unwrap()).unwrap();
        norms.push(minimize_projection_norm(&net, &b, 3, SEED).unwrap().norm);
    }
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().copied().fold(0.0, f64::max);
    outcome(
        hi <= 1.05 * lo && lo >= 1.0 - 1e-12,
        format!("minimized norms {norms:.9?}"),
    )
}

fn random_quadratic(dim: usize, rng: &mut SampleRng) -> Quadratic {
    let scale = 10f64.powf(rng.random_range(-1.0..1.0));
    let upper: Vec<f64> = (0..dim * (dim + 1) / 2).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    Quadratic::from_upper(dim, &upper).unwrap()
}

fn quadratic_norms() -> Outcome {
    let mut rng = stream_rng(SEED, 500);
    let mut worst_sup = 0.0f64;
    let mut worst_ratio_over = 0.0f64;
    let mut worst_ratio_under = f64::INFINITY;
    for t in 0..100 {
        let dim = 1 + t % 6;
        let q = random_quadratic(dim, &mut rng);
        let exact = q.sup_norm();
        let sampled = common::sampled_sup_norm(&q, 2_000, &mut rng);
        worst_sup = worst_sup.max((exact - sampled).abs() / exact.max(1.0));

        let lip = q.lip_norm_on_ball();
        let mut over = 0.0f64;
        for _ in 0..100_000 {
            let x = sample_ball(dim, &mut rng);
            let y = sample_ball(dim, &mut rng);
            let d = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            over = over.max((q.eval_slice(&x) - q.eval_slice(&y)).abs() / d);
        }
        // boundary-directed pairs: x on the sphere, y = (1 − t)x, then a
        // random local search over x on the sphere
        let t = 1e-4;
        let quotient = |x: &[f64]| {
            let y: Vec<f64> = x.iter().map(|v| v * (1.0 - t)).collect();
            (q.eval_slice(x) - q.eval_slice(&y)).abs() / t
        };
        let mut x = sample_sphere(dim, &mut rng);
        let mut under = quotient(&x);
        for _ in 0..10_000 {
            let c = sample_sphere(dim, &mut rng);
            let v = quotient(&c);
            if v > under {
                (x, under) = (c, v);
            }
        }
        let mut step = 0.3;
        let mut misses = 0;
        for _ in 0..5_000 {
            let mut c: Vec<f64> = x.iter().zip(sample_sphere(dim, &mut rng)).map(|(a, b)| a + step * b).collect();
            let r = norm(&c);
            c.iter_mut().for_each(|v| *v /= r);
            let v = quotient(&c);
            if v > under {
                (x, under, misses) = (c, v, 0);
            } else {
                misses += 1;
                if misses == 50 {
                    step *= 0.5;
                    misses = 0;
                }
            }
        }
        worst_ratio_over = worst_ratio_over.max(over / lip);
        worst_ratio_under = worst_ratio_under.min(under / lip);
    }
    outcome(
        worst_sup <= 1e-6 && worst_ratio_over <= 1.0 + 1e-6 && worst_ratio_under >= 0.98,
        format!(
            "max sup-norm gap {worst_sup:.2e}, pair quotient / 2|P| in [{worst_ratio_under:.4}, {worst_ratio_over:.6}]"
        ),
    )
}
