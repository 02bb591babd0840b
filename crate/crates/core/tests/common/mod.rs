//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use polyproj_core::geometry::{norm, sample_sphere, SampleRng};
use polyproj_core::oracle::{discrete_lip_norm_values, simplex, DiscreteProjection, FiniteBallNet};
use polyproj_core::polynomials::Quadratic;

/// One constraint `s·(f_i − f_j) ≤ d_ij` of the Lip₀ ball, with `j = 0`
/// meaning the base point (where `f = 0`).
#[derive(Clone, Copy)]
struct Facet {
    i: usize,
    j: usize,
    sign: f64,
    d: f64,
}

/// Every vertex of `{f : f(0) = 0, Lip(f) ≤ 1}` on the net, found by solving
/// each choice of `points − 1` facets and keeping the feasible solutions.
pub fn lip_ball_vertices(net: &FiniteBallNet) -> Vec<Vec<f64>> {
    let p = net.len();
    let m = p - 1;
    let mut facets = Vec::new();
    for i in 1..p {
        for j in 0..i {
            let d = net.distance(i, j);
            facets.push(Facet { i, j, sign: 1.0, d });
            facets.push(Facet { i, j, sign: -1.0, d });
        }
    }
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(m);
    choose(&facets, m, 0, &mut chosen, &mut |set| {
        let mut a = DMatrix::zeros(m, m);
        let mut b = DVector::zeros(m);
        for (r, f) in set.iter().enumerate() {
            a[(r, f.i - 1)] = f.sign;
            if f.j > 0 {
                a[(r, f.j - 1)] = -f.sign;
            }
            b[r] = f.d;
        }
        let Some(x) = a.lu().solve(&b) else { return };
        if x.iter().any(|v| !v.is_finite()) {
            return;
        }
        let value = |k: usize| if k == 0 { 0.0 } else { x[k - 1] };
        let feasible = facets.iter().all(|f| f.sign * (value(f.i) - value(f.j)) <= f.d + 1e-9);
        if feasible {
            let mut v = vec![0.0];
            v.extend(x.iter());
            out.push(v);
        }
    });
    out
}

fn choose<'a>(items: &'a [Facet], k: usize, start: usize, acc: &mut Vec<&'a Facet>, visit: &mut impl FnMut(&[&Facet])) {
    if acc.len() == k {
        visit(acc);
        return;
    }
    let need = k - acc.len();
    for s in start..=items.len().saturating_sub(need) {
        // the two signs of one pair are parallel
        if acc.last().is_some_and(|l| l.i == items[s].i && l.j == items[s].j) {
            continue;
        }
        acc.push(&items[s]);
        choose(items, k, s + 1, acc, visit);
        acc.pop();
    }
}

/// `max_v Lip(Qv)` over the Lip₀-ball vertices.
pub fn vertex_norm(q: &DiscreteProjection, net: &FiniteBallNet, vertices: &[Vec<f64>]) -> f64 {
    vertices
        .iter()
        .map(|v| discrete_lip_norm_values(net, &q.apply(v).unwrap()))
        .fold(0.0, f64::max)
}

/// `sup{Σ w_i f_i : Lip(f) ≤ 1, f(0) = 0}` as an LP in the values
/// `g_i = f_i + |p_i| ≥ 0`, whose constraints have nonnegative right sides.
pub fn free_norm_by_lp(weights: &[f64], net: &FiniteBallNet) -> f64 {
    let p = net.len();
    let m = p - 1;
    let r: Vec<f64> = (0..p).map(|i| norm(net.point(i))).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 1..p {
        for j in 1..p {
            if i != j {
                let mut row = vec![0.0; m];
                row[i - 1] = 1.0;
                row[j - 1] = -1.0;
                a.extend(row);
                b.push((net.distance(i, j) + r[i] - r[j]).max(0.0));
            }
        }
        let mut row = vec![0.0; m];
        row[i - 1] = 1.0;
        a.extend(row);
        b.push(2.0 * r[i]);
    }
    let c: Vec<f64> = weights[1..].to_vec();
    let sol = simplex::maximize(&c, &a, &b).unwrap();
    let shift: f64 = (1..p).map(|i| weights[i] * r[i]).sum();
    sol.objective - shift
}

/// `sup_{|x| = 1} |xᵀAx|` by sphere sampling followed by shifted power
/// iteration and Rayleigh-quotient iteration from the extreme samples.
pub fn sampled_sup_norm(q: &Quadratic, samples: usize, rng: &mut SampleRng) -> f64 {
    let dim = q.dim();
    let a = q.matrix();
    let shift = a.iter().map(|v| v.abs()).sum::<f64>();
    let mut best = 0.0f64;
    let mut starts: Vec<(f64, Vec<f64>)> = (0..samples)
        .map(|_| {
            let x = sample_sphere(dim, rng);
            (q.eval_slice(&x), x)
        })
        .collect();
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let top = starts.first().cloned();
    let bottom = starts.last().cloned();
    for (sign, start) in [(1.0, top), (-1.0, bottom)] {
        let Some((_, mut x)) = start else { continue };
        // (shift·I + sign·A) is positive semidefinite
        for _ in 0..500 {
            let xv = DVector::from_column_slice(&x);
            let y = &xv * shift + a * &xv * sign;
            let ny = y.norm();
            if ny == 0.0 {
                break;
            }
            x = (y / ny).iter().copied().collect();
        }
        best = best.max(q.eval_slice(&x).abs());
        // Rayleigh-quotient iteration to polish
        for _ in 0..30 {
            let mu = q.eval_slice(&x);
            let shifted = a - DMatrix::identity(dim, dim) * mu;
            let Some(y) = shifted.lu().solve(&DVector::from_column_slice(&x)) else { break };
            let ny = y.norm();
            if !ny.is_finite() || ny == 0.0 {
                break;
            }
            x = (y / ny).iter().copied().collect();
            best = best.max(q.eval_slice(&x).abs());
        }
    }
    best
}
