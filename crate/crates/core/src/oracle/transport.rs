//! Transportation-cost (Lipschitz-free) norm of a balanced weight vector.
//!
//! `‖w‖ = min Σ x_pq·d(p, q)` over flows moving the positive part of `w` onto
//! the negative part. Because `d` is a metric, transshipment through other
//! points never helps, so the flow lives on the bipartite graph from
//! positive to negative points. It is solved by successive shortest paths
//! with Dijkstra on reduced costs; the final node potentials give the dual
//! `1`-Lipschitz maximizer.

use alloc::vec::Vec;

use crate::error::{Error, Result};

use super::FiniteBallNet;

/// Balance tolerance, relative to `max(1, Σ|w|)`.
pub const BALANCE_TOL: f64 = 1e-12;

/// Optimal transport value and a maximizing function.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeNorm {
    pub value: f64,
    /// A `1`-Lipschitz function on the net with `f(0) = 0` and
    /// `Σ w_i f_i = value` up to rounding.
    pub maximizer: Vec<f64>,
}

/// `sup{Σ w_i f(p_i) : Lip(f) ≤ 1}` computed as a min-cost flow.
pub fn free_norm_of_functional(weights: &[f64], net: &FiniteBallNet) -> Result<f64> {
    Ok(free_norm_with_dual(weights, net)?.value)
}

/// [`free_norm_of_functional`] together with an optimal dual function.
pub fn free_norm_with_dual(weights: &[f64], net: &FiniteBallNet) -> Result<FreeNorm> {
    let p = net.len();
    if weights.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: weights.len(),
        });
    }
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "weights" });
    }
    let total: f64 = weights.iter().sum();
    let mass: f64 = weights.iter().map(|v| v.abs()).sum();
    if total.abs() > BALANCE_TOL * mass.max(1.0) {
        return Err(Error::Unbalanced { sum: total });
    }
    let sources: Vec<usize> = (0..p).filter(|&i| weights[i] > 0.0).collect();
    let sinks: Vec<usize> = (0..p).filter(|&i| weights[i] < 0.0).collect();
    if sources.is_empty() || sinks.is_empty() {
        return Ok(FreeNorm {
            value: 0.0,
            maximizer: alloc::vec![0.0; p],
        });
    }
    let (ns, nt) = (sources.len(), sinks.len());
    let cost: Vec<f64> = sources
        .iter()
        .flat_map(|&i| sinks.iter().map(move |&j| (i, j)))
        .map(|(i, j)| net.distance(i, j))
        .collect();
    let mut supply: Vec<f64> = sources.iter().map(|&i| weights[i]).collect();
    let mut demand: Vec<f64> = sinks.iter().map(|&j| -weights[j]).collect();
    let mut flow = alloc::vec![0.0; ns * nt];
    // node order: sources 0..ns, sinks ns..ns+nt
    let nodes = ns + nt;
    let mut pot = alloc::vec![0.0; nodes];
    let eps_mass = 1e-15 * mass;

    let mut dist = alloc::vec![0.0; nodes];
    let mut prev = alloc::vec![usize::MAX; nodes];
    let mut done = alloc::vec![false; nodes];
    let mut rounds = 0usize;
    loop {
        let remaining: f64 = supply.iter().sum();
        if remaining <= eps_mass || demand.iter().all(|&d| d <= eps_mass) {
            break;
        }
        rounds += 1;
        if rounds > 4 * nodes * nodes + 16 {
            return Err(Error::IterationLimit { iterations: rounds });
        }
        // Dijkstra from every source with residual supply
        for v in 0..nodes {
            dist[v] = f64::INFINITY;
            prev[v] = usize::MAX;
            done[v] = false;
        }
        for s in 0..ns {
            if supply[s] > eps_mass {
                dist[s] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < ns {
                for t in 0..nt {
                    let v = ns + t;
                    if done[v] {
                        continue;
                    }
                    let rc = (cost[u * nt + t] + pot[u] - pot[v]).max(0.0);
                    if dist[u] + rc < dist[v] {
                        dist[v] = dist[u] + rc;
                        prev[v] = u;
                    }
                }
            } else {
                let t = u - ns;
                for s in 0..ns {
                    if done[s] || flow[s * nt + t] <= 0.0 {
                        continue;
                    }
                    let rc = (-cost[s * nt + t] + pot[u] - pot[s]).max(0.0);
                    if dist[u] + rc < dist[s] {
                        dist[s] = dist[u] + rc;
                        prev[s] = u;
                    }
                }
            }
        }
        // closest sink with residual demand
        let target = (0..nt)
            .filter(|&t| demand[t] > eps_mass && dist[ns + t].is_finite())
            .min_by(|&a, &b| dist[ns + a].total_cmp(&dist[ns + b]).then(a.cmp(&b)));
        let Some(t) = target else {
            return Err(Error::Infeasible);
        };
        let reach = dist[ns + t];
        for v in 0..nodes {
            pot[v] += dist[v].min(reach);
        }
        // bottleneck along the path
        let mut v = ns + t;
        let mut amount = demand[t];
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= ns {
                // backward arc sink u → source v
                amount = amount.min(flow[v * nt + (u - ns)]);
            }
            v = u;
        }
        let root = v;
        amount = amount.min(supply[root]);
        let mut v = ns + t;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < ns {
                flow[u * nt + (v - ns)] += amount;
            } else {
                let f = &mut flow[v * nt + (u - ns)];
                *f -= amount;
                if *f < eps_mass {
                    *f = 0.0;
                }
            }
            v = u;
        }
        supply[root] -= amount;
        if supply[root] < eps_mass {
            supply[root] = 0.0;
        }
        demand[t] -= amount;
        if demand[t] < eps_mass {
            demand[t] = 0.0;
        }
    }
    let value = flow.iter().zip(&cost).map(|(x, c)| x * c).sum();

    // f = −potential on sink nodes, extended to the whole net by
    // f(p) = min_j (f_j + d(p, q_j)), which is 1-Lipschitz
    let mut maximizer: Vec<f64> = (0..p)
        .map(|i| {
            sinks
                .iter()
                .enumerate()
                .map(|(t, &j)| -pot[ns + t] + net.distance(i, j))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let base = maximizer[0];
    maximizer.iter_mut().for_each(|v| *v -= base);
    Ok(FreeNorm { value, maximizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{discrete_lip_norm_values, FiniteBallNet};

    fn line(points: &[f64]) -> FiniteBallNet {
        FiniteBallNet::from_points(points.iter().map(|&x| alloc::vec![x]).collect()).unwrap()
    }

    #[test]
    fn single_edge() {
        let net = line(&[0.0, 0.25, -0.5]);
        let v = free_norm_of_functional(&[0.0, 1.0, -1.0], &net).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
    }

    #[test]
    fn splitting_mass() {
        // 0 - q - p - r on a line
        let net = line(&[0.0, 0.2, 0.5, 0.9]);
        let w = [0.0, -0.5, 1.0, -0.5];
        let v = free_norm_with_dual(&w, &net).unwrap();
        assert!((v.value - (0.3 + 0.4) / 2.0).abs() < 1e-15);
        let dual: f64 = w.iter().zip(&v.maximizer).map(|(a, b)| a * b).sum();
        assert!((dual - v.value).abs() < 1e-14);
        assert!(discrete_lip_norm_values(&net, &v.maximizer) <= 1.0 + 1e-14);
        assert_eq!(v.maximizer[0], 0.0);
    }

    #[test]
    fn homogeneous_and_checked() {
        let net = line(&[0.0, 0.3, -0.6, 1.0]);
        let w = [0.2, -0.7, 0.1, 0.4];
        let a = free_norm_of_functional(&w, &net).unwrap();
        let w2: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        assert!((free_norm_of_functional(&w2, &net).unwrap() - 2.0 * a).abs() < 1e-14);
        assert!(matches!(
            free_norm_of_functional(&[1.0, 0.0, 0.0, 0.0], &net),
            Err(Error::Unbalanced { .. })
        ));
        assert_eq!(free_norm_of_functional(&[0.0; 4], &net).unwrap(), 0.0);
    }
}
