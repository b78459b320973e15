use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, CoreError, Result};
use crate::math::KahanSum;
use crate::measure::MeasureView;

/// Atom cap of [`wasserstein_discrete_exact`].
pub const EXACT_TRANSPORT_MAX_ATOMS: usize = 256;

/// Residual capacities at or below this are treated as saturated.
const FLOW_EPS: f64 = 1e-15;

fn ground_cost(a: &[f64], b: &[f64], p: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    if p == 2.0 {
        d2
    } else {
        libm::pow(libm::sqrt(d2), p)
    }
}

fn root(total: f64, p: f64) -> f64 {
    let total = total.max(0.0);
    if p == 1.0 {
        total
    } else if p == 2.0 {
        libm::sqrt(total)
    } else {
        libm::pow(total, 1.0 / p)
    }
}

fn sorted_atoms(mu: MeasureView<'_>) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = mu
        .iter()
        .map(|(x, w)| (x[0], w))
        .filter(|a| a.1 > 0.0)
        .collect();
    v.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// `W_p` between two one-dimensional measures through their quantile functions.
///
/// Both inverse CDFs are piecewise constant, so the integral of
/// `|F^{-1}(u) - G^{-1}(u)|^p` is an exact finite sum over the merged breakpoints.
pub fn wasserstein_1d(mu: MeasureView<'_>, nu: MeasureView<'_>, p: f64) -> f64 {
    assert!(p >= 1.0, "order must be at least 1");
    assert!(
        mu.dim() == 1 && nu.dim() == 1,
        "one-dimensional measures only"
    );
    let a = sorted_atoms(mu);
    let b = sorted_atoms(nu);
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut acc = KahanSum::new();
    loop {
        let delta = ra.min(rb);
        let gap = (a[i].0 - b[j].0).abs();
        let cost = if p == 1.0 {
            gap
        } else if p == 2.0 {
            gap * gap
        } else {
            libm::pow(gap, p)
        };
        acc.add(delta * cost);
        ra -= delta;
        rb -= delta;
        let adv_a = ra <= rb;
        let adv_b = rb <= ra;
        if adv_a {
            i += 1;
            if i == a.len() {
                break;
            }
            ra = a[i].1;
        }
        if adv_b {
            j += 1;
            if j == b.len() {
                break;
            }
            rb = b[j].1;
        }
    }
    root(acc.value(), p)
}

/// Exact `W_p` between two finitely supported measures of any dimension.
///
/// Solves the transportation problem as a min-cost flow by successive shortest
/// paths (Dijkstra with node potentials on the dense residual graph). Meant as
/// a small-instance oracle.
pub fn wasserstein_discrete_exact(mu: MeasureView<'_>, nu: MeasureView<'_>, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("order must be at least 1"));
    }
    if mu.dim() != nu.dim() {
        return Err(invalid("dimension mismatch"));
    }
    let (n, m) = (mu.len(), nu.len());
    if n + m > EXACT_TRANSPORT_MAX_ATOMS {
        return Err(CoreError::InstanceTooLarge {
            atoms: n + m,
            cap: EXACT_TRANSPORT_MAX_ATOMS,
        });
    }
    let supply: Vec<f64> = (0..n).map(|i| mu.weight(i)).collect();
    let demand: Vec<f64> = (0..m).map(|j| nu.weight(j)).collect();
    let mut cost = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            cost[i * m + j] = ground_cost(mu.atom(i), nu.atom(j), p);
        }
    }
    let flow = min_cost_transport(&supply, &demand, &cost);
    let total = crate::math::kahan_sum(flow.iter().zip(&cost).map(|(f, c)| f * c));
    Ok(root(total, p))
}

/// Optimal plan (row-major `n x m`) of the transportation problem.
fn min_cost_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Vec<f64> {
    let (n, m) = (supply.len(), demand.len());
    // Nodes: 0 = source, 1..=n sources, n+1..=n+m sinks, n+m+1 = target.
    let nodes = n + m + 2;
    let (src, dst) = (0, n + m + 1);
    let mut flow = vec![0.0; n * m];
    let mut sup_left = supply.to_vec();
    let mut dem_left = demand.to_vec();
    let mut potential = vec![0.0; nodes];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];

    // Residual arcs out of `u`: (v, cost, capacity).
    let arcs = |u: usize,
                flow: &[f64],
                sup_left: &[f64],
                dem_left: &[f64],
                out: &mut Vec<(usize, f64, f64)>| {
        out.clear();
        if u == src {
            out.extend((0..n).map(|i| (1 + i, 0.0, sup_left[i])));
        } else if u <= n {
            let i = u - 1;
            out.push((src, 0.0, supply[i] - sup_left[i]));
            out.extend((0..m).map(|j| (n + 1 + j, cost[i * m + j], f64::INFINITY)));
        } else if u < dst {
            let j = u - n - 1;
            out.extend((0..n).map(|i| (1 + i, -cost[i * m + j], flow[i * m + j])));
            out.push((dst, 0.0, dem_left[j]));
        } else {
            out.extend((0..m).map(|j| (n + 1 + j, 0.0, demand[j] - dem_left[j])));
        }
    };

    let mut scratch = Vec::with_capacity(n.max(m) + 1);
    loop {
        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        dist[src] = 0.0;
        loop {
            let mut u = usize::MAX;
            for v in 0..nodes {
                if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            arcs(u, &flow, &sup_left, &dem_left, &mut scratch);
            for &(v, c, cap) in &scratch {
                if cap <= FLOW_EPS || done[v] {
                    continue;
                }
                let nd = dist[u] + (c + potential[u] - potential[v]).max(0.0);
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                }
            }
        }
        if !dist[dst].is_finite() {
            break;
        }
        // Bottleneck along the path.
        let mut delta = f64::INFINITY;
        let mut v = dst;
        while v != src {
            let u = prev[v];
            delta = delta.min(capacity(
                u, v, n, m, &flow, supply, demand, &sup_left, &dem_left,
            ));
            v = u;
        }
        let mut v = dst;
        while v != src {
            let u = prev[v];
            if u == src {
                sup_left[v - 1] -= delta;
            } else if v == src {
                sup_left[u - 1] += delta;
            } else if v == dst {
                dem_left[u - n - 1] -= delta;
            } else if u == dst {
                dem_left[v - n - 1] += delta;
            } else if u <= n {
                flow[(u - 1) * m + (v - n - 1)] += delta;
            } else {
                let f = &mut flow[(v - 1) * m + (u - n - 1)];
                *f = (*f - delta).max(0.0);
            }
            v = u;
        }
        let reach = dist[dst];
        for (phi, d) in potential.iter_mut().zip(&dist) {
            *phi += if d.is_finite() { *d } else { reach };
        }
    }
    flow
}

#[allow(clippy::too_many_arguments)]
fn capacity(
    u: usize,
    v: usize,
    n: usize,
    m: usize,
    flow: &[f64],
    supply: &[f64],
    demand: &[f64],
    sup_left: &[f64],
    dem_left: &[f64],
) -> f64 {
    let dst = n + m + 1;
    if u == 0 {
        sup_left[v - 1]
    } else if v == 0 {
        supply[u - 1] - sup_left[u - 1]
    } else if v == dst {
        dem_left[u - n - 1]
    } else if u == dst {
        demand[v - n - 1] - dem_left[v - n - 1]
    } else if u <= n {
        f64::INFINITY
    } else {
        flow[(v - 1) * m + (u - n - 1)]
    }
}
