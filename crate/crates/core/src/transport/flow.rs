//! Transportation problem by successive shortest augmenting paths with
//! Johnson potentials and a dense Dijkstra.

use super::scalar::Scalar;

/// Optimal integer flow from `supply` (rows) to `demand` (columns) under the
/// row-major `n×m` cost matrix. Totals must agree. Returns `(i, j, units)`
/// for every positive arc, in row-major order.
pub(crate) fn transport<S: Scalar>(
    supply: &[u64],
    demand: &[u64],
    cost: &[S],
) -> Vec<(usize, usize, u64)> {
    let n = supply.len();
    let m = demand.len();
    assert_eq!(cost.len(), n * m);
    assert_eq!(supply.iter().sum::<u64>(), demand.iter().sum::<u64>());
    // nodes: rows 0..n, columns n..n+m, source s, sink t
    let s = n + m;
    let t = s + 1;
    let nodes = t + 1;
    let mut flow = vec![0u64; n * m];
    let mut sup = supply.to_vec();
    let mut dem = demand.to_vec();
    let mut pot = vec![S::zero(); nodes];
    let mut remaining: u64 = supply.iter().sum();
    while remaining > 0 {
        let mut dist: Vec<Option<S>> = vec![None; nodes];
        let mut done = vec![false; nodes];
        let mut prev = vec![usize::MAX; nodes];
        dist[s] = Some(S::zero());
        loop {
            let mut best: Option<usize> = None;
            for v in 0..nodes {
                if done[v] {
                    continue;
                }
                if let Some(dv) = &dist[v] {
                    if best.is_none_or(|b| dist[b].as_ref().is_none_or(|db| dv < db)) {
                        best = Some(v);
                    }
                }
            }
            let Some(u) = best else { break };
            done[u] = true;
            if u == t {
                continue;
            }
            let du = dist[u].clone().expect("reached");
            let relax = |v: usize, arc: S, dist: &mut Vec<Option<S>>, prev: &mut Vec<usize>| {
                let reduced = arc.add(&pot[u]).sub(&pot[v]).clamp_nonneg();
                let cand = du.add(&reduced);
                if !done[v] && dist[v].as_ref().is_none_or(|d| cand < *d) {
                    dist[v] = Some(cand);
                    prev[v] = u;
                }
            };
            if u == s {
                for (i, &a) in sup.iter().enumerate().take(n) {
                    if a > 0 {
                        relax(i, S::zero(), &mut dist, &mut prev);
                    }
                }
            } else if u < n {
                for j in 0..m {
                    relax(n + j, cost[u * m + j].clone(), &mut dist, &mut prev);
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if flow[i * m + j] > 0 {
                        relax(i, S::zero().sub(&cost[i * m + j]), &mut dist, &mut prev);
                    }
                }
                if dem[j] > 0 {
                    relax(t, S::zero(), &mut dist, &mut prev);
                }
            }
        }
        assert!(dist[t].is_some(), "balanced instance always has an augmenting path");
        let far = dist
            .iter()
            .flatten()
            .fold(S::zero(), |a, d| if *d > a { d.clone() } else { a });
        for v in 0..nodes {
            let d = dist[v].as_ref().unwrap_or(&far);
            pot[v] = pot[v].add(d);
        }
        // bottleneck along t <- ... <- s
        let mut path = Vec::new();
        let mut v = t;
        while v != s {
            path.push((prev[v], v));
            v = prev[v];
        }
        let mut amount = remaining;
        for &(a, b) in &path {
            let cap = if a == s {
                sup[b]
            } else if b == t {
                dem[a - n]
            } else if a < n {
                u64::MAX
            } else {
                flow[b * m + (a - n)]
            };
            amount = amount.min(cap);
        }
        for &(a, b) in &path {
            if a == s {
                sup[b] -= amount;
            } else if b == t {
                dem[a - n] -= amount;
            } else if a < n {
                flow[a * m + (b - n)] += amount;
            } else {
                flow[b * m + (a - n)] -= amount;
            }
        }
        remaining -= amount;
    }
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if flow[i * m + j] > 0 {
                out.push((i, j, flow[i * m + j]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        // supply (1,1), demand (1,1); crossing is cheaper
        let c: Vec<i128> = vec![5, 1, 1, 5];
        let f = transport(&[1, 1], &[1, 1], &c);
        assert_eq!(f, vec![(0, 1, 1), (1, 0, 1)]);
    }

    #[test]
    fn split_mass() {
        let c: Vec<f64> = vec![0.0, 1.0];
        let f = transport(&[4], &[1, 3], &c);
        assert_eq!(f, vec![(0, 0, 1), (0, 1, 3)]);
    }

    #[test]
    fn needs_a_backward_arc() {
        // greedy would send row 0 to column 0; the optimum reroutes it
        let c: Vec<i128> = vec![1, 2, 1, 10];
        let f = transport(&[1, 1], &[1, 1], &c);
        let cost: i128 = f.iter().map(|&(i, j, u)| c[i * 2 + j] * u as i128).sum();
        assert_eq!(cost, 3);
    }
}
