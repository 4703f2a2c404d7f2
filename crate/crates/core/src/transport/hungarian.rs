//! O(n³) shortest-augmenting-path Hungarian method with dual potentials,
//! followed by a pass that picks the lexicographically smallest optimal
//! permutation among the perfect matchings of the tight subgraph.

use super::scalar::Scalar;

/// Optimal `row -> column` assignment for the row-major `n×n` matrix `c`.
pub(crate) fn solve<S: Scalar>(n: usize, c: &[S]) -> Vec<usize> {
    assert_eq!(c.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials; column 0 is the virtual root of each search
    let mut u = vec![S::zero(); n + 1];
    let mut v = vec![S::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<S>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &c[(i0 - 1) * n..i0 * n];
            let mut delta: Option<S> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1].sub(&u[i0]).sub(&v[j]);
                if minv[j].as_ref().is_none_or(|m| cur < *m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].as_ref().expect("just set");
                if delta.as_ref().is_none_or(|d| mj < d) {
                    delta = Some(mj.clone());
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]].add(&delta);
                    v[j] = v[j].sub(&delta);
                } else if let Some(m) = minv[j].as_mut() {
                    *m = m.sub(&delta);
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    let tight: Vec<bool> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            c[k].sub(&u[i + 1]).sub(&v[j + 1]).is_tight()
        })
        .collect();
    lexicographic_min(n, &tight, row_to_col)
}

/// Given a perfect matching inside the tight graph, returns the
/// lexicographically smallest perfect matching of that graph.
///
/// Every perfect matching of the tight graph is optimal for the same duals,
/// so this selects the smallest optimal permutation.
fn lexicographic_min(n: usize, tight: &[bool], mut row_to_col: Vec<usize>) -> Vec<usize> {
    let mut col_to_row = vec![0usize; n];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    // column -> tight rows, ascending
    let mut by_col: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for c in 0..n {
            if tight[r * n + c] {
                by_col[c].push(r);
            }
        }
    }
    let mut good = vec![false; n];
    let mut next = vec![usize::MAX; n];
    let mut queue = Vec::with_capacity(n);
    for i in 0..n {
        let c0 = row_to_col[i];
        let first = (0..n).find(|&j| tight[i * n + j]).expect("row has a tight edge");
        if first == c0 {
            continue;
        }
        // rows > i that can hand their column over along an alternating path ending at c0
        good.iter_mut().for_each(|g| *g = false);
        queue.clear();
        queue.push(c0);
        let mut head = 0;
        while head < queue.len() {
            let c = queue[head];
            head += 1;
            for &r in &by_col[c] {
                if r > i && !good[r] && row_to_col[r] != c {
                    good[r] = true;
                    next[r] = c;
                    queue.push(row_to_col[r]);
                }
            }
        }
        let target = (0..c0)
            .find(|&j| tight[i * n + j] && col_to_row[j] > i && good[col_to_row[j]]);
        let Some(j) = target else { continue };
        let mut r = col_to_row[j];
        row_to_col[i] = j;
        col_to_row[j] = i;
        loop {
            let c = next[r];
            let displaced = col_to_row[c];
            row_to_col[r] = c;
            col_to_row[c] = r;
            if c == c0 {
                break;
            }
            r = displaced;
        }
    }
    row_to_col
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_lexicographically_smallest_among_ties() {
        // all-zero matrix: every permutation optimal, identity is smallest
        let c = vec![0i128; 16];
        assert_eq!(solve(4, &c), vec![0, 1, 2, 3]);
        // two optimal permutations: [1,0,2] and [0,1,2] both cost 0? no: make
        // cost 1 everywhere except a 2-cycle and identity on rows 0,1
        let c: Vec<i128> = vec![0, 0, 5, 0, 0, 5, 5, 5, 0];
        assert_eq!(solve(3, &c), vec![0, 1, 2]);
    }

    #[test]
    fn small_known_instance() {
        let c: Vec<f64> = vec![4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let p = solve(3, &c);
        let cost: f64 = p.iter().enumerate().map(|(i, &j)| c[i * 3 + j]).sum();
        assert_eq!(cost, 5.0);
    }
}
