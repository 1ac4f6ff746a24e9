//! Minimum-cost assignment (Hungarian algorithm with potentials).

/// Solve the rectangular assignment problem for a row-major cost matrix.
/// Returns, per row, the assigned column (every row of the smaller side
/// gets a partner). Costs must be finite.
pub fn solve_assignment(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = cost.len();
    if rows == 0 {
        return vec![];
    }
    let cols = cost[0].len();
    if cols == 0 {
        return vec![None; rows];
    }

    if rows <= cols {
        let row_to_col = assign(rows, cols, |i, j| cost[i][j]);
        row_to_col.into_iter().map(Some).collect()
    } else {
        // transpose: assign every column a row, then invert
        let col_to_row = assign(cols, rows, |j, i| cost[i][j]);
        let mut out = vec![None; rows];
        for (j, i) in col_to_row.into_iter().enumerate() {
            out[i] = Some(j);
        }
        out
    }
}

/// Potentials-based O(n^2 m) assignment for n <= m. `cost(i, j)` is the
/// cost of pairing left i with right j.
fn assign(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    const INF: f64 = f64::INFINITY;
    // 1-based internals; p[j] = left vertex matched to right j
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
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

    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    debug_assert!(row_to_col.iter().all(|&c| c != usize::MAX));
    row_to_col
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn total(cost: &[Vec<f64>], assignment: &[Option<usize>]) -> f64 {
        assignment
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|j| cost[i][j]))
            .sum()
    }

    fn brute_force_min(cost: &[Vec<f64>]) -> f64 {
        let n = cost.len();
        let m = cost[0].len();
        let k = n.min(m);
        // all injective maps of the smaller side into the larger
        fn rec(cost: &[Vec<f64>], row: usize, k: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64, transpose: bool) {
            if row == k {
                *best = best.min(acc);
                return;
            }
            let m = used.len();
            for j in 0..m {
                if !used[j] {
                    used[j] = true;
                    let c = if transpose { cost[j][row] } else { cost[row][j] };
                    rec(cost, row + 1, k, used, acc + c, best, transpose);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        if n <= m {
            rec(cost, 0, k, &mut vec![false; m], 0.0, &mut best, false);
        } else {
            rec(cost, 0, k, &mut vec![false; n], 0.0, &mut best, true);
        }
        best
    }

    #[test]
    fn forced_diagonal() {
        let cost = vec![vec![1.0, 10.0], vec![10.0, 1.0]];
        let a = solve_assignment(&cost);
        assert_eq!(a, vec![Some(0), Some(1)]);
        assert_eq!(total(&cost, &a), 2.0);
    }

    #[test]
    fn identical_sets_have_zero_cost() {
        let cost = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ];
        let a = solve_assignment(&cost);
        assert_eq!(total(&cost, &a), 0.0);
    }

    #[test]
    fn classic_example() {
        let cost = vec![
            vec![8.0, 5.0, 9.0],
            vec![4.0, 2.0, 4.0],
            vec![7.0, 3.0, 8.0],
        ];
        let a = solve_assignment(&cost);
        assert_eq!(total(&cost, &a), 15.0);
    }

    #[test]
    fn rectangular_wide_and_tall() {
        let wide = vec![vec![5.0, 1.0, 3.0], vec![2.0, 7.0, 4.0]];
        let a = solve_assignment(&wide);
        assert_eq!(total(&wide, &a), 3.0); // 1 + 2
        let tall = vec![vec![5.0, 2.0], vec![1.0, 7.0], vec![3.0, 4.0]];
        let b = solve_assignment(&tall);
        assert_eq!(b.iter().flatten().count(), 2);
        assert_eq!(total(&tall, &b), 3.0);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for case in 0..300 {
            let n = rng.gen_range(1..=6);
            let m = rng.gen_range(1..=6);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.gen_range(0.0..100.0)).collect())
                .collect();
            let a = solve_assignment(&cost);
            let got = total(&cost, &a);
            let want = brute_force_min(&cost);
            assert!(
                (got - want).abs() < 1e-9,
                "case {case} ({n}x{m}): {got} vs brute {want}"
            );
        }
    }
}
