//! Exact solver for the linear assignment problem (Hungarian method with
//! potentials, O(n^3)). Costs are integers; callers working in half-unit
//! costs double them first.

use alloc::vec;
use alloc::vec::Vec;

const INF: i64 = i64::MAX / 4;

/// Minimum-cost perfect matching on a square cost matrix.
/// Returns (total cost, assignment) where `assignment[row] = col`.
pub fn solve_min_assignment(cost: &[Vec<i64>]) -> (i64, Vec<usize>) {
    let n = cost.len();
    if n == 0 {
        return (0, Vec::new());
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));

    // 1-indexed potentials; p[j] = row matched to column j.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
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

    let mut assignment = vec![0usize; n];
    let mut total = 0;
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
            total += cost[p[j] - 1][j - 1];
        }
    }
    (total, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(cost: &[Vec<i64>]) -> i64 {
        fn rec(cost: &[Vec<i64>], row: usize, used: &mut [bool]) -> i64 {
            let n = cost.len();
            if row == n {
                return 0;
            }
            let mut best = INF;
            for col in 0..n {
                if !used[col] {
                    used[col] = true;
                    let c = cost[row][col] + rec(cost, row + 1, used);
                    if c < best {
                        best = c;
                    }
                    used[col] = false;
                }
            }
            best
        }
        let mut used = vec![false; cost.len()];
        rec(cost, 0, &mut used)
    }

    #[test]
    fn small_known_instance() {
        let cost = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        let (total, asg) = solve_min_assignment(&cost);
        assert_eq!(total, 5);
        // Assignment is a permutation.
        let mut seen = [false; 3];
        for &c in &asg {
            assert!(!seen[c]);
            seen[c] = true;
        }
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=6);
            let cost: Vec<Vec<i64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(0..50)).collect())
                .collect();
            let (total, _) = solve_min_assignment(&cost);
            assert_eq!(total, brute_force(&cost));
        }
    }
}
