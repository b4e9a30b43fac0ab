//! Minimum-cost assignment of rows to distinct columns (Kuhn–Munkres with
//! potentials, shortest augmenting paths). Runs in `O(rows² · cols)`.
//!
//! Missing entries (`None`) are forbidden pairs. Rows may be fewer than
//! columns; every row is matched.

use std::ops::{Add, Sub};

use num_traits::Zero;

use crate::error::{Error, Result};

/// Cost type accepted by [`solve`]: integers, floats, or anything ordered with exact `+`/`-`.
pub trait Cost: Copy + PartialOrd + Zero + Add<Output = Self> + Sub<Output = Self> {}

impl<C: Copy + PartialOrd + Zero + Add<Output = C> + Sub<Output = C>> Cost for C {}

/// Returns the column chosen for each row and the total cost.
///
/// Among equal-cost candidates the lowest column index is scanned first.
pub fn solve<C: Cost>(cost: &[Vec<Option<C>>]) -> Result<(Vec<usize>, C)> {
    let rows = cost.len();
    if rows == 0 {
        return Ok((Vec::new(), C::zero()));
    }
    let cols = cost[0].len();
    if cost.iter().any(|r| r.len() != cols) {
        return Err(Error::Precondition("ragged cost matrix".into()));
    }
    if rows > cols {
        return Err(Error::InfeasibleMatching);
    }

    // 1-based indices; column 0 is the virtual root of each search tree.
    let mut u = vec![C::zero(); rows + 1];
    let mut v = vec![C::zero(); cols + 1];
    let mut matched_row = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for row in 1..=rows {
        matched_row[0] = row;
        let mut j0 = 0usize;
        let mut min_slack: Vec<Option<C>> = vec![None; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta: Option<C> = None;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                if let Some(c) = cost[i0 - 1][j - 1] {
                    let reduced = c - u[i0] - v[j];
                    if min_slack[j].is_none_or(|m| reduced < m) {
                        min_slack[j] = Some(reduced);
                        way[j] = j0;
                    }
                }
                if let Some(m) = min_slack[j] {
                    if delta.is_none_or(|d| m < d) {
                        delta = Some(m);
                        j1 = j;
                    }
                }
            }
            let delta = delta.ok_or(Error::InfeasibleMatching)?;
            for j in 0..=cols {
                if used[j] {
                    let r = matched_row[j];
                    u[r] = u[r] + delta;
                    v[j] = v[j] - delta;
                } else if let Some(m) = min_slack[j] {
                    min_slack[j] = Some(m - delta);
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; rows];
    for j in 1..=cols {
        if matched_row[j] != 0 {
            assignment[matched_row[j] - 1] = j - 1;
        }
    }
    let total = assignment
        .iter()
        .enumerate()
        .fold(C::zero(), |acc, (i, &j)| acc + cost[i][j].expect("matched pair is an edge"));
    Ok((assignment, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use proptest::prelude::*;

    fn brute_min(cost: &[Vec<Option<i64>>]) -> Option<i64> {
        let rows = cost.len();
        let cols = cost[0].len();
        (0..cols)
            .permutations(rows)
            .filter_map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<Option<i64>>())
            .min()
    }

    #[test]
    fn single_pair() {
        let (a, c) = solve(&[vec![Some(9)]]).unwrap();
        assert_eq!((a, c), (vec![0], 9));
    }

    #[test]
    fn three_by_three() {
        let m = [[4, 1, 3], [2, 0, 5], [3, 2, 2]];
        let cost: Vec<Vec<Option<i64>>> =
            m.iter().map(|r| r.iter().map(|&c| Some(c)).collect()).collect();
        let (_, total) = solve(&cost).unwrap();
        assert_eq!(total, 5);
        assert_eq!(brute_min(&cost), Some(5));
    }

    #[test]
    fn row_without_edges_is_infeasible() {
        let cost = vec![vec![Some(1.0), Some(2.0)], vec![None, None]];
        assert!(matches!(solve(&cost), Err(Error::InfeasibleMatching)));
    }

    #[test]
    fn hall_violation_is_infeasible() {
        let cost = vec![vec![Some(1), None, None], vec![Some(2), None, None]];
        assert!(matches!(solve(&cost), Err(Error::InfeasibleMatching)));
    }

    #[test]
    fn rectangular_and_ties_pick_lowest_column() {
        let cost = vec![vec![Some(1.0), Some(1.0), Some(1.0)]];
        assert_eq!(solve(&cost).unwrap().0, vec![0]);
    }

    proptest! {
        #[test]
        fn matches_permutation_enumeration(
            rows in 1usize..=5,
            extra in 0usize..=2,
            seed in prop::collection::vec(prop::option::weighted(0.8, 0i64..50), 49),
        ) {
            let cols = rows + extra;
            let cost: Vec<Vec<Option<i64>>> = (0..rows)
                .map(|i| (0..cols).map(|j| seed[(i * 7 + j) % seed.len()]).collect())
                .collect();
            match (solve(&cost), brute_min(&cost)) {
                (Ok((assign, total)), Some(best)) => {
                    prop_assert_eq!(total, best);
                    prop_assert!(assign.iter().all_unique());
                }
                (Err(Error::InfeasibleMatching), None) => {}
                (got, want) => prop_assert!(false, "solver {:?} vs brute {:?}", got.ok(), want),
            }
        }
    }
}
