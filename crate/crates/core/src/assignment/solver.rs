//! Exact rectangular solver: shortest augmenting paths with dual
//! potentials, one target column at a time.

use crate::error::Result;
use crate::scalar::Scalar;

use super::matrix::{AssignmentSolution, CostMatrix};

/// Primal mapping plus the dual potentials certifying it.
pub(crate) struct DualSolution<T> {
    pub mapping: Vec<usize>,
    /// One potential per target column.
    pub col_potential: Vec<T>,
    /// One potential per slot row; zero for unmatched slots.
    pub row_potential: Vec<T>,
}

impl<T: Scalar> DualSolution<T> {
    pub fn reduced_cost(&self, costs: &CostMatrix<T>, row: usize, col: usize) -> T {
        costs.get(row, col) - self.col_potential[col] - self.row_potential[row]
    }
}

/// Shortest-augmenting-path assignment of every column to a distinct row.
///
/// Columns play the role of "workers" and rows of "jobs"; potentials are
/// kept 1-indexed internally with index 0 as the virtual source.
pub(crate) fn augmenting_paths<T: Scalar>(costs: &CostMatrix<T>) -> DualSolution<T> {
    let n = costs.cols();
    let m = costs.rows();
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); m + 1];
    // owner[r] = column (1-based) currently holding row r, 0 if free
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for col in 1..=n {
        owner[0] = col;
        let mut r0 = 0usize;
        let mut min_slack = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[r0] = true;
            let c0 = owner[r0];
            let mut delta = inf;
            let mut r1 = 0usize;
            for r in 1..=m {
                if used[r] {
                    continue;
                }
                let cur = costs.get(r - 1, c0 - 1) - u[c0] - v[r];
                if cur < min_slack[r] {
                    min_slack[r] = cur;
                    way[r] = r0;
                }
                if min_slack[r] < delta {
                    delta = min_slack[r];
                    r1 = r;
                }
            }
            for r in 0..=m {
                if used[r] {
                    u[owner[r]] = u[owner[r]] + delta;
                    v[r] = v[r] - delta;
                } else {
                    min_slack[r] = min_slack[r] - delta;
                }
            }
            r0 = r1;
            if owner[r0] == 0 {
                break;
            }
        }
        loop {
            let r1 = way[r0];
            owner[r0] = owner[r1];
            r0 = r1;
            if r0 == 0 {
                break;
            }
        }
    }

    let mut mapping = vec![0usize; n];
    for r in 1..=m {
        if owner[r] > 0 {
            mapping[owner[r] - 1] = r - 1;
        }
    }
    DualSolution {
        mapping,
        col_potential: u[1..].to_vec(),
        row_potential: v[1..].to_vec(),
    }
}

/// Reduced-cost threshold under which an edge is treated as possibly tight.
pub(crate) fn tight_tolerance<T: Scalar>(costs: &CostMatrix<T>) -> T {
    let scale = T::one() + costs.max_abs();
    let base = if T::epsilon() < T::lit(1e-12) {
        1e-9
    } else {
        1e-4
    };
    T::lit(base) * scale * T::lit((costs.cols().max(1)) as f64)
}

/// True when some edge outside the mapping has (near-)zero reduced cost,
/// i.e. another optimal mapping may exist.
fn has_alternative_tight_edge<T: Scalar>(costs: &CostMatrix<T>, dual: &DualSolution<T>) -> bool {
    let tol = tight_tolerance(costs);
    (0..costs.cols()).any(|j| {
        (0..costs.rows()).any(|i| i != dual.mapping[j] && dual.reduced_cost(costs, i, j) <= tol)
    })
}

/// Best completion of `prefix` (assignments for columns `0..prefix.len()`).
pub(crate) fn complete_prefix<T: Scalar>(costs: &CostMatrix<T>, prefix: &[usize]) -> Vec<usize> {
    let mut fixed = vec![false; costs.rows()];
    for &i in prefix {
        fixed[i] = true;
    }
    let free_rows: Vec<usize> = (0..costs.rows()).filter(|&i| !fixed[i]).collect();
    let rest_cols: Vec<usize> = (prefix.len()..costs.cols()).collect();
    let sub = costs.select(&free_rows, &rest_cols);
    let tail = augmenting_paths(&sub).mapping;
    let mut mapping = prefix.to_vec();
    mapping.extend(tail.into_iter().map(|k| free_rows[k]));
    mapping
}

/// Minimum-cost injective mapping of the columns of `costs` onto its rows.
///
/// Among equal-cost optima the lexicographically smallest mapping is
/// returned.
pub fn solve_rectangular<T: Scalar>(costs: &CostMatrix<T>) -> Result<AssignmentSolution<T>> {
    let dual = augmenting_paths(costs);
    if !has_alternative_tight_edge(costs, &dual) {
        return AssignmentSolution::from_mapping(costs, dual.mapping);
    }

    // Possible ties: walk the columns fixing the smallest row that still
    // admits an optimal completion.
    let tol = tight_tolerance(costs);
    let mut current = dual.mapping.clone();
    let mut best = costs.mapping_cost(&current);
    for j in 0..costs.cols() {
        let prefix = &current[..j];
        let candidates: Vec<usize> = (0..current[j])
            .filter(|i| !prefix.contains(i))
            .filter(|&i| dual.reduced_cost(costs, i, j) <= tol)
            .collect();
        for i in candidates {
            let mut trial = current[..j].to_vec();
            trial.push(i);
            let full = complete_prefix(costs, &trial);
            let total = costs.mapping_cost(&full);
            if total <= best {
                best = total;
                current = full;
                break;
            }
        }
    }
    AssignmentSolution::from_mapping(costs, current)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> CostMatrix<f64> {
        CostMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn diagonal() {
        let s = solve_rectangular(&m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(s.mapping, vec![0, 1]);
        assert_eq!(s.total_cost, 0.0);
    }

    #[test]
    fn rectangular_three_by_two() {
        let s = solve_rectangular(&m(&[&[5.0, 9.0], &[1.0, 3.0], &[2.0, 2.0]])).unwrap();
        assert_eq!(s.mapping, vec![1, 2]);
        assert_eq!(s.total_cost, 3.0);
        assert_eq!(s.matched, vec![1, 2]);
        assert_eq!(s.unmatched, vec![0]);
    }

    #[test]
    fn no_targets() {
        let c = CostMatrix::<f64>::new(3, 0, vec![]).unwrap();
        let s = solve_rectangular(&c).unwrap();
        assert!(s.mapping.is_empty());
        assert_eq!(s.total_cost, 0.0);
        assert_eq!(s.unmatched, vec![0, 1, 2]);
    }

    #[test]
    fn empty_problem() {
        let c = CostMatrix::<f64>::new(0, 0, vec![]).unwrap();
        assert!(solve_rectangular(&c).unwrap().mapping.is_empty());
    }

    #[test]
    fn ties_break_lexicographically() {
        let s = solve_rectangular(&m(&[&[0.0, 1.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(s.mapping, vec![0, 1]);
        let s = solve_rectangular(&m(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert_eq!(s.mapping, vec![0, 1]);
        let s = solve_rectangular(&m(&[&[3.0, 3.0], &[0.0, 0.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(s.mapping, vec![1, 2]);
    }

    #[test]
    fn negative_entries() {
        let s = solve_rectangular(&m(&[&[-5.0, -1.0], &[-4.0, -3.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(s.mapping, vec![0, 1]);
        assert_eq!(s.total_cost, -8.0);
    }

    #[test]
    fn single_precision() {
        let c = CostMatrix::<f32>::from_rows(&[vec![5.0, 9.0], vec![1.0, 3.0], vec![2.0, 2.0]])
            .unwrap();
        assert_eq!(solve_rectangular(&c).unwrap().mapping, vec![1, 2]);
    }

    #[test]
    fn dual_is_feasible() {
        let c = m(&[
            &[4.0, 1.0, 3.0],
            &[2.0, 0.0, 5.0],
            &[3.0, 2.0, 2.0],
            &[1.0, 7.0, 0.5],
        ]);
        let d = augmenting_paths(&c);
        for i in 0..4 {
            for j in 0..3 {
                assert!(d.reduced_cost(&c, i, j) >= -1e-12);
            }
        }
        for (j, &i) in d.mapping.iter().enumerate() {
            assert!(d.reduced_cost(&c, i, j).abs() < 1e-12);
        }
    }
}
