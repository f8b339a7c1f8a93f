use crate::error::Result;
use crate::scalar::Scalar;

use super::brute::{for_each_mapping, ENUMERATION_LIMIT};
use super::matrix::CostMatrix;
use super::solver::{augmenting_paths, complete_prefix, solve_rectangular, tight_tolerance};

/// Default tolerance on total cost for calling two mappings tied.
pub const DEFAULT_DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Outcome of [`is_degenerate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Degeneracy {
    pub degenerate: bool,
    /// A second mapping whose cost is within tolerance of the optimum.
    pub alternative: Option<Vec<usize>>,
}

/// Reports whether a mapping other than the solver's optimum comes within
/// `tolerance` of the optimal total cost.
///
/// Up to [`ENUMERATION_LIMIT`] rows every mapping is enumerated. Larger
/// problems force each near-tight edge outside the optimum in turn and
/// re-solve the remainder, which is exact as well.
pub fn is_degenerate<T: Scalar>(costs: &CostMatrix<T>, tolerance: T) -> Result<Degeneracy> {
    let best = solve_rectangular(costs)?;
    let threshold = best.total_cost + tolerance;

    let alternative = if costs.rows() <= ENUMERATION_LIMIT {
        let mut found = None;
        for_each_mapping(costs.rows(), costs.cols(), |mapping| {
            if found.is_none()
                && mapping != best.mapping.as_slice()
                && costs.mapping_cost(mapping) <= threshold
            {
                found = Some(mapping.to_vec());
            }
        });
        found
    } else {
        forced_edge_alternative(costs, &best.mapping, threshold, tolerance)
    };

    Ok(Degeneracy {
        degenerate: alternative.is_some(),
        alternative,
    })
}

/// Any optimum within `threshold` that differs from `optimum` must use some
/// edge outside it whose reduced cost is at most `tolerance`; try each.
fn forced_edge_alternative<T: Scalar>(
    costs: &CostMatrix<T>,
    optimum: &[usize],
    threshold: T,
    tolerance: T,
) -> Option<Vec<usize>> {
    let dual = augmenting_paths(costs);
    let slack = tolerance + tight_tolerance(costs);
    for (j, &chosen) in optimum.iter().enumerate() {
        for i in 0..costs.rows() {
            if i == chosen || dual.reduced_cost(costs, i, j) > slack {
                continue;
            }
            let forced = forced_completion(costs, i, j);
            if costs.mapping_cost(&forced) <= threshold {
                return Some(forced);
            }
        }
    }
    None
}

/// Best mapping that assigns target `col` to slot `row`.
fn forced_completion<T: Scalar>(costs: &CostMatrix<T>, row: usize, col: usize) -> Vec<usize> {
    // move the forced column to the front, complete, then restore order
    let order: Vec<usize> = std::iter::once(col)
        .chain((0..costs.cols()).filter(|&c| c != col))
        .collect();
    let rows: Vec<usize> = (0..costs.rows()).collect();
    let reordered = costs.select(&rows, &order);
    let completed = complete_prefix(&reordered, &[row]);
    let mut mapping = vec![0; costs.cols()];
    for (k, &c) in order.iter().enumerate() {
        mapping[c] = completed[k];
    }
    mapping
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> CostMatrix<f64> {
        CostMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identical_rows_tie() {
        let d = is_degenerate(&m(&[&[0.0, 1.0], &[0.0, 1.0]]), 1e-9).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.alternative, Some(vec![1, 0]));
    }

    #[test]
    fn unique_optimum() {
        let d = is_degenerate(&m(&[&[0.0, 1.0], &[1.0, 0.0]]), 1e-9).unwrap();
        assert!(!d.degenerate);
        assert!(d.alternative.is_none());
    }

    #[test]
    fn large_problem_uses_forced_edges() {
        // 12 x 3, optimum unique
        let mut rows: Vec<Vec<f64>> = (0..12).map(|i| vec![10.0 + i as f64; 3]).collect();
        rows[4] = vec![0.0, 5.0, 5.0];
        rows[7] = vec![5.0, 0.0, 5.0];
        rows[9] = vec![5.0, 5.0, 0.0];
        let c = CostMatrix::from_rows(&rows).unwrap();
        assert!(!is_degenerate(&c, 1e-9).unwrap().degenerate);

        // permutation tie between two slots with identical rows
        rows[10] = rows[9].clone();
        let c = CostMatrix::from_rows(&rows).unwrap();
        let d = is_degenerate(&c, 1e-9).unwrap();
        assert!(d.degenerate);
        let alt = d.alternative.unwrap();
        assert_eq!(alt, vec![4, 7, 10]);
        assert_eq!(c.mapping_cost(&alt), 0.0);
    }

    #[test]
    fn empty_targets_never_degenerate() {
        let c = CostMatrix::<f64>::new(4, 0, vec![]).unwrap();
        assert!(!is_degenerate(&c, 1e-9).unwrap().degenerate);
    }
}
