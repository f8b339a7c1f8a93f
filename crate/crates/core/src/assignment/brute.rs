use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::matrix::{AssignmentSolution, CostMatrix};

/// Largest row count accepted by the enumeration routines.
pub const ENUMERATION_LIMIT: usize = 9;

pub(crate) fn check_enumerable<T: Scalar>(costs: &CostMatrix<T>) -> Result<()> {
    if costs.rows() > ENUMERATION_LIMIT {
        return Err(Error::TooLargeForEnumeration {
            rows: costs.rows(),
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Calls `visit` with every injective mapping, in lexicographic order.
pub fn for_each_mapping(rows: usize, cols: usize, mut visit: impl FnMut(&[usize])) {
    fn recurse(
        rows: usize,
        cols: usize,
        used: &mut [bool],
        prefix: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if prefix.len() == cols {
            visit(prefix);
            return;
        }
        for i in 0..rows {
            if used[i] {
                continue;
            }
            used[i] = true;
            prefix.push(i);
            recurse(rows, cols, used, prefix, visit);
            prefix.pop();
            used[i] = false;
        }
    }
    if cols > rows {
        return;
    }
    recurse(
        rows,
        cols,
        &mut vec![false; rows],
        &mut Vec::with_capacity(cols),
        &mut visit,
    );
}

/// Exhaustive minimum over all `N!/(N-M)!` injective mappings. The first
/// mapping in lexicographic order wins ties.
pub fn brute_force_assignment<T: Scalar>(costs: &CostMatrix<T>) -> Result<AssignmentSolution<T>> {
    check_enumerable(costs)?;
    let mut best: Option<(T, Vec<usize>)> = None;
    for_each_mapping(costs.rows(), costs.cols(), |mapping| {
        let total = costs.mapping_cost(mapping);
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, mapping.to_vec()));
        }
    });
    let (_, mapping) = best.expect("at least one injective mapping exists when cols <= rows");
    AssignmentSolution::from_mapping(costs, mapping)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_in_lexicographic_order() {
        let mut seen = Vec::new();
        for_each_mapping(3, 2, |m| seen.push(m.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 2],
                vec![2, 0],
                vec![2, 1]
            ]
        );
    }

    #[test]
    fn examples() {
        let c = CostMatrix::from_rows(&[vec![5.0, 9.0], vec![1.0, 3.0], vec![2.0, 2.0]]).unwrap();
        let s = brute_force_assignment(&c).unwrap();
        assert_eq!((s.mapping, s.total_cost), (vec![1, 2], 3.0));

        let c = CostMatrix::from_rows(&[vec![7.0]]).unwrap();
        let s = brute_force_assignment(&c).unwrap();
        assert_eq!((s.mapping, s.total_cost), (vec![0], 7.0));

        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(brute_force_assignment(&c).unwrap().mapping, vec![0, 1]);
    }

    #[test]
    fn refuses_large_inputs() {
        let c = CostMatrix::new(10, 1, vec![0.0; 10]).unwrap();
        assert!(matches!(
            brute_force_assignment(&c),
            Err(Error::TooLargeForEnumeration { rows: 10, .. })
        ));
    }
}
