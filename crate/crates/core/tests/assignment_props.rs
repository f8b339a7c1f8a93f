//! Solver properties on random matrices, checked against enumeration.

use proptest::prelude::*;
use setmatch::assignment::{
    brute_force_assignment, is_degenerate, pad_square, parse_cost_matrix, solve_rectangular,
    DEFAULT_DEGENERACY_TOLERANCE,
};
use setmatch::CostMatrix;

/// `(rows, cols, entries)` with `cols <= rows <= max_rows`.
fn matrix(max_rows: usize) -> impl Strategy<Value = CostMatrix> {
    (1..=max_rows)
        .prop_flat_map(|n| (Just(n), 0..=n))
        .prop_flat_map(|(n, m)| {
            let entries = prop_oneof![
                prop::collection::vec(-10.0..10.0f64, n * m),
                prop::collection::vec((0..3u8).prop_map(f64::from), n * m),
            ];
            (Just(n), Just(m), entries)
        })
        .prop_map(|(n, m, e)| CostMatrix::new(n, m, e).unwrap())
}

fn non_degenerate(c: &CostMatrix) -> bool {
    !is_degenerate(c, DEFAULT_DEGENERACY_TOLERANCE)
        .unwrap()
        .degenerate
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_enumeration(c in matrix(7)) {
        let fast = solve_rectangular(&c).unwrap();
        let slow = brute_force_assignment(&c).unwrap();
        prop_assert_eq!(fast.total_cost, slow.total_cost);
        if non_degenerate(&c) {
            prop_assert_eq!(fast.mapping, slow.mapping);
        }
    }

    #[test]
    fn solution_is_injective_and_partitions_slots(c in matrix(8)) {
        let s = solve_rectangular(&c).unwrap();
        let mut seen = vec![false; c.rows()];
        for &i in &s.mapping {
            prop_assert!(!seen[i]);
            seen[i] = true;
        }
        prop_assert_eq!(s.matched.len() + s.unmatched.len(), c.rows());
        prop_assert_eq!(s.total_cost, c.mapping_cost(&s.mapping));
    }

    #[test]
    fn row_permutation_equivariance(c in matrix(7), seed in any::<u64>()) {
        prop_assume!(non_degenerate(&c));
        let n = c.rows();
        // deterministic shuffle from the seed
        let mut order: Vec<usize> = (0..n).collect();
        let mut state = seed;
        for k in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(k, (state >> 33) as usize % (k + 1));
        }
        let permuted = c.permute_rows(&order).unwrap();
        let a = solve_rectangular(&c).unwrap();
        let b = solve_rectangular(&permuted).unwrap();
        // row r of the permuted matrix is row order[r] of the original
        let mapped: Vec<usize> = b.mapping.iter().map(|&r| order[r]).collect();
        prop_assert_eq!(mapped, a.mapping);
        prop_assert!((a.total_cost - b.total_cost).abs() <= 1e-9 * (1.0 + a.total_cost.abs()));
    }

    #[test]
    fn column_shift_keeps_the_mapping(c in matrix(7), shift in prop::collection::vec(-5.0..5.0f64, 7)) {
        prop_assume!(non_degenerate(&c));
        let (n, m) = (c.rows(), c.cols());
        let entries = (0..n).flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| c.get(i, j) + shift[j]).collect();
        let shifted = CostMatrix::new(n, m, entries).unwrap();
        prop_assume!(non_degenerate(&shifted));
        let a = solve_rectangular(&c).unwrap();
        let b = solve_rectangular(&shifted).unwrap();
        prop_assert_eq!(&a.mapping, &b.mapping);
        let expected = a.total_cost + shift[..m].iter().sum::<f64>();
        prop_assert!((b.total_cost - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }

    #[test]
    fn padding_conformance(c in matrix(7), seed in any::<u64>()) {
        prop_assume!(c.cols() < c.rows() && c.cols() > 0);
        let best = brute_force_assignment(&c).unwrap();
        // require a clear winner: every other mapping costs at least 1e-6 more
        let mut second = f64::INFINITY;
        setmatch::assignment::for_each_mapping(c.rows(), c.cols(), |m| {
            if m != best.mapping.as_slice() {
                second = second.min(c.mapping_cost(m));
            }
        });
        prop_assume!(second - best.total_cost >= 1e-6);
        let square = solve_rectangular(&pad_square(&c, 1e-9, seed).unwrap()).unwrap();
        prop_assert_eq!(&square.mapping[..c.cols()], best.mapping.as_slice());
    }

    #[test]
    fn text_round_trip(c in matrix(6)) {
        let mut text = format!("# random\n{} {}\n", c.rows(), c.cols());
        for i in 0..c.rows() {
            let row: Vec<String> = (0..c.cols()).map(|j| c.get(i, j).to_string()).collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        prop_assert_eq!(parse_cost_matrix(&text).unwrap(), c);
    }
}
