//! Plain-text cost matrices: a `N M` header line followed by `N` rows of `M`
//! whitespace-separated numbers. Lines starting with `#` and blank lines
//! are skipped.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::matrix::{AssignmentSolution, CostMatrix};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_cost_matrix(text: &str) -> Result<CostMatrix<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing `N M` header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let [n, m] = dims.as_slice() else {
        return Err(parse_err(header_line, "header must be `N M`"));
    };
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(header_line, format!("bad dimension `{s}`")))
    };
    let (rows, cols) = (parse_dim(n)?, parse_dim(m)?);
    if cols > rows {
        return Err(Error::MoreTargetsThanSlots { rows, cols });
    }

    let mut entries = Vec::with_capacity(rows * cols);
    // rows of a zero-column matrix are blank and need not appear
    let listed = if cols == 0 { 0 } else { rows };
    for r in 0..listed {
        let (line_no, line) = lines.next().ok_or_else(|| {
            parse_err(
                text.lines().count() + 1,
                format!("expected {rows} rows, found {r}"),
            )
        })?;
        let before = entries.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad number `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite entry `{tok}`")));
            }
            entries.push(v);
        }
        if entries.len() - before != cols {
            return Err(parse_err(
                line_no,
                format!("expected {cols} entries, found {}", entries.len() - before),
            ));
        }
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(parse_err(line_no, "unexpected extra row"));
    }
    CostMatrix::new(rows, cols, entries)
}

/// `cost <value>` then one `j s(j)` line per target.
pub fn format_solution<T: Scalar>(solution: &AssignmentSolution<T>) -> String {
    let mut out = format!("cost {}\n", solution.total_cost);
    for (j, i) in solution.mapping.iter().enumerate() {
        let _ = writeln!(out, "{j} {i}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::solve_rectangular;

    #[test]
    fn parses_and_solves() {
        let c = parse_cost_matrix("# demo\n3 2\n5 9\n1 3\n\n2 2\n").unwrap();
        let s = solve_rectangular(&c).unwrap();
        assert_eq!(format_solution(&s), "cost 3\n0 1\n1 2\n");
        let c = parse_cost_matrix("1 1\n7\n").unwrap();
        assert_eq!(
            format_solution(&solve_rectangular(&c).unwrap()),
            "cost 7\n0 0\n"
        );
    }

    #[test]
    fn reports_line_numbers() {
        match parse_cost_matrix("2 2\n1 2\n3 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_cost_matrix("2 2\n1 2 3\n3 4\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_cost_matrix("2 1\n1\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_cost_matrix("1 1\n1\n2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn rejects_wide_matrices() {
        assert!(matches!(
            parse_cost_matrix("2 3\n1 2 3\n4 5 6\n"),
            Err(Error::MoreTargetsThanSlots { rows: 2, cols: 3 })
        ));
    }
}
