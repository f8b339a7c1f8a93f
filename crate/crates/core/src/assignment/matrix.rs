use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Detached `rows x cols` matrix of assignment costs, row-major.
///
/// Rows are prediction slots, columns are targets; `rows >= cols`.
#[derive(Clone, PartialEq)]
pub struct CostMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn new(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::BadLength {
                shape: vec![rows, cols],
                values: entries.len(),
                expected: rows * cols,
            });
        }
        if cols > rows {
            return Err(Error::MoreTargetsThanSlots { rows, cols });
        }
        if let Some(k) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("cost entry ({}, {})", k / cols, k % cols),
                value: entries[k].as_f64(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::BadLength {
                shape: vec![rows.len(), cols],
                values: bad.len(),
                expected: cols,
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.entries[row * self.cols + col]
    }

    /// Sum of `C(mapping[j], j)` accumulated in column order.
    pub fn mapping_cost(&self, mapping: &[usize]) -> T {
        mapping
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (j, &i)| acc + self.get(i, j))
    }

    /// Copy with rows reordered so that new row `k` is old row `order[k]`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for &r in order {
            entries.extend_from_slice(&self.entries[r * self.cols..(r + 1) * self.cols]);
        }
        Self::new(order.len(), self.cols, entries)
    }

    /// Largest absolute entry, zero for an empty matrix.
    pub(crate) fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Sub-matrix keeping the listed rows and columns, in the given order.
    pub(crate) fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            entries.extend(cols.iter().map(|&c| self.get(r, c)));
        }
        Self {
            rows: rows.len(),
            cols: cols.len(),
            entries,
        }
    }
}

impl<T: Scalar> fmt::Debug for CostMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CostMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| format!("{}", self.get(r, c)))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// An injective mapping from targets to prediction slots, with its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSolution<T> {
    /// `mapping[j]` is the slot assigned to target `j`.
    pub mapping: Vec<usize>,
    pub total_cost: T,
    /// Slots in the image of `mapping`, ascending.
    pub matched: Vec<usize>,
    /// Remaining slots, ascending.
    pub unmatched: Vec<usize>,
}

impl<T: Scalar> AssignmentSolution<T> {
    /// Builds a solution from a mapping, checking injectivity and bounds.
    pub fn from_mapping(costs: &CostMatrix<T>, mapping: Vec<usize>) -> Result<Self> {
        let (matched, unmatched) = partition_slots(costs.rows(), costs.cols(), &mapping)?;
        let total_cost = costs.mapping_cost(&mapping);
        Ok(Self {
            mapping,
            total_cost,
            matched,
            unmatched,
        })
    }

    /// Inverse mapping: `inverse()[i]` is the target matched to slot `i`.
    pub fn inverse(&self) -> Vec<Option<usize>> {
        let n = self.matched.len() + self.unmatched.len();
        let mut inv = vec![None; n];
        for (j, &i) in self.mapping.iter().enumerate() {
            inv[i] = Some(j);
        }
        inv
    }

    /// The 0/1 selector over column-stacked cost entries: position
    /// `j * rows + i` is one iff slot `i` is assigned to target `j`.
    pub fn indicator(&self) -> Vec<T> {
        let rows = self.matched.len() + self.unmatched.len();
        let mut u = vec![T::zero(); rows * self.mapping.len()];
        for (j, &i) in self.mapping.iter().enumerate() {
            u[j * rows + i] = T::one();
        }
        u
    }
}

/// Validates `mapping` against an `rows x cols` problem and splits the slots
/// into matched and unmatched sets.
pub fn partition_slots(
    rows: usize,
    cols: usize,
    mapping: &[usize],
) -> Result<(Vec<usize>, Vec<usize>)> {
    if mapping.len() != cols {
        return Err(Error::InvalidMapping(format!(
            "expected {cols} entries, got {}",
            mapping.len()
        )));
    }
    let mut taken = vec![false; rows];
    for (j, &i) in mapping.iter().enumerate() {
        if i >= rows {
            return Err(Error::InvalidMapping(format!(
                "target {j} mapped to slot {i}, only {rows} slots"
            )));
        }
        if taken[i] {
            return Err(Error::InvalidMapping(format!("slot {i} used twice")));
        }
        taken[i] = true;
    }
    let matched = (0..rows).filter(|&i| taken[i]).collect();
    let unmatched = (0..rows).filter(|&i| !taken[i]).collect();
    Ok((matched, unmatched))
}

/// Constraint structure of the assignment problem written as an integer
/// program. Kept as documentation; never materialized or solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssignmentIlp {
    pub rows: usize,
    pub cols: usize,
}

impl AssignmentIlp {
    pub fn describe(&self) -> String {
        format!(
            "minimize c^T u over u in {{0,1}}^{n}, c = column-stacked {r}x{m} costs; \
             each of the {m} columns matched exactly once (sum_i u[j*{r}+i] = 1); \
             each of the {r} rows used at most once (sum_j u[j*{r}+i] <= 1)",
            n = self.rows * self.cols,
            r = self.rows,
            m = self.cols,
        )
    }
}
