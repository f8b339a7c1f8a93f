//! Gradient of the optimal assignment cost with respect to whatever the
//! cost entries depend on.
//!
//! The optimal selector is held fixed: the solver sees detached numbers,
//! and the differentiable cost is the sum of the selected entries, so the
//! backward pass deposits exactly one unit of upstream gradient on each
//! chosen `(slot, target)` entry and nothing elsewhere.

use crate::assignment::{
    is_degenerate, solve_rectangular, AssignmentSolution, DEFAULT_DEGENERACY_TOLERANCE,
};
use crate::autodiff::{finite_diff_gradient, Tape, Tensor};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::setloss::{
    build_cost_matrix, cost_values, hungarian_loss_decomposed, GroundTruthSet, LossConfig,
    PredictionSet,
};

/// Solves on the numeric values of `cost` (`[N, M]`) and returns the
/// solution with the differentiable sum of its selected entries.
pub fn assignment_cost_with_grad<T: Scalar>(
    cost: &Tensor<T>,
) -> Result<(AssignmentSolution<T>, Tensor<T>)> {
    let values = cost_values(cost)?;
    let solution = solve_rectangular(&values)?;
    let m = values.cols();
    let selected: Vec<usize> = solution
        .mapping
        .iter()
        .enumerate()
        .map(|(j, &i)| i * m + j)
        .collect();
    let total = cost.reshape(&[cost.len()])?.gather(&selected)?.sum();
    Ok((solution, total))
}

/// Analytic-vs-numeric gradient comparison for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport<T> {
    pub max_relative_error: T,
    pub max_absolute_error: T,
    /// The optimal assignment at the base point has a tie.
    pub degenerate: bool,
    /// The optimal mapping was identical at every probe point.
    pub stable: bool,
    pub analytic: Vec<T>,
    pub numeric: Vec<T>,
}

impl<T: Scalar> GradCheckReport<T> {
    /// A report only says something about correctness when the selector
    /// was unique and constant across all probes.
    pub fn conclusive(&self) -> bool {
        self.stable && !self.degenerate
    }

    /// Every coordinate satisfies `|a - n| <= max(abs_tol, rel_tol * max(|a|, |n|))`.
    pub fn within(&self, abs_tol: T, rel_tol: T) -> bool {
        self.analytic
            .iter()
            .zip(&self.numeric)
            .all(|(&a, &n)| (a - n).abs() <= abs_tol.max(rel_tol * a.abs().max(n.abs())))
    }

    /// Conclusive and within tolerance. Inconclusive reports are not
    /// failures.
    pub fn passes(&self, abs_tol: T, rel_tol: T) -> bool {
        !self.conclusive() || self.within(abs_tol, rel_tol)
    }
}

/// Compares the backward pass of the decomposed set loss against central
/// finite differences at `params`.
///
/// The assignment is re-solved at every probe point; if it ever differs
/// from the base mapping the report is marked unstable.
pub fn certify_gradient<T, F>(
    preds_builder: F,
    gts: &GroundTruthSet<T>,
    cfg: &LossConfig<T>,
    params: &Tensor<T>,
    step: T,
) -> Result<GradCheckReport<T>>
where
    T: Scalar,
    F: Fn(&Tensor<T>) -> Result<PredictionSet<T>>,
{
    let tape = Tape::new();
    let leaf = tape.leaf(params);
    let preds = preds_builder(&leaf)?;
    let (base, loss) = hungarian_loss_decomposed(&preds, gts, cfg)?;
    let analytic = loss.total.backward()?.get_or_zeros(&leaf);

    let base_costs = cost_values(&build_cost_matrix(&preds.detach(), gts, cfg)?)?;
    let degenerate = is_degenerate(&base_costs, T::lit(DEFAULT_DEGENERACY_TOLERANCE))?.degenerate;

    let mut stable = true;
    let numeric = finite_diff_gradient(
        |probe| {
            let preds = preds_builder(probe)?;
            let (solution, loss) = hungarian_loss_decomposed(&preds, gts, cfg)?;
            stable &= solution.mapping == base.mapping;
            Ok(loss.total.item())
        },
        params,
        step,
    )?
    .values()
    .to_vec();

    let mut max_abs = T::zero();
    let mut max_rel = T::zero();
    for (&a, &n) in analytic.iter().zip(&numeric) {
        let err = (a - n).abs();
        max_abs = max_abs.max(err);
        let scale = a.abs().max(n.abs());
        if scale > T::zero() {
            max_rel = max_rel.max(err / scale);
        }
    }
    Ok(GradCheckReport {
        max_relative_error: max_rel,
        max_absolute_error: max_abs,
        degenerate,
        stable,
        analytic,
        numeric,
    })
}
