use crate::assignment::CostMatrix;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::boxes::box_loss_rows;
use super::{GroundTruthSet, LossConfig, PredictionSet};

/// Class and box parts of every `(slot, target)` pair, flattened row-major
/// over an `N x M` grid.
pub(crate) struct PairTerms<T> {
    pub class: Tensor<T>,
    pub boxes: Tensor<T>,
}

pub(crate) fn check_sizes<T: Scalar>(
    preds: &PredictionSet<T>,
    gts: &GroundTruthSet<T>,
) -> Result<()> {
    if gts.len() > preds.num_slots() {
        return Err(Error::MoreTargetsThanSlots {
            rows: preds.num_slots(),
            cols: gts.len(),
        });
    }
    gts.check_labels(preds.num_classes())
}

fn flat_index(slot: usize, class: usize, k1: usize) -> usize {
    slot * k1 + class
}

/// Every target's box repeated once per slot, `[N*M, 4]`.
fn target_grid<T: Scalar>(n: usize, gts: &GroundTruthSet<T>) -> Result<Tensor<T>> {
    let m = gts.len();
    let mut v = Vec::with_capacity(n * m * 4);
    for _ in 0..n {
        for b in &gts.boxes {
            v.extend_from_slice(b);
        }
    }
    Tensor::new(&[n * m, 4], v)
}

/// Every slot's predicted box repeated once per target, `[N*M, 4]`.
fn prediction_grid<T: Scalar>(preds: &PredictionSet<T>, m: usize) -> Result<Tensor<T>> {
    let n = preds.num_slots();
    let idx: Vec<usize> = (0..n)
        .flat_map(|i| (0..m).flat_map(move |_| (0..4).map(move |c| i * 4 + c)))
        .collect();
    preds
        .boxes
        .reshape(&[n * 4])?
        .gather(&idx)?
        .reshape(&[n * m, 4])
}

pub(crate) fn pair_terms<T: Scalar>(
    preds: &PredictionSet<T>,
    gts: &GroundTruthSet<T>,
    cfg: &LossConfig<T>,
) -> Result<PairTerms<T>> {
    check_sizes(preds, gts)?;
    let n = preds.num_slots();
    let m = gts.len();
    let k1 = preds.num_classes() + 1;
    let bg = preds.background_index();

    let logprobs = preds.class_logprobs.reshape(&[n * k1])?;
    let mut class_idx = Vec::with_capacity(n * m);
    let mut bg_idx = Vec::with_capacity(n * m);
    for i in 0..n {
        for &c in &gts.classes {
            class_idx.push(flat_index(i, c, k1));
            bg_idx.push(flat_index(i, bg, k1));
        }
    }
    // -log p(c_j) + log p(background)
    let class = logprobs
        .gather(&bg_idx)?
        .sub(&logprobs.gather(&class_idx)?)?
        .scale(cfg.lambda_class);
    let boxes = box_loss_rows(&target_grid(n, gts)?, &prediction_grid(preds, m)?, cfg)?;
    Ok(PairTerms { class, boxes })
}

/// Aligned `N x M` cost: `lambda_class * (log p_i(bg) - log p_i(c_j)) +
/// box_loss(b_j, b_hat_i)`. Carries the predictions' tape.
pub fn build_cost_matrix<T: Scalar>(
    preds: &PredictionSet<T>,
    gts: &GroundTruthSet<T>,
    cfg: &LossConfig<T>,
) -> Result<Tensor<T>> {
    let terms = pair_terms(preds, gts, cfg)?;
    terms
        .class
        .add(&terms.boxes)?
        .reshape(&[preds.num_slots(), gts.len()])
}

/// Detached copy of a cost tensor, ready for the solver.
pub fn cost_values<T: Scalar>(cost: &Tensor<T>) -> Result<CostMatrix<T>> {
    let &[n, m] = cost.shape() else {
        return Err(Error::ShapeMismatch {
            op: "cost_values",
            left: cost.shape().to_vec(),
            right: vec![],
        });
    };
    CostMatrix::new(n, m, cost.values().to_vec())
}

/// The original matching cost: `-lambda_class * p_i(c_j) + box_loss`, using
/// raw probabilities and matched pairs only. Detached; for comparisons.
pub fn baseline_cost_matrix<T: Scalar>(
    preds: &PredictionSet<T>,
    gts: &GroundTruthSet<T>,
    cfg: &LossConfig<T>,
) -> Result<CostMatrix<T>> {
    let preds = preds.detach();
    check_sizes(&preds, gts)?;
    let n = preds.num_slots();
    let m = gts.len();
    let boxes = box_loss_rows(&target_grid(n, gts)?, &prediction_grid(&preds, m)?, cfg)?;
    let mut entries = Vec::with_capacity(n * m);
    for i in 0..n {
        for (j, &c) in gts.classes.iter().enumerate() {
            let p = preds.logprob(i, c).exp();
            entries.push(-cfg.lambda_class * p + boxes.values()[i * m + j]);
        }
    }
    CostMatrix::new(n, m, entries)
}
