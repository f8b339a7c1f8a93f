use crate::assignment::{partition_slots, AssignmentSolution};
use crate::autodiff::Tensor;
use crate::error::Result;
use crate::gradbridge::assignment_cost_with_grad;
use crate::scalar::Scalar;

use super::boxes::box_loss;
use super::cost::{check_sizes, pair_terms};
use super::{GroundTruthSet, LossBreakdown, LossConfig, PredictionSet, SetLoss};

fn background_term<T: Scalar>(preds: &PredictionSet<T>, cfg: &LossConfig<T>) -> Result<Tensor<T>> {
    let n = preds.num_slots();
    let k1 = preds.num_classes() + 1;
    let bg: Vec<usize> = (0..n).map(|i| i * k1 + k1 - 1).collect();
    Ok(preds
        .class_logprobs
        .reshape(&[n * k1])?
        .gather(&bg)?
        .sum()
        .scale(-cfg.lambda_class))
}

/// The set loss for a given (not necessarily optimal) mapping, summed term
/// by term:
///
/// `sum_j [-log p_s(j)(c_j) + log p_s(j)(bg) + box_loss(b_j, b_hat_s(j))]
///  - sum_i log p_i(bg)`
///
/// with `lambda_class` on every log-probability term.
pub fn hungarian_loss_direct<T: Scalar>(
    preds: &PredictionSet<T>,
    gts: &GroundTruthSet<T>,
    mapping: &[usize],
    cfg: &LossConfig<T>,
) -> Result<SetLoss<T>> {
    check_sizes(preds, gts)?;
    partition_slots(preds.num_slots(), gts.len(), mapping)?;
    let n = preds.num_slots();
    let k1 = preds.num_classes() + 1;
    let logprobs = preds.class_logprobs.reshape(&[n * k1])?;
    let flat_boxes = preds.boxes.reshape(&[n * 4])?;

    let mut class_part = Tensor::scalar(T::zero());
    let mut box_part = Tensor::scalar(T::zero());
    for (j, &i) in mapping.iter().enumerate() {
        let picked = logprobs.gather(&[i * k1 + gts.classes[j], i * k1 + k1 - 1])?;
        let [log_p_class, log_p_bg] = [picked.gather(&[0])?, picked.gather(&[1])?];
        let class_term = log_p_bg
            .sub(&log_p_class)?
            .scale(cfg.lambda_class)
            .reshape(&[])?;
        let b_hat = flat_boxes.gather(&[i * 4, i * 4 + 1, i * 4 + 2, i * 4 + 3])?;
        class_part = class_part.add(&class_term)?;
        box_part = box_part.add(&box_loss(&gts.boxes[j], &b_hat, cfg)?)?;
    }
    let assign = class_part.add(&box_part)?;
    let background = background_term(preds, cfg)?;
    let total = assign.add(&background)?;
    Ok(SetLoss {
        breakdown: LossBreakdown {
            total: total.item(),
            assign_part: assign.item(),
            background_part: background.item(),
            class_part: class_part.item(),
            box_part: box_part.item(),
        },
        total,
    })
}

/// Builds the aligned cost matrix, solves the assignment on its numeric
/// values, and returns `L_assign + L_background` as a differentiable scalar
/// whose gradient flows only through the selected cost entries and the
/// background terms.
pub fn hungarian_loss_decomposed<T: Scalar>(
    preds: &PredictionSet<T>,
    gts: &GroundTruthSet<T>,
    cfg: &LossConfig<T>,
) -> Result<(AssignmentSolution<T>, SetLoss<T>)> {
    let terms = pair_terms(preds, gts, cfg)?;
    let n = preds.num_slots();
    let m = gts.len();
    let cost = terms.class.add(&terms.boxes)?.reshape(&[n, m])?;
    let (solution, assign) = assignment_cost_with_grad(&cost)?;
    let background = background_term(preds, cfg)?;
    let total = assign.add(&background)?;

    let mut class_part = T::zero();
    let mut box_part = T::zero();
    for (j, &i) in solution.mapping.iter().enumerate() {
        class_part = class_part + terms.class.values()[i * m + j];
        box_part = box_part + terms.boxes.values()[i * m + j];
    }
    let breakdown = LossBreakdown {
        total: total.item(),
        assign_part: assign.item(),
        background_part: background.item(),
        class_part,
        box_part,
    };
    Ok((solution, SetLoss { total, breakdown }))
}

/// Log-likelihood pieces of the class part for one mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihoods<T> {
    /// `log L`: matched slots scored on their target class, the rest on
    /// background.
    pub log_likelihood: T,
    /// `log L_bg`: every slot scored on background; mapping-independent.
    pub log_background: T,
    /// `log (L / L_bg)`: sum over matched slots of the class-vs-background
    /// log ratio.
    pub log_ratio: T,
}

pub fn log_likelihoods<T: Scalar>(
    preds: &PredictionSet<T>,
    gts: &GroundTruthSet<T>,
    mapping: &[usize],
) -> Result<LogLikelihoods<T>> {
    check_sizes(preds, gts)?;
    let (_, unmatched) = partition_slots(preds.num_slots(), gts.len(), mapping)?;
    let bg = preds.background_index();
    let matched_class = mapping
        .iter()
        .zip(&gts.classes)
        .fold(T::zero(), |acc, (&i, &c)| acc + preds.logprob(i, c));
    let unmatched_bg = unmatched
        .iter()
        .fold(T::zero(), |acc, &i| acc + preds.logprob(i, bg));
    let log_background =
        (0..preds.num_slots()).fold(T::zero(), |acc, i| acc + preds.logprob(i, bg));
    let log_ratio = mapping
        .iter()
        .zip(&gts.classes)
        .fold(T::zero(), |acc, (&i, &c)| {
            acc + preds.logprob(i, c) - preds.logprob(i, bg)
        });
    Ok(LogLikelihoods {
        log_likelihood: matched_class + unmatched_bg,
        log_background,
        log_ratio,
    })
}
