//! The set-prediction loss and its aligned assignment cost.
//!
//! For a mapping `s` from targets to slots the loss is
//!
//! ```text
//! sum_j C(s(j), j) - lambda_class * sum_i log p_i(bg)
//! C(i, j) = lambda_class * (log p_i(bg) - log p_i(c_j)) + box_loss(b_j, b_hat_i)
//! ```
//!
//! The second term does not depend on `s`, so the mapping minimizing the
//! assignment cost also minimizes the loss.

mod boxes;
mod cost;
mod instance;
mod loss;
mod types;
mod witness;

pub use boxes::{box_loss, center_to_corners, giou, giou_corners, giou_rows, iou};
pub use cost::{baseline_cost_matrix, build_cost_matrix, cost_values};
pub use instance::{predictions_from_params, random_box, Instance};
pub use loss::{hungarian_loss_decomposed, hungarian_loss_direct, log_likelihoods, LogLikelihoods};
pub use types::{GroundTruthSet, LossBreakdown, LossConfig, PredictionSet, SetLoss};
pub use witness::{check_misalignment, find_misalignment_witness, MisalignmentWitness};

#[cfg(test)]
mod tests;
