//! Set-prediction loss whose assignment cost is aligned with the loss, and
//! gradients that flow through an exact assignment solver.
//!
//! Modules, bottom-up:
//!
//! - [`autodiff`]: reverse-mode tape over dense tensors.
//! - [`assignment`]: exact rectangular assignment on detached numbers.
//! - [`setloss`]: cost matrix, set loss, GIoU box loss.
//! - [`gradbridge`]: gradient of the optimal assignment cost and its
//!   finite-difference certification.
//! - [`toytask`]: synthetic scenes and a small query-head model.
//! - [`trainer`]: the training loop and evaluation.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// `!(x > 0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod autodiff;
pub mod error;
pub mod gradbridge;
pub mod scalar;
pub mod seeding;
pub mod selftest;
pub mod setloss;
pub mod toytask;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor = autodiff::Tensor<f64>;
pub type Tape = autodiff::Tape<f64>;
pub type CostMatrix = assignment::CostMatrix<f64>;
pub type AssignmentSolution = assignment::AssignmentSolution<f64>;
pub type GroundTruthSet = setloss::GroundTruthSet<f64>;
pub type PredictionSet = setloss::PredictionSet<f64>;
pub type LossConfig = setloss::LossConfig<f64>;
pub type LossBreakdown = setloss::LossBreakdown<f64>;
pub type Instance = setloss::Instance<f64>;
pub type GradCheckReport = gradbridge::GradCheckReport<f64>;
pub type ModelParams = toytask::ModelParams<f64>;
pub type TrainConfig = trainer::TrainConfig<f64>;
pub type MetricsRow = trainer::MetricsRow<f64>;
