//! Synthetic set-prediction task.
//!
//! Each scene's feature vector spells out its objects, sorted by center x,
//! so a model that fails to learn it points at the loss or its gradient
//! rather than at representation capacity.

mod gradcheck;
mod model;
mod scene;

pub use gradcheck::{random_model_gradcheck, GRADCHECK_HIDDEN};
pub use model::ModelParams;
pub use scene::{
    decode_features, encode_features, generate_scene, parse_record, Scene, SceneConfig,
};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::setloss::PredictionSet;

/// Runs the model on one feature vector.
pub fn model_forward<T: Scalar>(
    params: &ModelParams<T>,
    features: &[T],
) -> Result<PredictionSet<T>> {
    params.forward(features)
}
