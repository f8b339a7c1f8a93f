use rand::Rng;

use crate::autodiff::{Tensor, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::gradbridge::{certify_gradient, GradCheckReport};
use crate::seeding::{stream_rng, Stream};
use crate::setloss::{random_box, GroundTruthSet, LossConfig};

use super::{encode_features, ModelParams, SceneConfig};

/// Hidden width of the model used by [`random_model_gradcheck`]; small so
/// that a full finite-difference sweep stays cheap.
pub const GRADCHECK_HIDDEN: usize = 8;

/// Certifies the set-loss gradient for one seeded case: `m` random targets
/// over `k` classes, encoded as scene features, fed to a freshly
/// initialized `n`-slot model. The gradient is taken with respect to all
/// model parameters.
pub fn random_model_gradcheck(
    seed: u64,
    n: usize,
    m: usize,
    k: usize,
) -> Result<GradCheckReport<f64>> {
    if n == 0 || k == 0 {
        return Err(Error::Config("gradcheck needs N >= 1 and K >= 1".into()));
    }
    if m > n {
        return Err(Error::MoreTargetsThanSlots { rows: n, cols: m });
    }
    let cfg = SceneConfig {
        max_objects: m.max(1),
        num_slots: n,
        num_classes: k,
        feature_dim: m.max(1) * (k + 4),
        hidden_width: GRADCHECK_HIDDEN,
        box_min: 0.05,
        box_max: 0.5,
    };
    let mut rng = stream_rng(seed, Stream::Instances);
    let classes = (0..m).map(|_| rng.gen_range(0..k)).collect();
    let boxes = (0..m)
        .map(|_| random_box(&mut rng, cfg.box_min, cfg.box_max))
        .collect();
    let truth = GroundTruthSet::new(classes, boxes)?;
    let features = encode_features(&cfg, &truth);

    let model = ModelParams::init(&cfg, &mut stream_rng(seed, Stream::Init));
    let params = Tensor::vector(model.flatten());
    certify_gradient(
        |p| model.split_flat(p)?.forward(&features),
        &truth,
        &LossConfig::default(),
        &params,
        DEFAULT_STEP,
    )
}
