use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::setloss::{random_box, GroundTruthSet};

/// Shape of the synthetic task and of the model solving it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    /// Upper bound on objects per scene.
    pub max_objects: usize,
    /// Prediction slots `N`.
    pub num_slots: usize,
    /// Object classes `K`, background excluded.
    pub num_classes: usize,
    /// Length of the scene feature vector.
    pub feature_dim: usize,
    /// Width of both trunk layers.
    pub hidden_width: usize,
    pub box_min: f64,
    pub box_max: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            max_objects: 4,
            num_slots: 10,
            num_classes: 4,
            feature_dim: 64,
            hidden_width: 128,
            box_min: 0.15,
            box_max: 0.45,
        }
    }
}

impl SceneConfig {
    /// Features per encoded object: class one-hot plus four box numbers.
    pub fn block_len(&self) -> usize {
        self.num_classes + 4
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.max_objects < 1 {
            return fail("max_objects must be >= 1".into());
        }
        if self.num_slots < self.max_objects {
            return fail(format!(
                "num_slots ({}) must be >= max_objects ({})",
                self.num_slots, self.max_objects
            ));
        }
        if self.num_classes < 2 {
            return fail("num_classes must be >= 2".into());
        }
        if self.feature_dim < self.max_objects * self.block_len() {
            return fail(format!(
                "feature_dim must be >= max_objects * (num_classes + 4) = {}",
                self.max_objects * self.block_len()
            ));
        }
        if self.hidden_width < 1 {
            return fail("hidden_width must be >= 1".into());
        }
        if !(self.box_min > 0.0 && self.box_min <= self.box_max && self.box_max <= 1.0) {
            return fail(format!(
                "box size range must satisfy 0 < box_min <= box_max <= 1, got [{}, {}]",
                self.box_min, self.box_max
            ));
        }
        Ok(())
    }
}

/// One synthetic scene: its objects and the feature vector encoding them.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene<T> {
    pub features: Vec<T>,
    pub truth: GroundTruthSet<T>,
}

/// Draws `m` uniform in `[1, max_objects]` objects with uniform classes and
/// boxes, sorted by box center x.
pub fn generate_scene<T: Scalar, R: Rng + ?Sized>(cfg: &SceneConfig, rng: &mut R) -> Scene<T> {
    let m = rng.gen_range(1..=cfg.max_objects);
    let mut objects: Vec<(usize, [T; 4])> = (0..m)
        .map(|_| {
            let class = rng.gen_range(0..cfg.num_classes);
            (class, random_box(rng, cfg.box_min, cfg.box_max))
        })
        .collect();
    objects.sort_by(|a, b| a.1[0].partial_cmp(&b.1[0]).expect("finite box centers"));
    let truth = GroundTruthSet {
        classes: objects.iter().map(|o| o.0).collect(),
        boxes: objects.iter().map(|o| o.1).collect(),
    };
    Scene {
        features: encode_features(cfg, &truth),
        truth,
    }
}

/// Writes `(one-hot class, box)` blocks in order, zero-padded to
/// `feature_dim`.
pub fn encode_features<T: Scalar>(cfg: &SceneConfig, truth: &GroundTruthSet<T>) -> Vec<T> {
    let mut features = vec![T::zero(); cfg.feature_dim];
    let block = cfg.block_len();
    for (k, (&c, b)) in truth.classes.iter().zip(&truth.boxes).enumerate() {
        let base = k * block;
        features[base + c] = T::one();
        features[base + cfg.num_classes..base + block].copy_from_slice(b);
    }
    features
}

/// Inverse of [`encode_features`]: reads blocks until one has no class bit.
pub fn decode_features<T: Scalar>(cfg: &SceneConfig, features: &[T]) -> GroundTruthSet<T> {
    let block = cfg.block_len();
    let mut truth = GroundTruthSet::empty();
    for k in 0..cfg.max_objects {
        let b = &features[k * block..(k + 1) * block];
        let Some(class) = b[..cfg.num_classes].iter().position(|v| *v == T::one()) else {
            break;
        };
        truth.classes.push(class);
        let v = &b[cfg.num_classes..];
        truth.boxes.push([v[0], v[1], v[2], v[3]]);
    }
    truth
}

impl<T: Scalar> Scene<T> {
    /// `m; c_1 cx cy w h; ...; c_m cx cy w h`
    pub fn to_record(&self) -> String {
        let mut out = format!("{}", self.truth.len());
        for (c, b) in self.truth.classes.iter().zip(&self.truth.boxes) {
            let _ = write!(out, "; {c} {} {} {} {}", b[0], b[1], b[2], b[3]);
        }
        out
    }
}

/// Parses one record line back into ground truth.
pub fn parse_record(line: &str) -> Result<GroundTruthSet<f64>> {
    let err = |message: String| Error::Parse { line: 1, message };
    let mut parts = line.split(';').map(str::trim);
    let m: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err("record must start with the object count".into()))?;
    let mut classes = Vec::with_capacity(m);
    let mut boxes = Vec::with_capacity(m);
    for part in parts {
        let tok: Vec<&str> = part.split_whitespace().collect();
        let [c, rest @ ..] = tok.as_slice() else {
            return Err(err(format!("empty object `{part}`")));
        };
        if rest.len() != 4 {
            return Err(err(format!(
                "object `{part}` needs a class and 4 box numbers"
            )));
        }
        classes.push(c.parse().map_err(|_| err(format!("bad class `{c}`")))?);
        let mut b = [0.0; 4];
        for (slot, t) in b.iter_mut().zip(rest) {
            *slot = t.parse().map_err(|_| err(format!("bad number `{t}`")))?;
        }
        boxes.push(b);
    }
    if classes.len() != m {
        return Err(err(format!(
            "declared {m} objects, found {}",
            classes.len()
        )));
    }
    GroundTruthSet::new(classes, boxes)
}
