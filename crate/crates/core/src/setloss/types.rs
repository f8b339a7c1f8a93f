use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ground-truth objects: one class label in `[0, K)` and one center-form
/// box per object.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSet<T> {
    pub classes: Vec<usize>,
    pub boxes: Vec<[T; 4]>,
}

impl<T: Scalar> GroundTruthSet<T> {
    pub fn new(classes: Vec<usize>, boxes: Vec<[T; 4]>) -> Result<Self> {
        if classes.len() != boxes.len() {
            return Err(Error::Config(format!(
                "{} class labels for {} boxes",
                classes.len(),
                boxes.len()
            )));
        }
        if let Some(b) = boxes
            .iter()
            .find(|b| !(b[2] > T::zero() && b[3] > T::zero()) || b.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::DegenerateBox(b.map(Scalar::as_f64)));
        }
        Ok(Self { classes, boxes })
    }

    pub fn empty() -> Self {
        Self {
            classes: Vec::new(),
            boxes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub(crate) fn check_labels(&self, num_classes: usize) -> Result<()> {
        match self.classes.iter().find(|&&c| c >= num_classes) {
            Some(&label) => Err(Error::ClassOutOfRange { label, num_classes }),
            None => Ok(()),
        }
    }
}

/// Network output for `N` slots: `[N, K+1]` class log-probabilities with the
/// background in the last column, and `[N, 4]` center-form boxes.
#[derive(Debug, Clone)]
pub struct PredictionSet<T> {
    pub class_logprobs: Tensor<T>,
    pub boxes: Tensor<T>,
}

impl<T: Scalar> PredictionSet<T> {
    pub fn new(class_logprobs: Tensor<T>, boxes: Tensor<T>) -> Result<Self> {
        let (&[n, k1], &[nb, 4]) = (class_logprobs.shape(), boxes.shape()) else {
            return Err(Error::ShapeMismatch {
                op: "PredictionSet",
                left: class_logprobs.shape().to_vec(),
                right: boxes.shape().to_vec(),
            });
        };
        if n != nb || k1 < 2 {
            return Err(Error::ShapeMismatch {
                op: "PredictionSet",
                left: class_logprobs.shape().to_vec(),
                right: boxes.shape().to_vec(),
            });
        }
        Ok(Self {
            class_logprobs,
            boxes,
        })
    }

    /// Applies log-softmax to `[N, K+1]` logits and a sigmoid to `[N, 4]`
    /// box logits.
    pub fn from_logits(class_logits: &Tensor<T>, box_logits: &Tensor<T>) -> Result<Self> {
        Self::new(class_logits.log_softmax(), box_logits.sigmoid())
    }

    pub fn num_slots(&self) -> usize {
        self.class_logprobs.shape()[0]
    }

    /// Number of object classes `K`, excluding background.
    pub fn num_classes(&self) -> usize {
        self.class_logprobs.shape()[1] - 1
    }

    pub fn background_index(&self) -> usize {
        self.num_classes()
    }

    pub fn logprob(&self, slot: usize, class: usize) -> T {
        self.class_logprobs.values()[slot * (self.num_classes() + 1) + class]
    }

    pub fn box_values(&self, slot: usize) -> [T; 4] {
        let v = &self.boxes.values()[slot * 4..slot * 4 + 4];
        [v[0], v[1], v[2], v[3]]
    }

    /// Most likely class of a slot over all `K+1` columns.
    pub fn argmax_class(&self, slot: usize) -> usize {
        let k1 = self.num_classes() + 1;
        let row = &self.class_logprobs.values()[slot * k1..(slot + 1) * k1];
        row.iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            })
            .0
    }

    pub fn detach(&self) -> Self {
        Self {
            class_logprobs: self.class_logprobs.detach(),
            boxes: self.boxes.detach(),
        }
    }
}

/// Loss weights, shared by the cost matrix and the loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig<T> {
    pub lambda_class: T,
    pub lambda_l1: T,
    pub lambda_giou: T,
}

impl<T: Scalar> LossConfig<T> {
    pub fn new(lambda_class: T, lambda_l1: T, lambda_giou: T) -> Result<Self> {
        let cfg = Self {
            lambda_class,
            lambda_l1,
            lambda_giou,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_class", self.lambda_class),
            ("lambda_l1", self.lambda_l1),
            ("lambda_giou", self.lambda_giou),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "{name} must be a finite value >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Default for LossConfig<T> {
    fn default() -> Self {
        Self {
            lambda_class: T::one(),
            lambda_l1: T::lit(5.0),
            lambda_giou: T::lit(2.0),
        }
    }
}

/// Numeric split of a set loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<T> {
    pub total: T,
    /// Cost of the chosen assignment.
    pub assign_part: T,
    /// Mapping-independent background term.
    pub background_part: T,
    /// Class share of `assign_part`.
    pub class_part: T,
    /// Box share of `assign_part`.
    pub box_part: T,
}

/// A differentiable set loss with its numeric breakdown.
#[derive(Debug, Clone)]
pub struct SetLoss<T> {
    pub total: Tensor<T>,
    pub breakdown: LossBreakdown<T>,
}
