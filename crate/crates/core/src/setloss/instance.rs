//! Self-contained loss instances: raw class logits and box logits for `N`
//! slots plus the ground truth. Used for fixtures, randomized checks and
//! the command-line gradient check.
//!
//! Text form (`#` starts a comment line):
//!
//! ```text
//! N M K
//! <K+1 class logits> <4 box logits>      (N lines)
//! <class> <cx> <cy> <w> <h>              (M lines)
//! ```

use std::fmt::Write as _;

use rand::Rng;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{GroundTruthSet, PredictionSet};

#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    pub num_classes: usize,
    /// `N * (K+1)` class logits, row-major.
    pub class_logits: Vec<T>,
    /// `N * 4` pre-sigmoid box values, row-major.
    pub box_logits: Vec<T>,
    pub truth: GroundTruthSet<T>,
}

/// Random center-form box with both sides in `[min_size, max_size]`, fully
/// inside the unit square.
pub fn random_box<T: Scalar, R: Rng + ?Sized>(rng: &mut R, min_size: f64, max_size: f64) -> [T; 4] {
    let w = rng.gen_range(min_size..=max_size);
    let h = rng.gen_range(min_size..=max_size);
    let cx = rng.gen_range(w / 2.0..=1.0 - w / 2.0);
    let cy = rng.gen_range(h / 2.0..=1.0 - h / 2.0);
    [T::lit(cx), T::lit(cy), T::lit(w), T::lit(h)]
}

impl<T: Scalar> Instance<T> {
    /// Class logits uniform in `[-3, 3]`, box logits uniform in `[-2, 2]`,
    /// truth boxes with sides in `[0.05, 0.5]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, k: usize) -> Self {
        let class_logits = (0..n * (k + 1))
            .map(|_| T::lit(rng.gen_range(-3.0..=3.0)))
            .collect();
        let box_logits = (0..n * 4)
            .map(|_| T::lit(rng.gen_range(-2.0..=2.0)))
            .collect();
        let classes = (0..m).map(|_| rng.gen_range(0..k)).collect();
        let boxes = (0..m).map(|_| random_box(rng, 0.05, 0.5)).collect();
        Self {
            num_classes: k,
            class_logits,
            box_logits,
            truth: GroundTruthSet { classes, boxes },
        }
    }

    pub fn num_slots(&self) -> usize {
        self.box_logits.len() / 4
    }

    /// All logits as one flat parameter vector: class logits first.
    pub fn params(&self) -> Tensor<T> {
        let mut v = self.class_logits.clone();
        v.extend_from_slice(&self.box_logits);
        Tensor::vector(v)
    }

    /// Predictions for a parameter vector laid out like [`Instance::params`].
    pub fn predictions(&self, params: &Tensor<T>) -> Result<PredictionSet<T>> {
        predictions_from_params(params, self.num_slots(), self.num_classes)
    }
}

pub fn predictions_from_params<T: Scalar>(
    params: &Tensor<T>,
    n: usize,
    k: usize,
) -> Result<PredictionSet<T>> {
    let class_len = n * (k + 1);
    let expected = class_len + n * 4;
    if params.len() != expected {
        return Err(Error::BadLength {
            shape: vec![expected],
            values: params.len(),
            expected,
        });
    }
    let flat = params.reshape(&[expected])?;
    let class = flat
        .gather(&(0..class_len).collect::<Vec<_>>())?
        .reshape(&[n, k + 1])?;
    let boxes = flat
        .gather(&(class_len..expected).collect::<Vec<_>>())?
        .reshape(&[n, 4])?;
    PredictionSet::from_logits(&class, &boxes)
}

impl<T: Scalar> Instance<T> {
    pub fn to_text(&self) -> String {
        let n = self.num_slots();
        let k1 = self.num_classes + 1;
        let mut out = format!("{} {} {}\n", n, self.truth.len(), self.num_classes);
        for i in 0..n {
            let row: Vec<String> = self.class_logits[i * k1..(i + 1) * k1]
                .iter()
                .chain(&self.box_logits[i * 4..i * 4 + 4])
                .map(|v| format!("{v}"))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        for (c, b) in self.truth.classes.iter().zip(&self.truth.boxes) {
            let _ = writeln!(out, "{c} {} {} {} {}", b[0], b[1], b[2], b[3]);
        }
        out
    }
}

impl Instance<f64> {
    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let numbers = |line_no: usize, line: &str| -> Result<Vec<f64>> {
            line.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| err(line_no, format!("bad number `{t}`")))
                })
                .collect()
        };

        let (hl, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing `N M K` header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| err(hl, format!("bad dimension `{t}`")))
            })
            .collect::<Result<_>>()?;
        let &[n, m, k] = dims.as_slice() else {
            return Err(err(hl, "header must be `N M K`".into()));
        };
        if m > n {
            return Err(Error::MoreTargetsThanSlots { rows: n, cols: m });
        }
        if k < 1 {
            return Err(err(hl, "K must be at least 1".into()));
        }

        let mut class_logits = Vec::with_capacity(n * (k + 1));
        let mut box_logits = Vec::with_capacity(n * 4);
        for r in 0..n {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| err(hl, format!("expected {n} prediction rows, found {r}")))?;
            let v = numbers(ln, line)?;
            if v.len() != k + 5 {
                return Err(err(
                    ln,
                    format!("expected {} values, found {}", k + 5, v.len()),
                ));
            }
            class_logits.extend_from_slice(&v[..k + 1]);
            box_logits.extend_from_slice(&v[k + 1..]);
        }
        let mut classes = Vec::with_capacity(m);
        let mut boxes = Vec::with_capacity(m);
        for r in 0..m {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| err(hl, format!("expected {m} truth rows, found {r}")))?;
            let v = numbers(ln, line)?;
            if v.len() != 5 || v[0].fract() != 0.0 || v[0] < 0.0 || v[0] >= k as f64 {
                return Err(err(
                    ln,
                    "truth rows are `<class in [0, K)> cx cy w h`".into(),
                ));
            }
            classes.push(v[0] as usize);
            boxes.push([v[1], v[2], v[3], v[4]]);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(ln, "unexpected extra line".into()));
        }
        Ok(Self {
            num_classes: k,
            class_logits,
            box_logits,
            truth: GroundTruthSet::new(classes, boxes)?,
        })
    }
}
