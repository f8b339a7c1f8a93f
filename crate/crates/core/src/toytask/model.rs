use std::fmt::Write as _;

use rand::Rng;

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::setloss::PredictionSet;

use super::SceneConfig;

const NAMES: [&str; 6] = [
    "trunk1.weight",
    "trunk1.bias",
    "trunk2.weight",
    "trunk2.bias",
    "heads.weight",
    "heads.bias",
];

/// Weights of the query-head model: a two-layer tanh trunk followed by `N`
/// linear heads, each emitting `K+1` class logits and 4 box logits.
///
/// The heads are stored stacked, head `n` owning rows
/// `n*(K+5)..(n+1)*(K+5)` of the head matrix.
#[derive(Debug, Clone)]
pub struct ModelParams<T> {
    pub tensors: Vec<Tensor<T>>,
    pub num_slots: usize,
    pub num_classes: usize,
}

impl<T: Scalar> ModelParams<T> {
    fn shapes(cfg: &SceneConfig) -> [Vec<usize>; 6] {
        let (d, h) = (cfg.feature_dim, cfg.hidden_width);
        let out = cfg.num_slots * (cfg.num_classes + 5);
        [
            vec![h, d],
            vec![h],
            vec![h, h],
            vec![h],
            vec![out, h],
            vec![out],
        ]
    }

    pub fn zeros(cfg: &SceneConfig) -> Self {
        Self {
            tensors: Self::shapes(cfg).iter().map(|s| Tensor::zeros(s)).collect(),
            num_slots: cfg.num_slots,
            num_classes: cfg.num_classes,
        }
    }

    /// Uniform Glorot initialization for weights, zero biases.
    pub fn init<R: Rng + ?Sized>(cfg: &SceneConfig, rng: &mut R) -> Self {
        let tensors = Self::shapes(cfg)
            .iter()
            .map(|shape| match shape.as_slice() {
                &[rows, cols] => {
                    let a = (6.0 / (rows + cols) as f64).sqrt();
                    let v = (0..rows * cols)
                        .map(|_| T::lit(rng.gen_range(-a..a)))
                        .collect();
                    Tensor::new(shape, v).expect("shape matches value count")
                }
                _ => Tensor::zeros(shape),
            })
            .collect();
        Self {
            tensors,
            num_slots: cfg.num_slots,
            num_classes: cfg.num_classes,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.tensors[0].shape()[1]
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Registers every tensor as a leaf on `tape`.
    pub fn attach(&self, tape: &Tape<T>) -> Self {
        Self {
            tensors: self.tensors.iter().map(|t| tape.leaf(t)).collect(),
            num_slots: self.num_slots,
            num_classes: self.num_classes,
        }
    }

    /// All values concatenated in declaration order.
    pub fn flatten(&self) -> Vec<T> {
        self.tensors
            .iter()
            .flat_map(|t| t.values().iter().copied())
            .collect()
    }

    /// Replaces every value, reading `flat` in declaration order.
    pub fn with_flat(&self, flat: &[T]) -> Result<Self> {
        if flat.len() != self.num_values() {
            return Err(Error::BadLength {
                shape: vec![self.num_values()],
                values: flat.len(),
                expected: self.num_values(),
            });
        }
        let mut offset = 0;
        let mut tensors = Vec::with_capacity(self.tensors.len());
        for t in &self.tensors {
            tensors.push(Tensor::new(
                t.shape(),
                flat[offset..offset + t.len()].to_vec(),
            )?);
            offset += t.len();
        }
        Ok(Self {
            tensors,
            num_slots: self.num_slots,
            num_classes: self.num_classes,
        })
    }

    /// Differentiable counterpart of [`Self::with_flat`]: slices a flat
    /// parameter tensor into this model's shapes, keeping the tape link.
    pub fn split_flat(&self, flat: &Tensor<T>) -> Result<Self> {
        if flat.len() != self.num_values() {
            return Err(Error::BadLength {
                shape: flat.shape().to_vec(),
                values: flat.len(),
                expected: self.num_values(),
            });
        }
        let mut offset = 0;
        let mut tensors = Vec::with_capacity(self.tensors.len());
        for t in &self.tensors {
            let idx: Vec<usize> = (offset..offset + t.len()).collect();
            tensors.push(flat.gather(&idx)?.reshape(t.shape())?);
            offset += t.len();
        }
        Ok(Self {
            tensors,
            num_slots: self.num_slots,
            num_classes: self.num_classes,
        })
    }

    /// Same model reading a longer feature vector; the extra input weights
    /// are zero.
    pub fn pad_input(&self, feature_dim: usize) -> Result<Self> {
        let w = &self.tensors[0];
        let (h, d) = (w.shape()[0], w.shape()[1]);
        if feature_dim < d {
            return Err(Error::Config(format!(
                "cannot shrink feature_dim {d} to {feature_dim}"
            )));
        }
        let mut v = Vec::with_capacity(h * feature_dim);
        for row in w.values().chunks(d) {
            v.extend_from_slice(row);
            v.extend(std::iter::repeat_n(T::zero(), feature_dim - d));
        }
        let mut out = self.clone();
        out.tensors[0] = Tensor::new(&[h, feature_dim], v)?;
        Ok(out)
    }

    /// Maps a feature vector to `N` predictions.
    pub fn forward(&self, features: &[T]) -> Result<PredictionSet<T>> {
        let [w1, b1, w2, b2, wh, bh] = &self.tensors[..] else {
            return Err(Error::Config("model needs exactly six tensors".into()));
        };
        let x = Tensor::vector(features.to_vec());
        let h1 = w1.matvec(&x)?.add(b1)?.tanh();
        let h2 = w2.matvec(&h1)?.add(b2)?.tanh();
        let out = wh.matvec(&h2)?.add(bh)?;

        let (n, k1) = (self.num_slots, self.num_classes + 1);
        let stride = k1 + 4;
        let class_idx: Vec<usize> = (0..n)
            .flat_map(|i| (0..k1).map(move |c| i * stride + c))
            .collect();
        let box_idx: Vec<usize> = (0..n)
            .flat_map(|i| (k1..stride).map(move |c| i * stride + c))
            .collect();
        let class_logits = out.gather(&class_idx)?.reshape(&[n, k1])?;
        let box_logits = out.gather(&box_idx)?.reshape(&[n, 4])?;
        PredictionSet::from_logits(&class_logits, &box_logits)
    }

    /// Line-oriented text: `name dims...` followed by a line of values.
    pub fn to_text(&self) -> String {
        let mut out = format!("slots {} classes {}\n", self.num_slots, self.num_classes);
        for (name, t) in NAMES.iter().zip(&self.tensors) {
            let dims: Vec<String> = t.shape().iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{name} {}", dims.join(" "));
            let vals: Vec<String> = t.values().iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", vals.join(" "));
        }
        out
    }
}

impl ModelParams<f64> {
    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
        let (hl, header) = lines
            .next()
            .ok_or_else(|| err(1, "empty parameter file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let (num_slots, num_classes) = match h.as_slice() {
            ["slots", n, "classes", k] => (
                n.parse()
                    .map_err(|_| err(hl, format!("bad slot count `{n}`")))?,
                k.parse()
                    .map_err(|_| err(hl, format!("bad class count `{k}`")))?,
            ),
            _ => return Err(err(hl, "expected `slots N classes K`".into())),
        };
        let mut tensors = Vec::with_capacity(NAMES.len());
        for name in NAMES {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| err(hl, format!("missing tensor {name}")))?;
            let mut tok = line.split_whitespace();
            if tok.next() != Some(name) {
                return Err(err(ln, format!("expected tensor {name}")));
            }
            let shape: Vec<usize> = tok
                .map(|t| {
                    t.parse()
                        .map_err(|_| err(ln, format!("bad dimension `{t}`")))
                })
                .collect::<Result<_>>()?;
            let (vl, values) = lines
                .next()
                .ok_or_else(|| err(ln, format!("missing values for {name}")))?;
            let values: Vec<f64> = values
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(vl, format!("bad number `{t}`"))))
                .collect::<Result<_>>()?;
            tensors.push(Tensor::new(&shape, values).map_err(|e| err(vl, e.to_string()))?);
        }
        Ok(Self {
            tensors,
            num_slots,
            num_classes,
        })
    }
}
