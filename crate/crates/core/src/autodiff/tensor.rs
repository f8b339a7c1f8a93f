use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tape::{self, Gradients, Input, Op, Tape};

/// Dense row-major array of scalars, optionally attached to a [`Tape`].
///
/// Detached tensors are plain values: they never receive gradient and can be
/// shared freely across threads.
pub struct Tensor<T> {
    shape: Vec<usize>,
    values: Arc<Vec<T>>,
    node: Option<(Tape<T>, usize)>,
}

impl<T> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            values: Arc::clone(&self.values),
            node: self.node.clone(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("values", &self.values)
            .field("attached", &self.node.is_some())
            .finish()
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: &[usize], values: Vec<T>) -> Result<Self> {
        let expected = numel(shape);
        if values.len() != expected {
            return Err(Error::BadLength {
                shape: shape.to_vec(),
                values: values.len(),
                expected,
            });
        }
        Ok(Self::from_parts(shape.to_vec(), Arc::new(values), None))
    }

    pub fn scalar(value: T) -> Self {
        Self::from_parts(Vec::new(), Arc::new(vec![value]), None)
    }

    pub fn vector(values: Vec<T>) -> Self {
        Self::from_parts(vec![values.len()], Arc::new(values), None)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::from_parts(
            shape.to_vec(),
            Arc::new(vec![T::zero(); numel(shape)]),
            None,
        )
    }

    pub(crate) fn from_parts(
        shape: Vec<usize>,
        values: Arc<Vec<T>>,
        node: Option<(Tape<T>, usize)>,
    ) -> Self {
        Self {
            shape,
            values,
            node,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> T {
        assert_eq!(self.len(), 1, "item() on tensor of shape {:?}", self.shape);
        self.values[0]
    }

    pub fn is_attached(&self) -> bool {
        self.node.is_some()
    }

    /// Same values, no tape.
    pub fn detach(&self) -> Self {
        Self::from_parts(self.shape.clone(), Arc::clone(&self.values), None)
    }

    pub(crate) fn node(&self) -> Option<(&Tape<T>, usize)> {
        self.node.as_ref().map(|(t, id)| (t, *id))
    }

    pub(crate) fn shared_values(&self) -> Arc<Vec<T>> {
        Arc::clone(&self.values)
    }

    fn input(&self) -> Input<T> {
        Input {
            node: self.node.as_ref().map(|(_, id)| *id),
            value: Arc::clone(&self.values),
        }
    }

    /// Reverse sweep from this scalar to every node on its tape.
    pub fn backward(&self) -> Result<Gradients<T>> {
        tape::backward(self)
    }

    fn common_tape<'a>(parts: impl IntoIterator<Item = &'a Tensor<T>>) -> Result<Option<Tape<T>>> {
        let mut found: Option<&Tape<T>> = None;
        for t in parts {
            if let Some((tape, _)) = &t.node {
                match found {
                    None => found = Some(tape),
                    Some(existing) if existing.same(tape) => {}
                    Some(_) => return Err(Error::TapeMismatch),
                }
            }
        }
        Ok(found.cloned())
    }

    fn record(
        tape: Option<Tape<T>>,
        shape: Vec<usize>,
        values: Vec<T>,
        op: impl FnOnce() -> Op<T>,
    ) -> Self {
        let values = Arc::new(values);
        let node = tape.map(|tape| {
            let id = tape.push(op(), Arc::clone(&values));
            (tape, id)
        });
        Self::from_parts(shape, values, node)
    }

    fn unary(&self, f: impl Fn(T) -> T, op: impl FnOnce(Input<T>) -> Op<T>) -> Self {
        let values = self.values.iter().map(|&x| f(x)).collect();
        let tape = self.node.as_ref().map(|(t, _)| t.clone());
        Self::record(tape, self.shape.clone(), values, || op(self.input()))
    }

    fn binary(
        &self,
        other: &Self,
        name: &'static str,
        f: impl Fn(T, T) -> T,
        op: impl FnOnce(Input<T>, Input<T>) -> Op<T>,
    ) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op: name,
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let tape = Self::common_tape([self, other])?;
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::record(tape, self.shape.clone(), values, || {
            op(self.input(), other.input())
        }))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binary(other, "add", |a, b| a + b, Op::Add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.binary(other, "sub", |a, b| a - b, Op::Sub)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.binary(other, "mul", |a, b| a * b, Op::Mul)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if let Some(index) = other.values.iter().position(|v| v.is_zero()) {
            return Err(Error::DivisionByZero { index });
        }
        self.binary(other, "div", |a, b| a / b, Op::Div)
    }

    /// Elementwise minimum; ties route gradient to `self`.
    pub fn minimum(&self, other: &Self) -> Result<Self> {
        self.binary(
            other,
            "minimum",
            |a, b| if a <= b { a } else { b },
            Op::Minimum,
        )
    }

    /// Elementwise maximum; ties route gradient to `self`.
    pub fn maximum(&self, other: &Self) -> Result<Self> {
        self.binary(
            other,
            "maximum",
            |a, b| if a >= b { a } else { b },
            Op::Maximum,
        )
    }

    pub fn neg(&self) -> Self {
        self.unary(|x| -x, Op::Neg)
    }

    pub fn abs(&self) -> Self {
        self.unary(|x| x.abs(), Op::Abs)
    }

    pub fn exp(&self) -> Self {
        self.unary(|x| x.exp(), Op::Exp)
    }

    /// Natural log. Use [`Tensor::log_softmax`] for log-probabilities.
    pub fn ln(&self) -> Result<Self> {
        if let Some(index) = self.values.iter().position(|&v| !(v > T::zero())) {
            return Err(Error::LogDomain {
                index,
                value: self.values[index].as_f64(),
            });
        }
        Ok(self.unary(|x| x.ln(), Op::Ln))
    }

    pub fn sigmoid(&self) -> Self {
        self.unary(stable_sigmoid, Op::Sigmoid)
    }

    pub fn tanh(&self) -> Self {
        self.unary(|x| x.tanh(), Op::Tanh)
    }

    /// `max(x, 0)`, with subgradient 0 at the origin.
    pub fn relu(&self) -> Self {
        self.unary(|x| if x > T::zero() { x } else { T::zero() }, Op::Relu)
    }

    pub fn scale(&self, c: T) -> Self {
        self.unary(|x| x * c, |a| Op::Scale(a, c))
    }

    pub fn offset(&self, c: T) -> Self {
        self.unary(|x| x + c, Op::Identity)
    }

    pub fn sum(&self) -> Self {
        let total = self.values.iter().copied().sum();
        let tape = self.node.as_ref().map(|(t, _)| t.clone());
        Self::record(tape, Vec::new(), vec![total], || Op::Sum(self.input()))
    }

    /// Sums over the trailing axis, dropping it.
    pub fn sum_last_axis(&self) -> Result<Self> {
        let (&inner, outer_shape) = self.shape.split_last().ok_or(Error::ShapeMismatch {
            op: "sum_last_axis",
            left: self.shape.clone(),
            right: vec![],
        })?;
        let values = if inner == 0 {
            vec![T::zero(); numel(outer_shape)]
        } else {
            self.values
                .chunks(inner)
                .map(|c| c.iter().copied().sum())
                .collect()
        };
        let tape = self.node.as_ref().map(|(t, _)| t.clone());
        Ok(Self::record(tape, outer_shape.to_vec(), values, || {
            Op::SumLastAxis {
                input: self.input(),
                inner,
            }
        }))
    }

    /// Picks flat elements by index into a 1-D tensor; repeated indices
    /// accumulate gradient.
    pub fn gather(&self, indices: &[usize]) -> Result<Self> {
        let len = self.len();
        if let Some(&index) = indices.iter().find(|&&i| i >= len) {
            return Err(Error::IndexOutOfBounds { index, len });
        }
        let values = indices.iter().map(|&i| self.values[i]).collect();
        let tape = self.node.as_ref().map(|(t, _)| t.clone());
        Ok(Self::record(tape, vec![indices.len()], values, || {
            Op::Gather {
                input: self.input(),
                indices: Arc::new(indices.to_vec()),
            }
        }))
    }

    /// `self` is a `[rows, cols]` matrix, `vector` has `cols` entries.
    pub fn matvec(&self, vector: &Self) -> Result<Self> {
        let mismatch = || Error::ShapeMismatch {
            op: "matvec",
            left: self.shape.clone(),
            right: vector.shape.clone(),
        };
        let &[rows, cols] = self.shape.as_slice() else {
            return Err(mismatch());
        };
        if vector.shape != [cols] {
            return Err(mismatch());
        }
        let tape = Self::common_tape([self, vector])?;
        let values = if cols == 0 {
            vec![T::zero(); rows]
        } else {
            self.values
                .chunks(cols)
                .map(|row| {
                    row.iter()
                        .zip(vector.values.iter())
                        .map(|(&m, &v)| m * v)
                        .sum()
                })
                .collect()
        };
        Ok(Self::record(tape, vec![rows], values, || Op::MatVec {
            matrix: self.input(),
            vector: vector.input(),
            rows,
            cols,
        }))
    }

    /// Row-wise log-softmax over the trailing axis, computed with max
    /// subtraction.
    pub fn log_softmax(&self) -> Self {
        let inner = self.shape.last().copied().unwrap_or(1);
        let mut values = Vec::with_capacity(self.len());
        if inner > 0 {
            for row in self.values.chunks(inner) {
                let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                let norm: T = row.iter().map(|&x| (x - max).exp()).sum();
                let log_norm = norm.ln();
                values.extend(row.iter().map(|&x| x - max - log_norm));
            }
        }
        let tape = self.node.as_ref().map(|(t, _)| t.clone());
        Self::record(tape, self.shape.clone(), values, || Op::LogSoftmax {
            input: self.input(),
            inner,
        })
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let expected = numel(shape);
        if expected != self.len() {
            return Err(Error::BadLength {
                shape: shape.to_vec(),
                values: self.len(),
                expected,
            });
        }
        Ok(Self::from_parts(
            shape.to_vec(),
            Arc::clone(&self.values),
            self.node.clone(),
        ))
    }

    /// Concatenates flattened tensors into one 1-D tensor.
    pub fn concat(parts: &[&Self]) -> Result<Self> {
        let tape = Self::common_tape(parts.iter().copied())?;
        let values: Vec<T> = parts
            .iter()
            .flat_map(|p| p.values.iter().copied())
            .collect();
        let n = values.len();
        Ok(Self::record(tape, vec![n], values, || {
            Op::Concat(parts.iter().map(|p| p.input()).collect())
        }))
    }
}

fn stable_sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
