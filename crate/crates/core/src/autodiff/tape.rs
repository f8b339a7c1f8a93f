use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tensor::Tensor;

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// One operand of a recorded operation: its forward value and, when it is
/// attached, the node that produced it.
#[derive(Clone)]
pub(crate) struct Input<T> {
    pub node: Option<usize>,
    pub value: Arc<Vec<T>>,
}

pub(crate) enum Op<T> {
    Leaf,
    Add(Input<T>, Input<T>),
    Sub(Input<T>, Input<T>),
    Mul(Input<T>, Input<T>),
    Div(Input<T>, Input<T>),
    Minimum(Input<T>, Input<T>),
    Maximum(Input<T>, Input<T>),
    Neg(Input<T>),
    Abs(Input<T>),
    Exp(Input<T>),
    Ln(Input<T>),
    Sigmoid(Input<T>),
    Tanh(Input<T>),
    Relu(Input<T>),
    Scale(Input<T>, T),
    Identity(Input<T>),
    Sum(Input<T>),
    SumLastAxis {
        input: Input<T>,
        inner: usize,
    },
    Gather {
        input: Input<T>,
        indices: Arc<Vec<usize>>,
    },
    MatVec {
        matrix: Input<T>,
        vector: Input<T>,
        rows: usize,
        cols: usize,
    },
    LogSoftmax {
        input: Input<T>,
        inner: usize,
    },
    Concat(Vec<Input<T>>),
}

pub(crate) struct Node<T> {
    pub op: Op<T>,
    pub value: Arc<Vec<T>>,
}

struct TapeShared<T> {
    id: u64,
    nodes: Mutex<Vec<Node<T>>>,
}

/// Append-only record of the operations of one forward pass.
///
/// Nodes are pushed in evaluation order, so every node's parents precede it
/// and a single reverse sweep visits each node once.
pub struct Tape<T> {
    shared: Arc<TapeShared<T>>,
}

impl<T> Clone for Tape<T> {
    fn clone(&self) -> Self {
        Self {
            shared: Arc::clone(&self.shared),
        }
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            shared: Arc::new(TapeShared {
                id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
                nodes: Mutex::new(Vec::new()),
            }),
        }
    }

    pub fn id(&self) -> u64 {
        self.shared.id
    }

    pub fn len(&self) -> usize {
        self.nodes().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers a differentiable leaf holding a copy of `tensor`'s values.
    pub fn leaf(&self, tensor: &Tensor<T>) -> Tensor<T> {
        let value = tensor.shared_values();
        let id = self.push(Op::Leaf, Arc::clone(&value));
        Tensor::from_parts(tensor.shape().to_vec(), value, Some((self.clone(), id)))
    }

    /// Shorthand for `leaf(&Tensor::new(shape, values)?)`.
    pub fn var(&self, shape: &[usize], values: Vec<T>) -> Result<Tensor<T>> {
        Ok(self.leaf(&Tensor::new(shape, values)?))
    }

    pub(crate) fn push(&self, op: Op<T>, value: Arc<Vec<T>>) -> usize {
        let mut nodes = self.nodes();
        nodes.push(Node { op, value });
        nodes.len() - 1
    }

    pub(crate) fn nodes(&self) -> MutexGuard<'_, Vec<Node<T>>> {
        // a poisoned lock only means another thread panicked mid-push; the
        // vector itself is still consistent
        self.shared
            .nodes
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub(crate) fn same(&self, other: &Tape<T>) -> bool {
        Arc::ptr_eq(&self.shared, &other.shared)
    }
}

/// Gradients of a scalar root with respect to every node of its tape.
pub struct Gradients<T> {
    tape_id: u64,
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient with respect to `tensor`, or `None` when the tensor is
    /// detached, belongs to another tape, or does not influence the root.
    pub fn get(&self, tensor: &Tensor<T>) -> Option<&[T]> {
        let (tape, id) = tensor.node()?;
        if tape.id() != self.tape_id {
            return None;
        }
        self.grads.get(id)?.as_deref()
    }

    /// Like [`Gradients::get`] but yields zeros when no gradient reached the
    /// tensor.
    pub fn get_or_zeros(&self, tensor: &Tensor<T>) -> Vec<T> {
        self.get(tensor)
            .map(<[T]>::to_vec)
            .unwrap_or_else(|| vec![T::zero(); tensor.len()])
    }
}

fn accumulate<T: Scalar>(slot: &mut Option<Vec<T>>, contribution: Vec<T>) {
    match slot {
        Some(existing) => {
            for (e, c) in existing.iter_mut().zip(contribution) {
                *e = *e + c;
            }
        }
        None => *slot = Some(contribution),
    }
}

fn send<T: Scalar>(grads: &mut [Option<Vec<T>>], input: &Input<T>, contribution: Vec<T>) {
    if let Some(id) = input.node {
        accumulate(&mut grads[id], contribution);
    }
}

fn send_with<T: Scalar>(
    grads: &mut [Option<Vec<T>>],
    input: &Input<T>,
    f: impl FnOnce() -> Vec<T>,
) {
    if let Some(id) = input.node {
        accumulate(&mut grads[id], f());
    }
}

pub(crate) fn backward<T: Scalar>(root: &Tensor<T>) -> Result<Gradients<T>> {
    if !root.shape().is_empty() && root.len() != 1 {
        return Err(Error::NonScalarRoot(root.shape().to_vec()));
    }
    let (tape, root_id) = root.node().ok_or(Error::DetachedRoot)?;
    let nodes = tape.nodes();
    let mut grads: Vec<Option<Vec<T>>> = Vec::with_capacity(nodes.len());
    grads.resize_with(nodes.len(), || None);
    grads[root_id] = Some(vec![T::one()]);

    for id in (0..=root_id).rev() {
        let Some(g) = grads[id].take() else { continue };
        let node = &nodes[id];
        propagate(&mut grads, &node.op, &node.value, &g);
        grads[id] = Some(g);
    }

    Ok(Gradients {
        tape_id: tape.id(),
        grads,
    })
}

fn zip_map<T: Scalar>(a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn propagate<T: Scalar>(grads: &mut [Option<Vec<T>>], op: &Op<T>, out: &[T], g: &[T]) {
    let zero = T::zero();
    match op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            send(grads, a, g.to_vec());
            send(grads, b, g.to_vec());
        }
        Op::Sub(a, b) => {
            send(grads, a, g.to_vec());
            send_with(grads, b, || g.iter().map(|&x| -x).collect());
        }
        Op::Mul(a, b) => {
            send_with(grads, a, || zip_map(g, &b.value, |g, y| g * y));
            send_with(grads, b, || zip_map(g, &a.value, |g, x| g * x));
        }
        Op::Div(a, b) => {
            send_with(grads, a, || zip_map(g, &b.value, |g, y| g / y));
            send_with(grads, b, || {
                g.iter()
                    .zip(out)
                    .zip(b.value.iter())
                    .map(|((&g, &q), &y)| -g * q / y)
                    .collect()
            });
        }
        Op::Minimum(a, b) => {
            send_with(grads, a, || {
                g.iter()
                    .zip(a.value.iter().zip(b.value.iter()))
                    .map(|(&g, (&x, &y))| if x <= y { g } else { zero })
                    .collect()
            });
            send_with(grads, b, || {
                g.iter()
                    .zip(a.value.iter().zip(b.value.iter()))
                    .map(|(&g, (&x, &y))| if x <= y { zero } else { g })
                    .collect()
            });
        }
        Op::Maximum(a, b) => {
            send_with(grads, a, || {
                g.iter()
                    .zip(a.value.iter().zip(b.value.iter()))
                    .map(|(&g, (&x, &y))| if x >= y { g } else { zero })
                    .collect()
            });
            send_with(grads, b, || {
                g.iter()
                    .zip(a.value.iter().zip(b.value.iter()))
                    .map(|(&g, (&x, &y))| if x >= y { zero } else { g })
                    .collect()
            });
        }
        Op::Neg(a) => send_with(grads, a, || g.iter().map(|&x| -x).collect()),
        Op::Abs(a) => send_with(grads, a, || {
            zip_map(g, &a.value, |g, x| {
                if x > zero {
                    g
                } else if x < zero {
                    -g
                } else {
                    zero
                }
            })
        }),
        Op::Exp(a) => send_with(grads, a, || zip_map(g, out, |g, y| g * y)),
        Op::Ln(a) => send_with(grads, a, || zip_map(g, &a.value, |g, x| g / x)),
        Op::Sigmoid(a) => send_with(grads, a, || zip_map(g, out, |g, y| g * y * (T::one() - y))),
        Op::Tanh(a) => send_with(grads, a, || zip_map(g, out, |g, y| g * (T::one() - y * y))),
        Op::Relu(a) => send_with(grads, a, || {
            zip_map(g, &a.value, |g, x| if x > zero { g } else { zero })
        }),
        Op::Scale(a, c) => send_with(grads, a, || g.iter().map(|&x| x * *c).collect()),
        Op::Identity(a) => send(grads, a, g.to_vec()),
        Op::Sum(a) => send_with(grads, a, || vec![g[0]; a.value.len()]),
        Op::SumLastAxis { input, inner } => send_with(grads, input, || {
            g.iter()
                .flat_map(|&x| std::iter::repeat_n(x, *inner))
                .collect()
        }),
        Op::Gather { input, indices } => send_with(grads, input, || {
            let mut scattered = vec![zero; input.value.len()];
            for (&idx, &x) in indices.iter().zip(g) {
                scattered[idx] = scattered[idx] + x;
            }
            scattered
        }),
        Op::MatVec {
            matrix,
            vector,
            rows,
            cols,
        } => {
            send_with(grads, matrix, || {
                let mut dm = Vec::with_capacity(rows * cols);
                for &gr in g {
                    dm.extend(vector.value.iter().map(|&v| gr * v));
                }
                dm
            });
            send_with(grads, vector, || {
                let mut dv = vec![zero; *cols];
                for (r, &gr) in g.iter().enumerate() {
                    let row = &matrix.value[r * cols..(r + 1) * cols];
                    for (d, &m) in dv.iter_mut().zip(row) {
                        *d = *d + gr * m;
                    }
                }
                dv
            });
        }
        Op::LogSoftmax { input, inner } => send_with(grads, input, || {
            let mut dx = Vec::with_capacity(out.len());
            for (grow, orow) in g.chunks(*inner).zip(out.chunks(*inner)) {
                let total: T = grow.iter().copied().sum();
                dx.extend(
                    grow.iter()
                        .zip(orow)
                        .map(|(&gi, &oi)| gi - oi.exp() * total),
                );
            }
            dx
        }),
        Op::Concat(parts) => {
            let mut offset = 0;
            for part in parts {
                let n = part.value.len();
                send_with(grads, part, || g[offset..offset + n].to_vec());
                offset += n;
            }
        }
    }
}
