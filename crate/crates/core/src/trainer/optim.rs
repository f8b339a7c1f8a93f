use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// First-order optimizer over a flat parameter vector.
#[derive(Debug, Clone)]
pub(crate) enum Optimizer<T> {
    Sgd {
        lr: T,
    },
    Adam {
        lr: T,
        beta1: T,
        beta2: T,
        eps: T,
        step: i32,
        m: Vec<T>,
        v: Vec<T>,
    },
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, lr: T, len: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Self::Sgd { lr },
            OptimizerKind::Adam => Self::Adam {
                lr,
                beta1: T::lit(0.9),
                beta2: T::lit(0.999),
                eps: T::lit(1e-8),
                step: 0,
                m: vec![T::zero(); len],
                v: vec![T::zero(); len],
            },
        }
    }

    pub fn step(&mut self, params: &mut [T], grads: &[T]) {
        match self {
            Self::Sgd { lr } => {
                for (p, &g) in params.iter_mut().zip(grads) {
                    *p = *p - *lr * g;
                }
            }
            Self::Adam {
                lr,
                beta1,
                beta2,
                eps,
                step,
                m,
                v,
            } => {
                *step += 1;
                let one = T::one();
                let c1 = one - beta1.powi(*step);
                let c2 = one - beta2.powi(*step);
                for (((p, &g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *m = *beta1 * *m + (one - *beta1) * g;
                    *v = *beta2 * *v + (one - *beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p = *p - *lr * m_hat / (v_hat.sqrt() + *eps);
                }
            }
        }
    }
}

/// Rescales `grads` in place so their L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub(crate) fn clip_global_norm<T: Scalar>(grads: &mut [T], max_norm: T) -> T {
    let norm = grads.iter().map(|&g| g * g).sum::<T>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g = *g * s);
    }
    norm
}
