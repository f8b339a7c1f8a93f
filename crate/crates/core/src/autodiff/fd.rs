use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tensor::Tensor;

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Central-difference estimate of the gradient of `f` at `params`:
/// `(f(x + h e_k) - f(x - h e_k)) / 2h` for every coordinate `k`.
///
/// `f` receives detached tensors shaped like `params`.
pub fn finite_diff_gradient<T, F>(mut f: F, params: &Tensor<T>, step: T) -> Result<Tensor<T>>
where
    T: Scalar,
    F: FnMut(&Tensor<T>) -> Result<T>,
{
    if !(step > T::zero()) {
        return Err(Error::NonPositiveStep(step.as_f64()));
    }
    let base = params.values().to_vec();
    let mut probe = |values: Vec<T>, k: usize, sign: &str| -> Result<T> {
        let v = f(&Tensor::new(params.shape(), values)?)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: format!("finite difference probe {sign}h at coordinate {k}"),
                value: v.as_f64(),
            });
        }
        Ok(v)
    };
    let two_h = step + step;
    let mut grad = Vec::with_capacity(base.len());
    for k in 0..base.len() {
        let mut plus = base.clone();
        plus[k] = plus[k] + step;
        let mut minus = base.clone();
        minus[k] = minus[k] - step;
        let fp = probe(plus, k, "+")?;
        let fm = probe(minus, k, "-")?;
        grad.push((fp - fm) / two_h);
    }
    Tensor::new(params.shape(), grad)
}
