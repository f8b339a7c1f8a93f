use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::matrix::CostMatrix;

/// Default magnitude of the filler columns.
pub const DEFAULT_PAD_EPSILON: f64 = 1e-9;

/// Extends an `N x M` matrix to `N x N`, filling the new columns with
/// i.i.d. uniform draws from `[0, epsilon)`.
///
/// The original columns are copied bit-exactly; a square input is returned
/// unchanged.
pub fn pad_square<T: Scalar>(
    costs: &CostMatrix<T>,
    epsilon: T,
    seed: u64,
) -> Result<CostMatrix<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::NonPositiveEpsilon(epsilon.as_f64()));
    }
    let n = costs.rows();
    let m = costs.cols();
    if n == m {
        return Ok(costs.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        entries.extend((0..m).map(|j| costs.get(i, j)));
        entries.extend((m..n).map(|_| T::lit(rng.gen::<f64>()) * epsilon));
    }
    CostMatrix::new(n, n, entries)
}
