//! Search for instances where matching on the original raw-probability
//! cost picks a mapping that does not minimize the set loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::{for_each_mapping, solve_rectangular};
use crate::error::Result;
use crate::scalar::Scalar;

use super::cost::baseline_cost_matrix;
use super::instance::Instance;
use super::loss::hungarian_loss_direct;
use super::LossConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct MisalignmentWitness<T> {
    pub instance: Instance<T>,
    /// Enumeration argmin of the set loss.
    pub loss_optimal_mapping: Vec<usize>,
    pub loss_optimal_value: T,
    /// Mapping chosen by the baseline matching cost.
    pub baseline_mapping: Vec<usize>,
    /// Set loss evaluated on `baseline_mapping`.
    pub baseline_loss_value: T,
}

/// Checks one instance by enumerating every mapping. Returns a witness when
/// the baseline mapping differs from the loss argmin and has strictly
/// larger loss.
pub fn check_misalignment<T: Scalar>(
    instance: &Instance<T>,
    cfg: &LossConfig<T>,
) -> Result<Option<MisalignmentWitness<T>>> {
    let preds = instance.predictions(&instance.params())?;
    let truth = &instance.truth;

    let mut best: Option<(T, Vec<usize>)> = None;
    let mut failure = None;
    for_each_mapping(
        preds.num_slots(),
        truth.len(),
        |mapping| match hungarian_loss_direct(&preds, truth, mapping, cfg) {
            Ok(loss) => {
                let v = loss.breakdown.total;
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, mapping.to_vec()));
                }
            }
            Err(e) => failure = Some(e),
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let Some((loss_optimal_value, loss_optimal_mapping)) = best else {
        return Ok(None);
    };

    let baseline = solve_rectangular(&baseline_cost_matrix(&preds, truth, cfg)?)?;
    let baseline_loss_value = hungarian_loss_direct(&preds, truth, &baseline.mapping, cfg)?
        .breakdown
        .total;
    if baseline.mapping != loss_optimal_mapping && baseline_loss_value > loss_optimal_value {
        Ok(Some(MisalignmentWitness {
            instance: instance.clone(),
            loss_optimal_mapping,
            loss_optimal_value,
            baseline_mapping: baseline.mapping,
            baseline_loss_value,
        }))
    } else {
        Ok(None)
    }
}

/// Random search over small instances (`N <= 5`, `M <= 3`, `K` in `2..=3`).
pub fn find_misalignment_witness(
    seed: u64,
    max_tries: usize,
    cfg: &LossConfig<f64>,
) -> Result<Option<MisalignmentWitness<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_tries {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=n.min(3));
        let k = rng.gen_range(2..=3);
        let instance = Instance::random(&mut rng, n, m, k);
        if let Some(w) = check_misalignment(&instance, cfg)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}
