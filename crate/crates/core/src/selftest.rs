//! Property suites shared by the `selftest` command and the acceptance
//! tests. Each suite draws its cases from a seed and reports how many
//! passed.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::assignment::{
    brute_force_assignment, for_each_mapping, is_degenerate, pad_square, solve_rectangular,
    CostMatrix, DEFAULT_DEGENERACY_TOLERANCE, DEFAULT_PAD_EPSILON,
};
use crate::error::Result;
use crate::seeding::{stream_rng, Stream};
use crate::setloss::{
    build_cost_matrix, cost_values, hungarian_loss_decomposed, hungarian_loss_direct,
    GroundTruthSet, Instance, LossConfig, PredictionSet,
};

/// Builds the numeric matching cost for one instance.
pub type CostBuilder =
    fn(&PredictionSet<f64>, &GroundTruthSet<f64>, &LossConfig<f64>) -> Result<CostMatrix<f64>>;

/// Counts of one suite run. `checked` excludes cases the suite skips as
/// out of scope, such as degenerate draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checked: usize,
    pub failures: usize,
    /// Worst observed error, in the suite's own metric.
    pub worst: f64,
    /// First failing case, if any.
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            failures: 0,
            worst: 0.0,
            first_failure: None,
        }
    }

    fn fail(&mut self, what: String) {
        self.failures += 1;
        self.first_failure.get_or_insert(what);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}/{} passed, worst {:e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checked - self.failures,
            self.checked,
            self.worst
        )?;
        if let Some(c) = &self.first_failure {
            write!(f, " (first failure: {c})")?;
        }
        Ok(())
    }
}

/// The matching cost used by training.
pub fn aligned_cost(
    preds: &PredictionSet<f64>,
    gts: &GroundTruthSet<f64>,
    cfg: &LossConfig<f64>,
) -> Result<CostMatrix<f64>> {
    cost_values(&build_cost_matrix(&preds.detach(), gts, cfg)?)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CostMatrix<f64> {
    // a third of the draws are small integers so that ties actually occur
    let entries = if rng.gen_bool(1.0 / 3.0) {
        (0..rows * cols)
            .map(|_| f64::from(rng.gen_range(0..4u8)))
            .collect()
    } else {
        (0..rows * cols)
            .map(|_| rng.gen_range(-10.0..10.0))
            .collect()
    };
    CostMatrix::new(rows, cols, entries).expect("cols <= rows")
}

/// `solve_rectangular` against exhaustive enumeration: identical totals
/// always, identical mappings when the optimum is unique.
pub fn oracle_suite(cases: usize, max_rows: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("oracle-equivalence");
    let mut rng = stream_rng(seed, Stream::Instances);
    for case in 0..cases {
        let n = rng.gen_range(0..=max_rows);
        let m = rng.gen_range(0..=n);
        let costs = random_matrix(&mut rng, n, m);
        let fast = solve_rectangular(&costs)?;
        let slow = brute_force_assignment(&costs)?;
        report.checked += 1;
        let gap = (fast.total_cost - slow.total_cost).abs();
        report.worst = report.worst.max(gap);
        if fast.total_cost != slow.total_cost {
            report.fail(format!(
                "case {case}: cost {} vs {}",
                fast.total_cost, slow.total_cost
            ));
        } else if fast.mapping != slow.mapping
            && !is_degenerate(&costs, DEFAULT_DEGENERACY_TOLERANCE)?.degenerate
        {
            report.fail(format!(
                "case {case}: mapping {:?} vs {:?}",
                fast.mapping, slow.mapping
            ));
        }
    }
    Ok(report)
}

/// Term-by-term loss against the cost-matrix decomposition on random
/// instances with up to 10 slots, 6 targets and 5 classes.
pub fn decomposition_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("decomposition-identity");
    let cfg = LossConfig::default();
    let mut rng = stream_rng(seed, Stream::Instances);
    for case in 0..cases {
        let n = rng.gen_range(1..=10);
        let m = rng.gen_range(0..=n.min(6));
        let k = rng.gen_range(1..=5);
        let inst = Instance::<f64>::random(&mut rng, n, m, k);
        let preds = inst.predictions(&inst.params())?;
        let (solution, decomposed) = hungarian_loss_decomposed(&preds, &inst.truth, &cfg)?;
        let direct = hungarian_loss_direct(&preds, &inst.truth, &solution.mapping, &cfg)?;
        let (d, e) = (direct.breakdown.total, decomposed.breakdown.total);
        let rel = (d - e).abs() / d.abs().max(1.0);
        report.checked += 1;
        report.worst = report.worst.max(rel);
        if !(rel <= 1e-12) {
            report.fail(format!("case {case}: direct {d} vs decomposed {e}"));
        }
    }
    Ok(report)
}

/// Draws instances until `cases` non-degenerate ones (judged on the aligned
/// cost) have been checked, and verifies that matching on `builder`'s cost
/// attains the enumeration minimum of the set loss.
pub fn alignment_suite(cases: usize, seed: u64, builder: CostBuilder) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("alignment");
    let cfg = LossConfig::default();
    let mut rng = stream_rng(seed, Stream::Instances);
    let mut draws = 0usize;
    while report.checked < cases && draws < cases * 20 {
        draws += 1;
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=n);
        let k = rng.gen_range(1..=4);
        let inst = Instance::<f64>::random(&mut rng, n, m, k);
        let preds = inst.predictions(&inst.params())?;
        let truth = &inst.truth;
        if is_degenerate(
            &aligned_cost(&preds, truth, &cfg)?,
            DEFAULT_DEGENERACY_TOLERANCE,
        )?
        .degenerate
        {
            continue;
        }

        let mut best = f64::INFINITY;
        let mut failure = None;
        for_each_mapping(n, m, |mapping| {
            match hungarian_loss_direct(&preds, truth, mapping, &cfg) {
                Ok(l) => best = best.min(l.breakdown.total),
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let chosen = solve_rectangular(&builder(&preds, truth, &cfg)?)?.mapping;
        let achieved = hungarian_loss_direct(&preds, truth, &chosen, &cfg)?
            .breakdown
            .total;
        let excess = (achieved - best) / best.abs().max(1.0);
        report.checked += 1;
        report.worst = report.worst.max(excess);
        if excess > 1e-9 {
            report.fail(format!(
                "draw {draws}: loss {achieved} above minimum {best}"
            ));
        }
    }
    Ok(report)
}

/// Smallest and second-smallest totals over all mappings.
fn best_two(costs: &CostMatrix<f64>) -> (f64, f64) {
    let (mut first, mut second) = (f64::INFINITY, f64::INFINITY);
    for_each_mapping(costs.rows(), costs.cols(), |mapping| {
        let v = costs.mapping_cost(mapping);
        if v < first {
            second = first;
            first = v;
        } else if v < second {
            second = v;
        }
    });
    (first, second)
}

/// Square padding with near-zero filler columns reproduces the rectangular
/// solution on matrices whose optimum leads by at least `1e-6`.
pub fn padding_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("padding-conformance");
    let mut rng = stream_rng(seed, Stream::Instances);
    let mut pad_rng = stream_rng(seed, Stream::Padding);
    let mut draws = 0usize;
    while report.checked < cases && draws < cases * 20 {
        draws += 1;
        let n = rng.gen_range(2..=8);
        let m = rng.gen_range(1..n);
        let costs = random_matrix(&mut rng, n, m);
        let (first, second) = best_two(&costs);
        if second - first < 1e-6 {
            continue;
        }
        let rect = solve_rectangular(&costs)?;
        let padded = pad_square(&costs, DEFAULT_PAD_EPSILON, pad_rng.gen())?;
        let square = solve_rectangular(&padded)?;
        let restricted = &square.mapping[..m];
        let gap = (costs.mapping_cost(restricted) - rect.total_cost).abs();
        report.checked += 1;
        report.worst = report.worst.max(gap);
        if restricted != rect.mapping.as_slice() || gap > 2e-9 {
            report.fail(format!(
                "draw {draws}: padded {restricted:?} vs {:?}",
                rect.mapping
            ));
        }
    }
    Ok(report)
}

/// The aligned cost with its class term negated. A deliberately wrong
/// builder for checking that the alignment suite can fail.
pub fn wrong_sign_cost(
    preds: &PredictionSet<f64>,
    gts: &GroundTruthSet<f64>,
    cfg: &LossConfig<f64>,
) -> Result<CostMatrix<f64>> {
    let good = aligned_cost(preds, gts, cfg)?;
    let (n, m) = (good.rows(), good.cols());
    let bg = preds.background_index();
    let mut entries = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let class =
                cfg.lambda_class * (preds.logprob(i, bg) - preds.logprob(i, gts.classes[j]));
            entries.push(good.get(i, j) - 2.0 * class);
        }
    }
    CostMatrix::new(n, m, entries)
}

/// Sample counts for [`run_selftest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelftestCounts {
    pub oracle: usize,
    pub decomposition: usize,
    pub alignment: usize,
    pub padding: usize,
}

impl Default for SelftestCounts {
    fn default() -> Self {
        Self {
            oracle: 300,
            decomposition: 300,
            alignment: 100,
            padding: 100,
        }
    }
}

/// Runs all four suites with `builder` as the matching cost of the
/// alignment suite.
pub fn run_selftest(
    counts: SelftestCounts,
    seed: u64,
    builder: CostBuilder,
) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        oracle_suite(counts.oracle, 7, seed)?,
        decomposition_suite(counts.decomposition, seed)?,
        alignment_suite(counts.alignment, seed, builder)?,
        padding_suite(counts.padding, seed)?,
    ])
}
