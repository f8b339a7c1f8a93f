//! Training loop for the toy task under the aligned loss or the baseline
//! matching strategy.

mod optim;

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::assignment::{is_degenerate, solve_rectangular, DEFAULT_DEGENERACY_TOLERANCE};
use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding::{stream_rng, Stream};
use crate::setloss::{
    baseline_cost_matrix, build_cost_matrix, cost_values, hungarian_loss_decomposed,
    hungarian_loss_direct, iou, GroundTruthSet, LossBreakdown, LossConfig, PredictionSet,
};
use crate::toytask::{generate_scene, ModelParams, Scene, SceneConfig};

pub use optim::OptimizerKind;
pub(crate) use optim::{clip_global_norm, Optimizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// Match on the aligned cost and minimize the decomposed loss.
    Aligned,
    /// Match on the original raw-probability cost, then minimize the set
    /// loss on that mapping.
    Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: T,
    pub optimizer: OptimizerKind,
    pub loss_mode: LossMode,
    pub seed: u64,
    /// A metrics row is recorded every `eval_every` steps.
    pub eval_every: usize,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<T>,
    /// Reuse the first batch at every step instead of drawing new scenes.
    pub fixed_batch: bool,
    pub loss: LossConfig<T>,
    pub scene: SceneConfig,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 64,
            learning_rate: T::lit(1e-3),
            optimizer: OptimizerKind::Adam,
            loss_mode: LossMode::Aligned,
            seed: 0,
            eval_every: 1,
            clip_norm: None,
            fixed_batch: false,
            loss: LossConfig::default(),
            scene: SceneConfig::default(),
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.steps < 1 {
            return fail("steps must be >= 1");
        }
        if self.batch_size < 1 {
            return fail("batch_size must be >= 1");
        }
        if self.eval_every < 1 {
            return fail("eval_every must be >= 1");
        }
        if !(self.learning_rate >= T::zero()) || !self.learning_rate.is_finite() {
            return fail("learning_rate must be a finite value >= 0");
        }
        if let Some(c) = self.clip_norm {
            if !(c > T::zero()) {
                return fail("clip_norm must be > 0");
            }
        }
        self.loss.validate()?;
        self.scene.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow<T> {
    pub step: usize,
    pub loss_total: T,
    pub loss_assign: T,
    pub loss_background: T,
    pub loss_class: T,
    pub loss_box: T,
    pub mean_matched_iou: T,
    pub class_accuracy: T,
    pub degeneracy_rate: T,
}

impl<T: Scalar> MetricsRow<T> {
    pub const CSV_HEADER: &'static str = "step,loss_total,loss_assign,loss_background,loss_class,loss_box,mean_matched_iou,class_accuracy,degeneracy_rate";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.step,
            self.loss_total,
            self.loss_assign,
            self.loss_background,
            self.loss_class,
            self.loss_box,
            self.mean_matched_iou,
            self.class_accuracy,
            self.degeneracy_rate
        )
    }
}

/// Header line plus one line per row.
pub fn metrics_csv<T: Scalar>(rows: &[MetricsRow<T>]) -> String {
    let mut out = format!("{}\n", MetricsRow::<T>::CSV_HEADER);
    for r in rows {
        let _ = writeln!(out, "{}", r.to_csv());
    }
    out
}

pub struct TrainOutcome<T> {
    pub metrics: Vec<MetricsRow<T>>,
    pub params: ModelParams<T>,
}

/// Matching quality of aligned-cost matches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<T> {
    pub mean_matched_iou: T,
    pub class_accuracy: T,
}

#[derive(Default)]
struct MatchTally<T> {
    iou_sum: T,
    hits: usize,
    pairs: usize,
}

impl<T: Scalar> MatchTally<T> {
    fn add(&mut self, other: &Self) {
        self.iou_sum = self.iou_sum + other.iou_sum;
        self.hits += other.hits;
        self.pairs += other.pairs;
    }

    fn finish(&self) -> (T, T) {
        if self.pairs == 0 {
            return (T::zero(), T::zero());
        }
        let n = T::lit(self.pairs as f64);
        (self.iou_sum / n, T::lit(self.hits as f64) / n)
    }
}

/// Scores the aligned-cost matching of `preds` against `truth`.
fn tally_matches<T: Scalar>(
    preds: &PredictionSet<T>,
    truth: &GroundTruthSet<T>,
    cfg: &LossConfig<T>,
) -> Result<(MatchTally<T>, bool)> {
    let preds = preds.detach();
    let costs = cost_values(&build_cost_matrix(&preds, truth, cfg)?)?;
    let solution = solve_rectangular(&costs)?;
    let degenerate = is_degenerate(&costs, T::lit(DEFAULT_DEGENERACY_TOLERANCE))?.degenerate;
    let mut tally = MatchTally::default();
    for (j, &i) in solution.mapping.iter().enumerate() {
        tally.iou_sum = tally.iou_sum + iou(&truth.boxes[j], &preds.box_values(i));
        tally.hits += usize::from(preds.argmax_class(i) == truth.classes[j]);
        tally.pairs += 1;
    }
    Ok((tally, degenerate))
}

struct SceneOutcome<T> {
    grads: Vec<T>,
    breakdown: LossBreakdown<T>,
    tally: MatchTally<T>,
    degenerate: bool,
}

fn scene_step<T: Scalar>(
    params: &ModelParams<T>,
    scene: &Scene<T>,
    cfg: &TrainConfig<T>,
) -> Result<SceneOutcome<T>> {
    let tape = Tape::new();
    let attached = params.attach(&tape);
    let preds = attached.forward(&scene.features)?;
    let loss = match cfg.loss_mode {
        LossMode::Aligned => hungarian_loss_decomposed(&preds, &scene.truth, &cfg.loss)?.1,
        LossMode::Baseline => {
            let costs = baseline_cost_matrix(&preds, &scene.truth, &cfg.loss)?;
            let mapping = solve_rectangular(&costs)?.mapping;
            hungarian_loss_direct(&preds, &scene.truth, &mapping, &cfg.loss)?
        }
    };
    let g = loss.total.backward()?;
    let grads = attached
        .tensors
        .iter()
        .flat_map(|t| g.get_or_zeros(t))
        .collect();
    let (tally, degenerate) = tally_matches(&preds, &scene.truth, &cfg.loss)?;
    Ok(SceneOutcome {
        grads,
        breakdown: loss.breakdown,
        tally,
        degenerate,
    })
}

fn dump_batch<T: Scalar>(batch: &[Scene<T>]) -> String {
    batch.iter().map(|s| s.to_record() + "\n").collect()
}

/// Runs the optimization loop. Deterministic for a fixed configuration.
pub fn train<T: Scalar>(cfg: &TrainConfig<T>) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    let mut data_rng = stream_rng(cfg.seed, Stream::Data);
    let mut params = ModelParams::init(&cfg.scene, &mut stream_rng(cfg.seed, Stream::Init));
    let mut flat = params.flatten();
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate, flat.len());
    let draw = |rng: &mut _| -> Vec<Scene<T>> {
        (0..cfg.batch_size)
            .map(|_| generate_scene(&cfg.scene, rng))
            .collect()
    };
    let fixed = cfg.fixed_batch.then(|| draw(&mut data_rng));

    let mut metrics = Vec::with_capacity(cfg.steps / cfg.eval_every);
    for step in 1..=cfg.steps {
        let batch = match &fixed {
            Some(b) => b.clone(),
            None => draw(&mut data_rng),
        };
        let outcomes = batch
            .par_iter()
            .map(|scene| scene_step(&params, scene, cfg))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFiniteLoss {
                    step,
                    dump: format!("{e}\n{}", dump_batch(&batch)),
                },
                e => e,
            })?;

        // reduce in scene order
        let mut grads = vec![T::zero(); flat.len()];
        let zero = T::zero();
        let mut sums = LossBreakdown {
            total: zero,
            assign_part: zero,
            background_part: zero,
            class_part: zero,
            box_part: zero,
        };
        let mut tally = MatchTally::default();
        let mut degenerate = 0usize;
        for o in &outcomes {
            for (g, &x) in grads.iter_mut().zip(&o.grads) {
                *g = *g + x;
            }
            let b = &o.breakdown;
            sums.total = sums.total + b.total;
            sums.assign_part = sums.assign_part + b.assign_part;
            sums.background_part = sums.background_part + b.background_part;
            sums.class_part = sums.class_part + b.class_part;
            sums.box_part = sums.box_part + b.box_part;
            tally.add(&o.tally);
            degenerate += usize::from(o.degenerate);
        }
        if !sums.total.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss {
                step,
                dump: dump_batch(&batch),
            });
        }

        if step % cfg.eval_every == 0 {
            let (mean_matched_iou, class_accuracy) = tally.finish();
            metrics.push(MetricsRow {
                step,
                loss_total: sums.total,
                loss_assign: sums.assign_part,
                loss_background: sums.background_part,
                loss_class: sums.class_part,
                loss_box: sums.box_part,
                mean_matched_iou,
                class_accuracy,
                degeneracy_rate: T::lit(degenerate as f64 / batch.len() as f64),
            });
        }

        if let Some(max_norm) = cfg.clip_norm {
            clip_global_norm(&mut grads, max_norm);
        }
        optimizer.step(&mut flat, &grads);
        params = params.with_flat(&flat)?;
    }
    Ok(TrainOutcome { metrics, params })
}

/// Aligned-cost matching quality of `params` on `num_scenes` fresh scenes.
pub fn evaluate<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &SceneConfig,
    loss: &LossConfig<T>,
    num_scenes: usize,
    seed: u64,
) -> Result<Evaluation<T>> {
    evaluate_with(
        |scene| params.forward(&scene.features),
        cfg,
        loss,
        num_scenes,
        seed,
    )
}

/// [`evaluate`] for an arbitrary predictor.
pub fn evaluate_with<T, F>(
    predict: F,
    cfg: &SceneConfig,
    loss: &LossConfig<T>,
    num_scenes: usize,
    seed: u64,
) -> Result<Evaluation<T>>
where
    T: Scalar,
    F: Fn(&Scene<T>) -> Result<PredictionSet<T>> + Sync,
{
    if num_scenes == 0 {
        return Err(Error::Config("evaluation needs at least one scene".into()));
    }
    let mut rng = stream_rng(seed, Stream::Eval);
    let scenes: Vec<Scene<T>> = (0..num_scenes)
        .map(|_| generate_scene(cfg, &mut rng))
        .collect();
    let tallies = scenes
        .par_iter()
        .map(|s| tally_matches(&predict(s)?, &s.truth, loss).map(|(t, _)| t))
        .collect::<Result<Vec<_>>>()?;
    let mut total = MatchTally::default();
    for t in &tallies {
        total.add(t);
    }
    let (mean_matched_iou, class_accuracy) = total.finish();
    Ok(Evaluation {
        mean_matched_iou,
        class_accuracy,
    })
}
