use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::assignment::{is_degenerate, solve_rectangular};
use crate::autodiff::{Tape, Tensor};
use crate::error::Error;

fn preds_from_probs(probs: &[&[f64]], boxes: &[[f64; 4]]) -> PredictionSet<f64> {
    let k1 = probs[0].len();
    let lp: Vec<f64> = probs
        .iter()
        .flat_map(|r| r.iter().map(|p| p.ln()))
        .collect();
    PredictionSet::new(
        Tensor::new(&[probs.len(), k1], lp).unwrap(),
        Tensor::new(&[boxes.len(), 4], boxes.concat()).unwrap(),
    )
    .unwrap()
}

const B: [f64; 4] = [0.4, 0.5, 0.2, 0.3];

#[test]
fn cost_entry_vanishes_when_class_equals_background() {
    let preds = preds_from_probs(&[&[0.4, 0.2, 0.4]], &[B]);
    let gts = GroundTruthSet::new(vec![0], vec![B]).unwrap();
    let c = build_cost_matrix(&preds, &gts, &LossConfig::default()).unwrap();
    assert_eq!(c.shape(), &[1, 1]);
    assert!(c.item().abs() < 1e-15);
}

#[test]
fn cost_entry_log_ratio() {
    let preds = preds_from_probs(&[&[0.8, 0.2]], &[B]);
    let gts = GroundTruthSet::new(vec![0], vec![B]).unwrap();
    let cfg = LossConfig::new(1.0, 5.0, 2.0).unwrap();
    let c = build_cost_matrix(&preds, &gts, &cfg).unwrap();
    assert!((c.item() - (0.2f64 / 0.8).ln()).abs() < 1e-14);
    assert!((c.item() + 1.3863).abs() < 5e-5);
}

#[test]
fn cost_matrix_entries_match_pairwise_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inst = Instance::<f64>::random(&mut rng, 4, 3, 3);
    let preds = inst.predictions(&inst.params()).unwrap();
    let cfg = LossConfig::default();
    let c = build_cost_matrix(&preds, &inst.truth, &cfg).unwrap();
    for i in 0..4 {
        for j in 0..3 {
            let class = inst.truth.classes[j];
            let b_hat = Tensor::vector(preds.box_values(i).to_vec());
            let expected = -preds.logprob(i, class)
                + preds.logprob(i, 3)
                + box_loss(&inst.truth.boxes[j], &b_hat, &cfg).unwrap().item();
            assert!((c.values()[i * 3 + j] - expected).abs() < 1e-13);
        }
    }
}

#[test]
fn cost_matrix_rejects_bad_inputs() {
    let preds = preds_from_probs(&[&[0.5, 0.5]], &[B]);
    let two = GroundTruthSet::new(vec![0, 0], vec![B, B]).unwrap();
    assert!(matches!(
        build_cost_matrix(&preds, &two, &LossConfig::default()),
        Err(Error::MoreTargetsThanSlots { rows: 1, cols: 2 })
    ));
    let bad_label = GroundTruthSet::new(vec![1], vec![B]).unwrap();
    assert!(matches!(
        build_cost_matrix(&preds, &bad_label, &LossConfig::default()),
        Err(Error::ClassOutOfRange {
            label: 1,
            num_classes: 1
        })
    ));
    assert!(GroundTruthSet::new(vec![0], vec![[0.5, 0.5, 0.0, 0.1]]).is_err());
    assert!(LossConfig::new(1.0, -1.0, 0.0).is_err());
}

#[test]
fn direct_loss_without_targets_is_background_only() {
    let preds = preds_from_probs(&[&[0.3, 0.7], &[0.6, 0.4]], &[B, B]);
    let loss = hungarian_loss_direct(
        &preds,
        &GroundTruthSet::empty(),
        &[],
        &LossConfig::default(),
    )
    .unwrap();
    let expected = -(0.7f64.ln() + 0.4f64.ln());
    assert!((loss.breakdown.total - expected).abs() < 1e-15);
    assert_eq!(loss.breakdown.assign_part, 0.0);
}

#[test]
fn direct_loss_single_pair() {
    let preds = preds_from_probs(&[&[0.5, 0.5]], &[B]);
    let gts = GroundTruthSet::new(vec![0], vec![B]).unwrap();
    let loss = hungarian_loss_direct(&preds, &gts, &[0], &LossConfig::default()).unwrap();
    assert!((loss.breakdown.total - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn certain_background_costs_nothing() {
    let logits = Tensor::new(&[3, 3], [-40.0, -40.0, 40.0].repeat(3)).unwrap();
    let boxes = Tensor::new(&[3, 4], vec![0.0; 12]).unwrap();
    let preds = PredictionSet::from_logits(&logits, &boxes).unwrap();
    let loss = hungarian_loss_direct(
        &preds,
        &GroundTruthSet::empty(),
        &[],
        &LossConfig::default(),
    )
    .unwrap();
    assert!(loss.breakdown.total >= 0.0 && loss.breakdown.total < 1e-30);
}

#[test]
fn direct_rejects_invalid_mappings() {
    let preds = preds_from_probs(&[&[0.5, 0.5], &[0.5, 0.5]], &[B, B]);
    let gts = GroundTruthSet::new(vec![0, 0], vec![B, B]).unwrap();
    let cfg = LossConfig::default();
    assert!(matches!(
        hungarian_loss_direct(&preds, &gts, &[1, 1], &cfg),
        Err(Error::InvalidMapping(_))
    ));
    assert!(hungarian_loss_direct(&preds, &gts, &[0, 2], &cfg).is_err());
    assert!(hungarian_loss_direct(&preds, &gts, &[0], &cfg).is_err());
}

#[test]
fn decomposed_matches_direct() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cfg = LossConfig::default();
    for m in 0..=4 {
        let inst = Instance::<f64>::random(&mut rng, 6, m, 3);
        let preds = inst.predictions(&inst.params()).unwrap();
        let (sol, dec) = hungarian_loss_decomposed(&preds, &inst.truth, &cfg).unwrap();
        let dir = hungarian_loss_direct(&preds, &inst.truth, &sol.mapping, &cfg).unwrap();
        let scale = dir.breakdown.total.abs().max(1.0);
        assert!((dec.breakdown.total - dir.breakdown.total).abs() / scale <= 1e-12);
        assert!((dec.breakdown.class_part - dir.breakdown.class_part).abs() <= 1e-12 * scale);
        assert!((dec.breakdown.box_part - dir.breakdown.box_part).abs() <= 1e-12 * scale);
        let b = dec.breakdown;
        assert!((b.total - (b.assign_part + b.background_part)).abs() <= 1e-12 * scale);
        if m == 0 {
            assert_eq!(b.assign_part, 0.0);
            assert_eq!(b.total, b.background_part);
        }
    }
}

#[test]
fn likelihood_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = LossConfig::new(1.0, 5.0, 2.0).unwrap();
    let inst = Instance::<f64>::random(&mut rng, 5, 3, 4);
    let preds = inst.predictions(&inst.params()).unwrap();
    let mapping = [4, 0, 2];
    let ll = log_likelihoods(&preds, &inst.truth, &mapping).unwrap();
    assert!((ll.log_likelihood - ll.log_background - ll.log_ratio).abs() < 1e-13);

    // -log(L / L_bg) - log L_bg + sum box losses
    let loss = hungarian_loss_direct(&preds, &inst.truth, &mapping, &cfg).unwrap();
    let first_line = -ll.log_ratio - ll.log_background + loss.breakdown.box_part;
    assert!((first_line - loss.breakdown.total).abs() < 1e-12);
    assert!((-ll.log_likelihood + loss.breakdown.box_part - loss.breakdown.total).abs() < 1e-12);
}

#[test]
fn decomposed_gradient_skips_unmatched_boxes() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let inst = Instance::<f64>::random(&mut rng, 5, 2, 3);
    let tape = Tape::new();
    let params = tape.leaf(&inst.params());
    let preds = inst.predictions(&params).unwrap();
    let (sol, loss) =
        hungarian_loss_decomposed(&preds, &inst.truth, &LossConfig::default()).unwrap();
    let g = loss.total.backward().unwrap();
    let box_grad = g.get(&preds.boxes).unwrap();
    for &i in &sol.unmatched {
        assert!(box_grad[i * 4..i * 4 + 4].iter().all(|&v| v == 0.0));
    }
    for &i in &sol.matched {
        assert!(box_grad[i * 4..i * 4 + 4].iter().any(|&v| v != 0.0));
    }
    // matched slots: +log p(bg) in the cost cancels -log p(bg) in the
    // background sum, so only unmatched slots see it at the log-prob level
    let lp_grad = g.get(&preds.class_logprobs).unwrap();
    for i in 0..5 {
        let expected = if sol.matched.contains(&i) { 0.0 } else { -1.0 };
        assert_eq!(lp_grad[i * 4 + 3], expected, "slot {i}");
    }
    // through the softmax every slot's background logit is reached
    let logit_grad = g.get(&params).unwrap();
    for i in 0..5 {
        assert!(logit_grad[i * 4 + 3] != 0.0, "background logit of slot {i}");
    }
}

#[test]
fn perfect_prediction_has_zero_loss() {
    let gts = GroundTruthSet::new(vec![1, 0], vec![B, [0.7, 0.2, 0.1, 0.1]]).unwrap();
    // slots 0,1 carry the objects, slot 2 is background; probabilities one-hot
    let lp = vec![
        f64::NEG_INFINITY,
        0.0,
        f64::NEG_INFINITY,
        0.0,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        0.0,
    ];
    // one-hot logprobs are not finite, so use direct values close to them
    let lp: Vec<f64> = lp
        .into_iter()
        .map(|v| if v.is_finite() { v } else { -800.0 })
        .collect();
    let preds = PredictionSet::new(
        Tensor::new(&[3, 3], lp).unwrap(),
        Tensor::new(&[3, 4], [B, [0.7, 0.2, 0.1, 0.1], B].concat()).unwrap(),
    )
    .unwrap();
    let direct = hungarian_loss_direct(&preds, &gts, &[0, 1], &LossConfig::default()).unwrap();
    // matched slots pay -log p(c) + log p(bg) = 0 - 800 each; background term pays +1600
    assert!(direct.breakdown.total.abs() < 1e-12);
    assert!(direct.breakdown.total >= 0.0);
}

#[test]
fn baseline_cost_examples() {
    let logits = Tensor::new(&[1, 2], vec![60.0, -60.0]).unwrap();
    let boxes = Tensor::new(&[1, 4], vec![0.0; 4]).unwrap();
    let preds = PredictionSet::from_logits(&logits, &boxes.sigmoid().detach()).unwrap();
    // from_logits applies a sigmoid; rebuild with exact boxes instead
    let preds = PredictionSet::new(
        preds.class_logprobs,
        Tensor::new(&[1, 4], B.to_vec()).unwrap(),
    )
    .unwrap();
    let gts = GroundTruthSet::new(vec![0], vec![B]).unwrap();
    let c = baseline_cost_matrix(&preds, &gts, &LossConfig::default()).unwrap();
    assert!((c.get(0, 0) + 1.0).abs() < 1e-12);

    let uniform = preds_from_probs(
        &[&[1.0 / 3.0; 3], &[1.0 / 3.0; 3], &[1.0 / 3.0; 3]],
        &[B, B, B],
    );
    let gts = GroundTruthSet::new(vec![0, 1], vec![B, B]).unwrap();
    let c = baseline_cost_matrix(&uniform, &gts, &LossConfig::default()).unwrap();
    assert!(is_degenerate(&c, 1e-9).unwrap().degenerate);
}

#[test]
fn baseline_and_aligned_agree_on_obvious_instances() {
    let preds = preds_from_probs(
        &[&[0.9, 0.05, 0.05], &[0.05, 0.05, 0.9]],
        &[B, [0.9, 0.9, 0.1, 0.1]],
    );
    let gts = GroundTruthSet::new(vec![0], vec![B]).unwrap();
    let cfg = LossConfig::default();
    let base = solve_rectangular(&baseline_cost_matrix(&preds, &gts, &cfg).unwrap()).unwrap();
    let (aligned, _) = hungarian_loss_decomposed(&preds, &gts, &cfg).unwrap();
    assert_eq!(base.mapping, vec![0]);
    assert_eq!(aligned.mapping, vec![0]);
}

#[test]
fn witness_search_finds_one() {
    let cfg = LossConfig::default();
    let w = find_misalignment_witness(0, 5000, &cfg)
        .unwrap()
        .expect("witness");
    assert_ne!(w.baseline_mapping, w.loss_optimal_mapping);
    assert!(w.baseline_loss_value > w.loss_optimal_value);
    let again = check_misalignment(&w.instance, &cfg).unwrap().unwrap();
    assert_eq!(again, w);
}

#[test]
fn instance_text_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inst = Instance::<f64>::random(&mut rng, 4, 2, 3);
    let parsed = Instance::parse(&inst.to_text()).unwrap();
    assert_eq!(parsed, inst);
    assert!(matches!(
        Instance::parse("2 3 2\n"),
        Err(Error::MoreTargetsThanSlots { .. })
    ));
    assert!(matches!(
        Instance::parse("1 1 2\n0 0 0 0 0 0 0\n5 0.5 0.5 0.1 0.1\n"),
        Err(Error::Parse { line: 3, .. })
    ));
}

#[test]
fn single_precision_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inst = Instance::<f32>::random(&mut rng, 5, 3, 3);
    let preds = inst.predictions(&inst.params()).unwrap();
    let (sol, dec) =
        hungarian_loss_decomposed(&preds, &inst.truth, &LossConfig::default()).unwrap();
    let dir =
        hungarian_loss_direct(&preds, &inst.truth, &sol.mapping, &LossConfig::default()).unwrap();
    assert!(
        (dec.breakdown.total - dir.breakdown.total).abs() / dir.breakdown.total.abs().max(1.0)
            < 1e-5
    );
}
