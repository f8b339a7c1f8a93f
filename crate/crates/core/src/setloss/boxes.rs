//! Box geometry: generalized IoU and the L1 + GIoU box loss, on plain
//! numbers and on tensors. Boxes are `[cx, cy, w, h]` unless noted.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::LossConfig;

/// `[cx, cy, w, h]` to `[x0, y0, x1, y1]`.
pub fn center_to_corners<T: Scalar>(b: &[T; 4]) -> [T; 4] {
    let half = T::lit(0.5);
    [
        b[0] - half * b[2],
        b[1] - half * b[3],
        b[0] + half * b[2],
        b[1] + half * b[3],
    ]
}

fn check_box<T: Scalar>(b: &[T; 4], w: T, h: T) -> Result<()> {
    if w > T::zero() && h > T::zero() && b.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::DegenerateBox(b.map(Scalar::as_f64)))
    }
}

/// Generalized IoU of two corner-form boxes.
pub fn giou_corners<T: Scalar>(a: &[T; 4], b: &[T; 4]) -> Result<T> {
    check_box(a, a[2] - a[0], a[3] - a[1])?;
    check_box(b, b[2] - b[0], b[3] - b[1])?;
    let zero = T::zero();
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(zero);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(zero);
    let inter = iw * ih;
    let area_a = (a[2] - a[0]) * (a[3] - a[1]);
    let area_b = (b[2] - b[0]) * (b[3] - b[1]);
    let union = area_a + area_b - inter;
    let enclose = (a[2].max(b[2]) - a[0].min(b[0])) * (a[3].max(b[3]) - a[1].min(b[1]));
    Ok(inter / union - (enclose - union) / enclose)
}

/// Generalized IoU of two center-form boxes, in `[-1, 1]`.
pub fn giou<T: Scalar>(a: &[T; 4], b: &[T; 4]) -> Result<T> {
    check_box(a, a[2], a[3])?;
    check_box(b, b[2], b[3])?;
    giou_corners(&center_to_corners(a), &center_to_corners(b))
}

/// Plain IoU of two center-form boxes.
pub fn iou<T: Scalar>(a: &[T; 4], b: &[T; 4]) -> T {
    let a = center_to_corners(a);
    let b = center_to_corners(b);
    let zero = T::zero();
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(zero);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(zero);
    let inter = iw * ih;
    let union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter;
    if union > zero {
        inter / union
    } else {
        zero
    }
}

/// Column `c` of a `[P, 4]` tensor.
fn column<T: Scalar>(t: &Tensor<T>, c: usize) -> Result<Tensor<T>> {
    let rows = t.len() / 4;
    t.reshape(&[t.len()])?
        .gather(&(0..rows).map(|r| r * 4 + c).collect::<Vec<_>>())
}

/// Row-wise GIoU between two `[P, 4]` center-form box tensors.
pub fn giou_rows<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.shape() != b.shape() || a.shape().last() != Some(&4) {
        return Err(Error::ShapeMismatch {
            op: "giou_rows",
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    let half = T::lit(0.5);
    let corners = |t: &Tensor<T>| -> Result<[Tensor<T>; 6]> {
        let (cx, cy, w, h) = (column(t, 0)?, column(t, 1)?, column(t, 2)?, column(t, 3)?);
        let hw = w.scale(half);
        let hh = h.scale(half);
        Ok([cx.sub(&hw)?, cy.sub(&hh)?, cx.add(&hw)?, cy.add(&hh)?, w, h])
    };
    let [ax0, ay0, ax1, ay1, aw, ah] = corners(a)?;
    let [bx0, by0, bx1, by1, bw, bh] = corners(b)?;

    let iw = ax1.minimum(&bx1)?.sub(&ax0.maximum(&bx0)?)?.relu();
    let ih = ay1.minimum(&by1)?.sub(&ay0.maximum(&by0)?)?.relu();
    let inter = iw.mul(&ih)?;
    let union = aw.mul(&ah)?.add(&bw.mul(&bh)?)?.sub(&inter)?;
    let ew = ax1.maximum(&bx1)?.sub(&ax0.minimum(&bx0)?)?;
    let eh = ay1.maximum(&by1)?.sub(&ay0.minimum(&by0)?)?;
    let enclose = ew.mul(&eh)?;
    let iou = inter.div(&union)?;
    let penalty = enclose.sub(&union)?.div(&enclose)?;
    iou.sub(&penalty)
}

/// Row-wise `lambda_l1 * |a - b|_1 + lambda_giou * (1 - GIoU(a, b))`.
pub(crate) fn box_loss_rows<T: Scalar>(
    targets: &Tensor<T>,
    preds: &Tensor<T>,
    cfg: &LossConfig<T>,
) -> Result<Tensor<T>> {
    let l1 = preds.sub(targets)?.abs().sum_last_axis()?;
    let g = giou_rows(targets, preds)?;
    l1.scale(cfg.lambda_l1)
        .add(&g.scale(-cfg.lambda_giou).offset(cfg.lambda_giou))
}

/// Box loss between a ground-truth box and one predicted box tensor of
/// four entries. Returns a scalar tensor carrying `b_hat`'s tape.
pub fn box_loss<T: Scalar>(
    b: &[T; 4],
    b_hat: &Tensor<T>,
    cfg: &LossConfig<T>,
) -> Result<Tensor<T>> {
    check_box(b, b[2], b[3])?;
    let target = Tensor::new(&[1, 4], b.to_vec())?;
    let pred = b_hat.reshape(&[1, 4])?;
    box_loss_rows(&target, &pred, cfg)?.reshape(&[])
}
