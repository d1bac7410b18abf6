//! Class-balanced cross-entropy with deep supervision.

use crate::autograd::{Graph, LogisticTarget, Var};
use crate::error::{Error, Result};
use crate::model::{NetOutputs, SIDE_OUTPUTS};
use crate::tensor::Element;

use super::gt::{Label, TriStateGroundTruth};

/// Extra weight on the negative term of the balanced loss.
pub const NEGATIVE_TERM_SCALE: f64 = 1.1;

/// Per-pixel targets for a batch of logit maps of shape (N, 1, H, W).
///
/// For each image, positives get weight `λ` and negatives
/// `1.1·(1 − λ)` with `λ = |G₋| / (|G₊| + |G₋|)`; ignored pixels get none.
pub fn balanced_targets(gts: &[&TriStateGroundTruth]) -> Result<Vec<LogisticTarget>> {
    let mut targets = Vec::with_capacity(gts.iter().map(|g| g.labels().len()).sum());
    for (i, gt) in gts.iter().enumerate() {
        let lambda = gt.lambda().ok_or_else(|| {
            Error::data(format!("degenerate sample {i}: every ground-truth pixel is ignored"))
        })?;
        let pos_w = lambda;
        let neg_w = NEGATIVE_TERM_SCALE * (1.0 - lambda);
        targets.extend(gt.labels().iter().map(|l| match l {
            Label::Positive => LogisticTarget {
                positive: true,
                weight: pos_w,
            },
            Label::Negative => LogisticTarget {
                positive: false,
                weight: neg_w,
            },
            Label::Ignore => LogisticTarget {
                positive: false,
                weight: 0.0,
            },
        }));
    }
    Ok(targets)
}

/// `−λ Σ₊ log σ(a) − 1.1(1−λ) Σ₋ log(1 − σ(a))`, summed over the batch.
pub fn balanced_bce_loss<T: Element>(g: &mut Graph<T>, logits: Var, gts: &[&TriStateGroundTruth]) -> Result<Var> {
    let s = g.shape(logits);
    if s.n != gts.len() || s.c != 1 {
        return Err(Error::config(format!(
            "logits of shape {s} for {} ground-truth maps",
            gts.len()
        )));
    }
    for gt in gts {
        if (gt.height(), gt.width()) != (s.h, s.w) {
            return Err(Error::config(format!(
                "ground truth {}x{} does not match logits of shape {s}",
                gt.height(),
                gt.width()
            )));
        }
    }
    let targets = balanced_targets(gts)?;
    g.weighted_logistic(logits, targets)
}

/// Scalar nodes of the deeply supervised objective.
#[derive(Clone, Copy, Debug)]
pub struct LossTerms {
    pub total: Var,
    pub sides: [Var; SIDE_OUTPUTS],
    pub fused: Var,
}

/// `Σ_m β_m ℓ_side^(m) + ℓ_fuse`, every term using the balanced loss.
pub fn total_loss<T: Element>(
    g: &mut Graph<T>,
    outputs: &NetOutputs,
    gts: &[&TriStateGroundTruth],
    side_weights: [f64; SIDE_OUTPUTS],
) -> Result<LossTerms> {
    let targets = balanced_targets(gts)?;
    let mut sides = Vec::with_capacity(SIDE_OUTPUTS);
    for &side in &outputs.sides {
        sides.push(balanced_with(g, side, gts, targets.clone())?);
    }
    let fused = balanced_with(g, outputs.fused, gts, targets)?;
    let mut terms: Vec<(Var, f64)> = sides.iter().copied().zip(side_weights).collect();
    terms.push((fused, 1.0));
    let total = g.linear_combination(&terms)?;
    Ok(LossTerms {
        total,
        sides: [sides[0], sides[1], sides[2]],
        fused,
    })
}

fn balanced_with<T: Element>(
    g: &mut Graph<T>,
    logits: Var,
    gts: &[&TriStateGroundTruth],
    targets: Vec<LogisticTarget>,
) -> Result<Var> {
    let s = g.shape(logits);
    if s.n != gts.len() || s.c != 1 || targets.len() != s.numel() {
        return Err(Error::config(format!(
            "logits of shape {s} for {} ground-truth maps",
            gts.len()
        )));
    }
    g.weighted_logistic(logits, targets)
}
