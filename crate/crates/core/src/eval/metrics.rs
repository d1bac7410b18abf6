//! Precision/recall accumulation and the ODS, OIS and AP summaries.

use serde::{Deserialize, Serialize};

use super::matching::correspond;
use super::nms::nms;
use super::thin::threshold_and_thin;
use crate::error::{Error, Result};
use crate::infer::EdgeProbabilityMap;

/// Matching tallies at one threshold, summed over images.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdCounts {
    /// Predicted edge pixels matched to some annotator.
    pub matched_pred: u64,
    pub total_pred: u64,
    /// Annotated pixels matched, summed over annotators.
    pub matched_gt: u64,
    pub total_gt: u64,
}

impl ThresholdCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.matched_pred, self.total_pred)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.matched_gt, self.total_gt)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }
}

impl std::ops::Add for ThresholdCounts {
    type Output = ThresholdCounts;

    fn add(self, o: ThresholdCounts) -> ThresholdCounts {
        ThresholdCounts {
            matched_pred: self.matched_pred + o.matched_pred,
            total_pred: self.total_pred + o.total_pred,
            matched_gt: self.matched_gt + o.matched_gt,
            total_gt: self.total_gt + o.total_gt,
        }
    }
}

impl std::iter::Sum for ThresholdCounts {
    fn sum<I: Iterator<Item = ThresholdCounts>>(iter: I) -> Self {
        iter.fold(ThresholdCounts::default(), |a, b| a + b)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Dataset-level precision/recall per threshold, in threshold order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
    /// Matching distance as a fraction of the image diagonal.
    pub tol_frac: f64,
    pub nms: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            thresholds: uniform_thresholds(99),
            tol_frac: 0.0075,
            nms: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(Error::config("at least one threshold is required"));
        }
        for (i, &t) in self.thresholds.iter().enumerate() {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::config(format!("threshold {t} outside (0, 1)")));
            }
            if i > 0 && t <= self.thresholds[i - 1] {
                return Err(Error::config("thresholds must be strictly increasing"));
            }
        }
        if !(self.tol_frac > 0.0) || !self.tol_frac.is_finite() {
            return Err(Error::config(format!("tolerance {} must be positive", self.tol_frac)));
        }
        Ok(())
    }
}

/// `k / (n + 1)` for `k = 1..=n`.
pub fn uniform_thresholds(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

/// One image to evaluate: a probability map and one binary map per
/// annotator.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalItem {
    pub prediction: EdgeProbabilityMap,
    pub annotations: Vec<Vec<bool>>,
}

/// Per-threshold counts for one image.
pub fn evaluate_image(item: &EvalItem, config: &EvalConfig) -> Result<Vec<ThresholdCounts>> {
    let (h, w) = (item.prediction.height(), item.prediction.width());
    if item.annotations.is_empty() {
        return Err(Error::data("image has no annotations"));
    }
    if let Some(a) = item.annotations.iter().find(|a| a.len() != h * w) {
        return Err(Error::data(format!(
            "annotation with {} pixels for a {h}x{w} prediction",
            a.len()
        )));
    }
    let map = if config.nms {
        nms(&item.prediction)
    } else {
        item.prediction.clone()
    };
    let total_gt: u64 = item
        .annotations
        .iter()
        .map(|a| a.iter().filter(|&&b| b).count() as u64)
        .sum();
    Ok(config
        .thresholds
        .iter()
        .map(|&t| {
            let binary = threshold_and_thin(map.values(), h, w, t);
            let c = correspond(&binary, &item.annotations, h, w, config.tol_frac);
            ThresholdCounts {
                matched_pred: c.matched_pred_count() as u64,
                total_pred: binary.iter().filter(|&&b| b).count() as u64,
                matched_gt: c.matched_gt.iter().sum::<usize>() as u64,
                total_gt,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ods: f64,
    pub ods_threshold: f64,
    pub ois: f64,
    pub ap: f64,
    pub curve: PrCurve,
    /// Counts per image, per threshold.
    pub per_image: Vec<Vec<ThresholdCounts>>,
}

pub fn evaluate_dataset(items: &[EvalItem], config: &EvalConfig) -> Result<EvalReport> {
    config.validate()?;
    if items.is_empty() {
        return Err(Error::data("evaluation set is empty"));
    }
    let per_image = items
        .iter()
        .map(|it| evaluate_image(it, config))
        .collect::<Result<Vec<_>>>()?;
    summarize(per_image, &config.thresholds)
}

/// ODS, OIS, AP and the curve from per-image counts.
///
/// OIS sums each image's counts at its own best threshold (lowest on ties).
/// AP integrates precision over recall with the trapezoid rule: thresholds
/// predicting nothing are dropped, points sharing a recall keep the highest
/// precision, and a zero-recall point with the precision of the
/// lowest-recall point is prepended.
pub fn summarize(per_image: Vec<Vec<ThresholdCounts>>, thresholds: &[f64]) -> Result<EvalReport> {
    let totals: Vec<ThresholdCounts> = (0..thresholds.len())
        .map(|k| per_image.iter().map(|c| c[k]).sum())
        .collect();
    if totals.first().map_or(0, |c| c.total_gt) == 0 {
        return Err(Error::data("no ground-truth edge pixels in the evaluation set"));
    }
    let points: Vec<PrPoint> = thresholds
        .iter()
        .zip(&totals)
        .map(|(&threshold, c)| PrPoint {
            threshold,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
        })
        .collect();
    let (ods_k, ods) = points
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, p)| if p.f1 > best.1 { (k, p.f1) } else { best });
    let best_per_image: ThresholdCounts = per_image
        .iter()
        .map(|counts| {
            *counts
                .iter()
                .fold(None::<&ThresholdCounts>, |best, c| match best {
                    Some(b) if b.f1() >= c.f1() => Some(b),
                    _ => Some(c),
                })
                .expect("at least one threshold")
        })
        .sum();
    let ap = average_precision(
        &totals
            .iter()
            .filter(|c| c.total_pred > 0)
            .map(|c| (c.recall(), c.precision()))
            .collect::<Vec<_>>(),
    );
    Ok(EvalReport {
        ods,
        ods_threshold: thresholds[ods_k],
        ois: best_per_image.f1(),
        ap,
        curve: PrCurve { points },
        per_image,
    })
}

/// Trapezoidal area under precision(recall) for `(recall, precision)`
/// samples; see [`summarize`].
pub fn average_precision(samples: &[(f64, f64)]) -> f64 {
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|later, first| later.0 == first.0);
    let Some(&(_, p0)) = pts.first() else {
        return 0.0;
    };
    let mut area = 0.0;
    let mut prev = (0.0, p0);
    for &(r, p) in &pts {
        area += (r - prev.0) * (p + prev.1) / 2.0;
        prev = (r, p);
    }
    area
}
