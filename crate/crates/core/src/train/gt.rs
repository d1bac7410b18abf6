//! Tri-state edge labels and multi-annotator consensus.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Negative,
    Positive,
    /// Excluded from the loss and from the class balance.
    Ignore,
}

/// Per-pixel labels of one image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriStateGroundTruth {
    height: usize,
    width: usize,
    labels: Vec<Label>,
}

impl TriStateGroundTruth {
    pub fn new(height: usize, width: usize, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::config(format!(
                "{} labels for a {height}x{width} ground truth",
                labels.len()
            )));
        }
        Ok(TriStateGroundTruth {
            height,
            width,
            labels,
        })
    }

    /// Positive where `edge` is set, negative elsewhere.
    pub fn from_binary(height: usize, width: usize, edge: &[bool]) -> Result<Self> {
        Self::new(
            height,
            width,
            edge.iter()
                .map(|&e| if e { Label::Positive } else { Label::Negative })
                .collect(),
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn get(&self, y: usize, x: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn positives(&self) -> usize {
        self.count(Label::Positive)
    }

    pub fn negatives(&self) -> usize {
        self.count(Label::Negative)
    }

    /// `|G₋| / (|G₊| + |G₋|)` over non-ignored pixels, or `None` when every
    /// pixel is ignored.
    pub fn lambda(&self) -> Option<f64> {
        let (pos, neg) = (self.positives(), self.negatives());
        let total = pos + neg;
        (total > 0).then(|| neg as f64 / total as f64)
    }

    /// Positive-pixel mask (used as a binary annotation for evaluation).
    pub fn edge_mask(&self) -> Vec<bool> {
        self.labels.iter().map(|&l| l == Label::Positive).collect()
    }
}

/// Positive where at least `k` annotators mark an edge, negative where none
/// does, ignored in between.
pub fn consensus_gt(annotations: &[Vec<bool>], height: usize, width: usize, k: usize) -> Result<TriStateGroundTruth> {
    if annotations.is_empty() {
        return Err(Error::data("consensus needs at least one annotation"));
    }
    if k == 0 {
        return Err(Error::config("consensus threshold must be at least 1"));
    }
    for (i, a) in annotations.iter().enumerate() {
        if a.len() != height * width {
            return Err(Error::data(format!(
                "annotation {i} has {} pixels, expected {height}x{width}",
                a.len()
            )));
        }
    }
    let labels = (0..height * width)
        .map(|p| {
            let votes = annotations.iter().filter(|a| a[p]).count();
            if votes >= k {
                Label::Positive
            } else if votes == 0 {
                Label::Negative
            } else {
                Label::Ignore
            }
        })
        .collect();
    TriStateGroundTruth::new(height, width, labels)
}
