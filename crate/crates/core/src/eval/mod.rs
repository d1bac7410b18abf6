//! Boundary benchmark: suppression, thinning, matching and F-measures.

pub mod matching;
pub mod metrics;
pub mod nms;
pub mod plot;
pub mod thin;

pub use matching::{correspond, hopcroft_karp, max_distance, Correspondence};
pub use metrics::{
    average_precision, evaluate_dataset, evaluate_image, f1, summarize, uniform_thresholds, EvalConfig, EvalItem,
    EvalReport, PrCurve, PrPoint, ThresholdCounts,
};
pub use nms::nms;
pub use plot::{emit_pr_plot, pr_csv, pr_svg};
pub use thin::{thin, threshold, threshold_and_thin};
