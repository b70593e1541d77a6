//! Threshold-swept precision/recall metrics, location-prior baselines and
//! per-scene evaluation reports.

mod baselines;
mod metrics;
mod plot;
mod report;

pub use baselines::{aop_baseline, center_prior, constant_map, point_to_mask, Baseline, POINT_MASK_FLOOR};
pub use metrics::{
    average_precision, default_thresholds, exact_thresholds, max_f_score, pr_curve, pr_curve_with, Aggregation,
    PrCurve,
};
pub use plot::pr_plot_svg;
pub use report::{evaluate_dataset, EvalReport, SceneResult};
