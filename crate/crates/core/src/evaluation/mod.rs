//! Scoring rules, walk-forward evaluation and model comparison.

mod metrics;
mod report;
mod walk;

pub use metrics::{
    auc, brier, compare_models, error_by_subject, log_loss, log_loss_clipped, midranks, Comparison, SubjectError,
    CLIP_EPSILON,
};
pub use report::{
    comparison_table, improvement_over_null, metrics_table, probability_distribution, row_losses, subject_table,
    write_csv, ComparisonRow, DistributionRow, ImprovementRow, MetricRow, SubjectRow,
};
pub use walk::{
    by_model, corpus_features, walk_forward, EnsembleStage, FitRecord, ModelSpec, PredictionRow, TrainedSystem,
    WalkForwardConfig, WalkForwardPlan, WalkForwardResult,
};

use crate::corpus::{BillRecord, Chamber};
use crate::inversion::compute_priors;
use crate::Result;

/// The null model: the chamber's enactment rate over congresses before
/// `predicted_congress`.
pub fn null_baseline(history: &[BillRecord], predicted_congress: u32, chamber: Chamber) -> Result<f64> {
    Ok(compute_priors(history, predicted_congress)?.prior(chamber))
}
