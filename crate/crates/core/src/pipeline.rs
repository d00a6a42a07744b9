//! End-to-end composition of matching, filtering and evaluation.

use crate::error::Result;
use crate::eval::{sweep_phi, EvalReport, GroundTruth};
use crate::features::FeatureSet;
use crate::filters::{filter_matches, spatial_continuity, FilterParams, FinalMatch};
use crate::matching::{best_matches, build_confusion_matrix_with, ConfusionMatrix, MatchHypothesis, Metric};

/// Best matches of every testing frame with spatial plausibility flags set.
pub fn hypotheses(cm: &ConfusionMatrix, params: &FilterParams) -> Vec<MatchHypothesis> {
    spatial_continuity(&best_matches(cm), params.epsilon, params.window)
}

/// Filtered matches at `params.phi`.
pub fn final_matches(cm: &ConfusionMatrix, params: &FilterParams) -> Result<Vec<FinalMatch>> {
    filter_matches(&best_matches(cm), params, cm.train_len())
}

/// Reports every frame at its raw best match, with no filtering.
pub fn unfiltered(matches: &[MatchHypothesis]) -> Vec<FinalMatch> {
    matches
        .iter()
        .map(|m| FinalMatch {
            test_index: m.test_index,
            predicted_train_index: m.train_index,
            fit: None,
            plausible: m.plausible,
            accepted: true,
            distance: m.distance,
        })
        .collect()
}

/// Sweeps `phi_values` over a precomputed confusion matrix.
pub fn sweep_matrix(
    cm: &ConfusionMatrix,
    params: &FilterParams,
    gt: &GroundTruth,
    phi_values: &[f64],
) -> Result<EvalReport> {
    sweep_phi(&hypotheses(cm, params), params, cm.train_len(), gt, phi_values)
}

/// Matrix construction through evaluation in one call.
pub fn run(
    train: &FeatureSet,
    test: &FeatureSet,
    metric: Metric,
    params: &FilterParams,
    gt: &GroundTruth,
    phi_values: &[f64],
) -> Result<EvalReport> {
    let cm = build_confusion_matrix_with(train, test, metric)?;
    sweep_matrix(&cm, params, gt, phi_values)
}
