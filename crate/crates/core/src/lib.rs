//! Visual place recognition by confusion-matrix matching of per-frame
//! descriptors between a training and a testing traverse.
//!
//! The pipeline:
//!
//! 1. [`features`]: preprocess images, build pixel descriptors, or load
//!    externally extracted CNN layer activations as a [`FeatureSet`].
//! 2. [`matching`]: fill the training-by-testing [`ConfusionMatrix`] and take
//!    the best training frame for every testing frame.
//! 3. [`filters`]: keep hypotheses whose best-match indices move smoothly
//!    (spatial continuity) and whose local line fit has the expected slope
//!    (sequential filter).
//! 4. [`eval`]: score the accepted matches against ground truth and sweep the
//!    slope tolerance into a precision-recall curve.
//!
//! [`harness`] provides synthetic traverses with exact ground truth, a
//! brute-force reference pipeline and a matching benchmark.

pub mod error;
pub mod eval;
pub mod features;
pub mod filters;
pub mod harness;
pub mod io;
pub mod matching;
pub mod numfmt;
pub mod pipeline;

pub use error::{FormatError, Result, VprError};
pub use eval::{
    f1, haversine_m, judge_match, precision_recall, sweep_phi, EvalReport, GeoTag, GroundTruth,
    Judgement, PrPoint, ReportParams,
};
pub use features::{pixel_descriptor, preprocess_image, Dtype, FeatureSet, FeatureVector, Image};
pub use filters::{
    fit_sequence, sequential_filter, spatial_continuity, FilterParams, FinalMatch, LinearFit,
};
pub use matching::{
    best_matches, build_confusion_matrix, build_confusion_matrix_with, euclidean_distance,
    sad_distance, sad_offset_distance, ConfusionMatrix, MatchHypothesis, Metric,
};
