//! Ground truth, precision/recall over filtered matches, threshold sweeps and
//! confusion-matrix rendering.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VprError};
use crate::features::Image;
use crate::filters::{FilterParams, FinalMatch, WindowFits};
use crate::matching::{ConfusionMatrix, MatchHypothesis};
use crate::numfmt::{serde_sig9, serde_sig9_opt, serde_sig9_vec};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Geotag tolerance used for large road datasets, in metres.
pub const GEO_TOLERANCE_M: f64 = 40.0;

/// Frame tolerance used for hand-labelled frame correspondences.
pub const FRAME_TOLERANCE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTag {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

/// Great-circle distance in metres on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_m(a: GeoTag, b: GeoTag) -> f64 {
    let (lat1, lat2) = (a.lat_deg.to_radians(), b.lat_deg.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon_deg - a.lon_deg).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Reference positions for the testing traverse.
///
/// Entries are indexed by frame and may be missing; judging a reported match
/// for a frame without an entry is a data error.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    /// True training frame per testing frame; matches within `tolerance` frames count.
    Frames {
        train_index: Vec<Option<usize>>,
        tolerance: f64,
    },
    /// Geotags of both traverses; matches within `tolerance_m` metres count.
    Geo {
        train: Vec<Option<GeoTag>>,
        test: Vec<Option<GeoTag>>,
        tolerance_m: f64,
    },
}

impl GroundTruth {
    pub fn frames(train_index: Vec<usize>, tolerance: f64) -> Result<Self> {
        Self::sparse_frames(train_index.into_iter().map(Some).collect(), tolerance)
    }

    pub fn sparse_frames(train_index: Vec<Option<usize>>, tolerance: f64) -> Result<Self> {
        check_tolerance(tolerance)?;
        Ok(GroundTruth::Frames {
            train_index,
            tolerance,
        })
    }

    pub fn geo(
        train: Vec<Option<GeoTag>>,
        test: Vec<Option<GeoTag>>,
        tolerance_m: f64,
    ) -> Result<Self> {
        check_tolerance(tolerance_m)?;
        Ok(GroundTruth::Geo {
            train,
            test,
            tolerance_m,
        })
    }

    /// Whether testing frame `j` has an entry.
    pub fn covers(&self, j: usize) -> bool {
        match self {
            GroundTruth::Frames { train_index, .. } => matches!(train_index.get(j), Some(Some(_))),
            GroundTruth::Geo { test, .. } => matches!(test.get(j), Some(Some(_))),
        }
    }
}

fn check_tolerance(t: f64) -> Result<()> {
    if t > 0.0 {
        Ok(())
    } else {
        Err(VprError::invalid(format!("tolerance must be > 0, got {t}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Judgement {
    TruePositive,
    FalsePositive,
    NotReported,
}

pub fn judge_match(fm: &FinalMatch, gt: &GroundTruth) -> Result<Judgement> {
    let j = fm.test_index;
    let missing = |what: &str, idx: usize| {
        VprError::Data(format!("ground truth has no {what} entry for frame {idx}"))
    };
    if !gt.covers(j) {
        return Err(missing("testing", j));
    }
    if !fm.accepted {
        return Ok(Judgement::NotReported);
    }
    let correct = match gt {
        GroundTruth::Frames {
            train_index,
            tolerance,
        } => {
            let truth = train_index[j].expect("covered");
            (fm.predicted_train_index.abs_diff(truth) as f64) <= *tolerance
        }
        GroundTruth::Geo {
            train,
            test,
            tolerance_m,
        } => {
            let predicted = train
                .get(fm.predicted_train_index)
                .copied()
                .flatten()
                .ok_or_else(|| missing("training", fm.predicted_train_index))?;
            haversine_m(predicted, test[j].expect("covered")) <= *tolerance_m
        }
    };
    Ok(if correct {
        Judgement::TruePositive
    } else {
        Judgement::FalsePositive
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    #[serde(with = "serde_sig9_opt")]
    pub phi: Option<f64>,
    #[serde(with = "serde_sig9")]
    pub precision: f64,
    #[serde(with = "serde_sig9")]
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub reported: usize,
    /// Testing frames with a ground-truth entry.
    pub total: usize,
}

impl PrPoint {
    fn from_counts(tp: usize, fp: usize, total: usize) -> Self {
        let reported = tp + fp;
        PrPoint {
            phi: None,
            precision: if reported == 0 {
                1.0
            } else {
                tp as f64 / reported as f64
            },
            recall: if total == 0 {
                0.0
            } else {
                tp as f64 / total as f64
            },
            tp,
            fp,
            reported,
            total,
        }
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision, self.recall)
    }
}

/// Frames whose ground truth is missing are left out of `total` unless reported,
/// in which case they are a data error.
pub fn precision_recall(final_matches: &[FinalMatch], gt: &GroundTruth) -> Result<PrPoint> {
    let (mut tp, mut fp, mut total) = (0, 0, 0);
    for fm in final_matches {
        if !gt.covers(fm.test_index) {
            if fm.accepted {
                judge_match(fm, gt)?;
            }
            continue;
        }
        total += 1;
        match judge_match(fm, gt)? {
            Judgement::TruePositive => tp += 1,
            Judgement::FalsePositive => fp += 1,
            Judgement::NotReported => {}
        }
    }
    Ok(PrPoint::from_counts(tp, fp, total))
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Parameters echoed into a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub epsilon: usize,
    pub window: usize,
    #[serde(with = "serde_sig9")]
    pub sigma: f64,
    #[serde(with = "serde_sig9_vec")]
    pub phi_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub params: ReportParams,
    pub curve: Vec<PrPoint>,
    #[serde(with = "serde_sig9")]
    pub max_recall_at_full_precision: f64,
    #[serde(with = "serde_sig9")]
    pub best_f1: f64,
}

impl EvalReport {
    pub fn from_curve(params: ReportParams, curve: Vec<PrPoint>) -> Self {
        let max_recall_at_full_precision = curve
            .iter()
            .filter(|p| p.precision == 1.0)
            .map(|p| p.recall)
            .fold(0.0, f64::max);
        let best_f1 = curve.iter().map(PrPoint::f1).fold(0.0, f64::max);
        Self {
            params,
            curve,
            max_recall_at_full_precision,
            best_f1,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn check_phi_values(phi_values: &[f64]) -> Result<()> {
    if phi_values.is_empty() {
        return Err(VprError::invalid("phi sweep needs at least one value"));
    }
    if phi_values.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(VprError::invalid("phi values must be finite and >= 0"));
    }
    if phi_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(VprError::invalid("phi values must be ascending"));
    }
    Ok(())
}

/// Evaluates the sequential filter at each `phi`, keeping the spatial flags of
/// `hypotheses` fixed. Line fits are computed once and shared by all points.
pub fn sweep_phi(
    hypotheses: &[MatchHypothesis],
    base: &FilterParams,
    train_len: usize,
    gt: &GroundTruth,
    phi_values: &[f64],
) -> Result<EvalReport> {
    check_phi_values(phi_values)?;
    base.validate()?;
    let fits = WindowFits::new(hypotheses, base.window, train_len)?;
    let curve = phi_values
        .par_iter()
        .map(|&phi| {
            let finals = fits.finalize(base.sigma, phi);
            let mut point = precision_recall(&finals, gt)?;
            point.phi = Some(phi);
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;
    let params = ReportParams {
        epsilon: base.epsilon,
        window: base.window,
        sigma: base.sigma,
        phi_values: phi_values.to_vec(),
    };
    Ok(EvalReport::from_curve(params, curve))
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub fn phi_range(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || lo.is_nan() || hi.is_nan() || lo > hi || lo < 0.0 {
        return Err(VprError::invalid(format!(
            "bad phi range {lo}..={hi} with {count} steps"
        )));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|k| if k + 1 == count { hi } else { lo + step * k as f64 })
        .collect())
}

/// One pixel per entry, rows = training frames; low distances render bright.
pub fn confusion_to_image(cm: &ConfusionMatrix) -> Image {
    let (lo, hi) = cm.range();
    let (lo, hi) = (lo as f64, hi as f64);
    let pixels = cm
        .as_slice()
        .iter()
        .map(|&d| {
            if hi == lo {
                0
            } else {
                (255.0 * (1.0 - (d as f64 - lo) / (hi - lo))).round() as u8
            }
        })
        .collect();
    Image::gray(cm.test_len(), cm.train_len(), pixels).expect("sized from matrix")
}
