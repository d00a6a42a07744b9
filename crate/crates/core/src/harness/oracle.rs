//! Literal re-evaluation of the whole pipeline with naive loops.
//!
//! Nothing here calls into the matching, filtering or evaluation modules;
//! only the data types are shared.

use crate::error::{Result, VprError};
use crate::eval::{EvalReport, GeoTag, GroundTruth, PrPoint, ReportParams};
use crate::features::FeatureSet;
use crate::filters::FilterParams;

const ORACLE_MAX_FRAMES: usize = 500;

fn oracle_distance(a: &[f32], b: &[f32]) -> f32 {
    let mut sum = 0.0f64;
    for k in 0..a.len() {
        let d = a[k] as f64 - b[k] as f64;
        sum += d * d;
    }
    sum.sqrt() as f32
}

/// `(A*x + B) / D` rounded half away from zero, where `a = A/D`, `b = B/D` solve
/// the 2x2 normal equations.
struct CramerFit {
    a_num: i128,
    b_num: i128,
    det: i128,
}

fn cramer_fit(xs: &[i128], ys: &[i128]) -> CramerFit {
    let n = xs.len() as i128;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0i128, 0i128, 0i128, 0i128);
    for k in 0..xs.len() {
        sx += xs[k];
        sy += ys[k];
        sxx += xs[k] * xs[k];
        sxy += xs[k] * ys[k];
    }
    CramerFit {
        a_num: n * sxy - sx * sy,
        b_num: sxx * sy - sx * sxy,
        det: n * sxx - sx * sx,
    }
}

fn round_half_away(num: i128, den: i128) -> i128 {
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    let q = num / den;
    let r = num % den;
    if 2 * r.abs() >= den {
        q + num.signum()
    } else {
        q
    }
}

fn oracle_haversine(a: GeoTag, b: GeoTag) -> f64 {
    let r = 6_371_000.0f64;
    let p1 = a.lat_deg * std::f64::consts::PI / 180.0;
    let p2 = b.lat_deg * std::f64::consts::PI / 180.0;
    let dp = p2 - p1;
    let dl = (b.lon_deg - a.lon_deg) * std::f64::consts::PI / 180.0;
    let h = (dp / 2.0).sin() * (dp / 2.0).sin() + p1.cos() * p2.cos() * (dl / 2.0).sin() * (dl / 2.0).sin();
    2.0 * r * h.sqrt().min(1.0).asin()
}

/// Brute-force reference for the L2 pipeline, for small traverses (at most 500 frames each).
pub fn oracle_pipeline(
    train: &FeatureSet,
    test: &FeatureSet,
    params: &FilterParams,
    gt: &GroundTruth,
    phi_values: &[f64],
) -> Result<EvalReport> {
    let rows = train.len();
    let cols = test.len();
    if rows == 0 || cols == 0 || rows > ORACLE_MAX_FRAMES || cols > ORACLE_MAX_FRAMES {
        return Err(VprError::invalid(format!(
            "oracle handles 1..={ORACLE_MAX_FRAMES} frames per traverse, got {rows}x{cols}"
        )));
    }
    if train.dim() != test.dim() || phi_values.is_empty() {
        return Err(VprError::invalid("oracle inputs inconsistent"));
    }
    let d = params.window;
    let eps = params.epsilon;

    let mut m = vec![0usize; cols];
    for j in 0..cols {
        let mut best = f32::INFINITY;
        for i in 0..rows {
            let v = oracle_distance(train.frame(i).as_slice(), test.frame(j).as_slice());
            if v < best {
                best = v;
                m[j] = i;
            }
        }
    }

    let mut plausible = vec![false; cols];
    for j in 0..cols {
        if j < d {
            continue;
        }
        let mut ok = true;
        for u in (j - d + 1)..=j {
            let gap = m[u - 1].abs_diff(m[u]);
            if gap > eps {
                ok = false;
            }
        }
        plausible[j] = ok;
    }

    let mut curve = Vec::new();
    for &phi in phi_values {
        let (mut tp, mut fp, mut total) = (0usize, 0usize, 0usize);
        for j in 0..cols {
            let covered = match gt {
                GroundTruth::Frames { train_index, .. } => train_index.get(j).copied().flatten().is_some(),
                GroundTruth::Geo { test, .. } => test.get(j).copied().flatten().is_some(),
            };
            let mut accepted = false;
            let mut predicted = 0usize;
            if j >= d {
                let xs: Vec<i128> = (j - d..=j).map(|x| x as i128).collect();
                let ys: Vec<i128> = (j - d..=j).map(|x| m[x] as i128).collect();
                let fit = cramer_fit(&xs, &ys);
                let slope = fit.a_num as f64 / fit.det as f64;
                let f = round_half_away(fit.a_num * j as i128 + fit.b_num, fit.det);
                predicted = f.max(0).min(rows as i128 - 1) as usize;
                accepted = plausible[j] && (slope.atan() - params.sigma).abs() <= phi;
            }
            if !covered {
                if accepted {
                    return Err(VprError::Data(format!("no ground truth for frame {j}")));
                }
                continue;
            }
            total += 1;
            if !accepted {
                continue;
            }
            let correct = match gt {
                GroundTruth::Frames { train_index, tolerance } => {
                    let t = train_index[j].unwrap();
                    let diff = predicted.abs_diff(t);
                    diff as f64 <= *tolerance
                }
                GroundTruth::Geo { train, test, tolerance_m } => {
                    let p = train
                        .get(predicted)
                        .copied()
                        .flatten()
                        .ok_or_else(|| VprError::Data(format!("no geotag for training frame {predicted}")))?;
                    oracle_haversine(p, test[j].unwrap()) <= *tolerance_m
                }
            };
            if correct {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let reported = tp + fp;
        curve.push(PrPoint {
            phi: Some(phi),
            precision: if reported == 0 { 1.0 } else { tp as f64 / reported as f64 },
            recall: if total == 0 { 0.0 } else { tp as f64 / total as f64 },
            tp,
            fp,
            reported,
            total,
        });
    }

    let mut max_recall = 0.0f64;
    let mut best_f1 = 0.0f64;
    for p in &curve {
        if p.precision == 1.0 && p.recall > max_recall {
            max_recall = p.recall;
        }
        let f = if p.precision + p.recall > 0.0 {
            2.0 * p.precision * p.recall / (p.precision + p.recall)
        } else {
            0.0
        };
        if f > best_f1 {
            best_f1 = f;
        }
    }
    Ok(EvalReport {
        params: ReportParams {
            epsilon: eps,
            window: d,
            sigma: params.sigma,
            phi_values: phi_values.to_vec(),
        },
        curve,
        max_recall_at_full_precision: max_recall,
        best_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_helper() {
        assert_eq!(round_half_away(5, 2), 3);
        assert_eq!(round_half_away(-5, 2), -3);
        assert_eq!(round_half_away(5, -2), -3);
        assert_eq!(round_half_away(7, 3), 2);
        assert_eq!(round_half_away(8, 3), 3);
    }

    #[test]
    fn cramer_exact_line() {
        let f = cramer_fit(&[0, 1, 2, 3], &[7, 8, 9, 10]);
        assert_eq!(f.a_num, f.det);
        assert_eq!(f.b_num, 7 * f.det);
    }

    #[test]
    fn refuses_large_instances() {
        use crate::features::FeatureVector;
        let frames = (0..501).map(|_| FeatureVector::new(vec![0.0]).unwrap()).collect();
        let big = FeatureSet::from_frames(0, frames, "").unwrap();
        let gt = GroundTruth::frames(vec![0; 501], 1.0).unwrap();
        assert!(oracle_pipeline(&big, &big, &FilterParams::default(), &gt, &[0.1]).is_err());
    }
}
