//! Spatial continuity and sequential (linear-fit) filtering of best-match hypotheses.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VprError};
use crate::matching::MatchHypothesis;

pub const DEFAULT_EPSILON: usize = 3;
pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_SIGMA: f64 = FRAC_PI_4;
pub const DEFAULT_PHI: f64 = 0.1;

/// Thresholds shared by the two filters.
///
/// `sigma` and `phi` are angles of the match line in (training index,
/// testing index) space: a slope of 1 is `sigma = pi/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    /// Largest allowed jump between consecutive best-match indices, in frames.
    pub epsilon: usize,
    /// Number of consecutive differences checked, and the fit window is `window + 1` frames.
    pub window: usize,
    pub sigma: f64,
    pub phi: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            window: DEFAULT_WINDOW,
            sigma: DEFAULT_SIGMA,
            phi: DEFAULT_PHI,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(VprError::invalid("window must be >= 1"));
        }
        if !(self.phi >= 0.0 && self.phi.is_finite()) {
            return Err(VprError::invalid(format!("phi must be >= 0, got {}", self.phi)));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(self.sigma > -half_pi && self.sigma < half_pi) {
            return Err(VprError::invalid(format!(
                "sigma must lie in (-pi/2, pi/2), got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn with_phi(self, phi: f64) -> Self {
        Self { phi, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Training frames advanced per testing frame.
    pub alpha: f64,
    pub beta: f64,
    pub residual_rms: f64,
}

impl LinearFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.alpha * x + self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalMatch {
    pub test_index: usize,
    /// Fitted line at this frame; the raw best match for frames without a full window.
    pub predicted_train_index: usize,
    /// `None` for the leading frames that have no complete window.
    pub fit: Option<LinearFit>,
    pub plausible: bool,
    pub accepted: bool,
    /// Distance of the raw best match.
    pub distance: f32,
}

/// Marks frame `j` plausible when `j >= window` and each of the `window`
/// consecutive best-match jumps ending at `j` is at most `epsilon` frames.
pub fn spatial_continuity(
    matches: &[MatchHypothesis],
    epsilon: usize,
    window: usize,
) -> Vec<MatchHypothesis> {
    // ok[u] holds for the jump from u-1 to u
    let ok: Vec<bool> = (0..matches.len())
        .map(|u| u > 0 && matches[u - 1].train_index.abs_diff(matches[u].train_index) <= epsilon)
        .collect();
    let mut run = 0usize;
    matches
        .iter()
        .zip(&ok)
        .enumerate()
        .map(|(j, (m, &step_ok))| {
            run = if step_ok { run + 1 } else { 0 };
            MatchHypothesis {
                plausible: window >= 1 && j >= window && run >= window,
                ..*m
            }
        })
        .collect()
}

/// Ordinary least-squares line through `(x, y)` points.
pub fn fit_sequence(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(VprError::invalid(format!(
            "line fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        let dx = x - x_mean;
        (sxx + dx * dx, sxy + dx * (y - y_mean))
    });
    if sxx == 0.0 {
        return Err(VprError::invalid("line fit needs at least two distinct x values"));
    }
    let alpha = sxy / sxx;
    let beta = y_mean - alpha * x_mean;
    let sse: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (alpha * x + beta);
            r * r
        })
        .sum();
    Ok(LinearFit {
        alpha,
        beta,
        residual_rms: (sse / n).sqrt(),
    })
}

/// Least-squares line through integer points, kept as exact sums so the
/// prediction at any integer abscissa can be rounded without float error.
#[derive(Debug, Clone, Copy, PartialEq)]
struct IndexFit {
    n: i128,
    sum_x: i128,
    sum_y: i128,
    /// `n * Sxy - Sx * Sy`
    slope_num: i128,
    /// `n * Sxx - Sx^2`, always > 0
    slope_den: i128,
    fit: LinearFit,
}

impl IndexFit {
    fn new(points: impl Iterator<Item = (usize, usize)> + Clone) -> Result<Self> {
        let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
        for (x, y) in points.clone() {
            let (x, y) = (x as i128, y as i128);
            n += 1;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        if n < 2 {
            return Err(VprError::invalid(format!("line fit needs at least 2 points, got {n}")));
        }
        let slope_num = n * sxy - sx * sy;
        let slope_den = n * sxx - sx * sx;
        if slope_den == 0 {
            return Err(VprError::invalid("line fit needs at least two distinct x values"));
        }
        let alpha = slope_num as f64 / slope_den as f64;
        let beta = (sy as f64 - alpha * sx as f64) / n as f64;
        let sse: f64 = points
            .map(|(x, y)| {
                let r = y as f64 - (alpha * x as f64 + beta);
                r * r
            })
            .sum();
        Ok(Self {
            n,
            sum_x: sx,
            sum_y: sy,
            slope_num,
            slope_den,
            fit: LinearFit {
                alpha,
                beta,
                residual_rms: (sse / n as f64).sqrt(),
            },
        })
    }

    /// The fitted line at `x`, rounded half away from zero.
    fn predict_rounded(&self, x: usize) -> i128 {
        // y(x) = Sy/n + (num/den) * (x - Sx/n) = (Sy*den + num*(n*x - Sx)) / (n*den)
        let p = self.sum_y * self.slope_den + self.slope_num * (self.n * x as i128 - self.sum_x);
        let q = self.n * self.slope_den;
        round_ratio(p, q)
    }
}

/// `p / q` rounded half away from zero, for `q > 0`.
fn round_ratio(p: i128, q: i128) -> i128 {
    debug_assert!(q > 0);
    if p >= 0 {
        (2 * p + q).div_euclid(2 * q)
    } else {
        -(2 * -p + q).div_euclid(2 * q)
    }
}

fn index_window(matches: &[MatchHypothesis], j: usize, window: usize) -> Result<IndexFit> {
    if j < window || j >= matches.len() {
        return Err(VprError::invalid(format!(
            "no complete window of {} frames ends at frame {j}",
            window + 1
        )));
    }
    IndexFit::new(
        matches[j - window..=j]
            .iter()
            .map(|m| (m.test_index, m.train_index)),
    )
}

/// Fits the best-match indices of frames `j - window ..= j`.
pub fn fit_window(matches: &[MatchHypothesis], j: usize, window: usize) -> Result<LinearFit> {
    index_window(matches, j, window).map(|f| f.fit)
}

/// Whether a fitted slope lies within `phi` of the reference angle `sigma`.
pub fn slope_within(fit: &LinearFit, sigma: f64, phi: f64) -> bool {
    (fit.alpha.atan() - sigma).abs() <= phi
}

/// Per-frame line fits, computed once and reused across a threshold sweep.
#[derive(Debug, Clone)]
pub struct WindowFits {
    matches: Vec<MatchHypothesis>,
    fits: Vec<Option<IndexFit>>,
    train_len: usize,
}

impl WindowFits {
    pub fn new(matches: &[MatchHypothesis], window: usize, train_len: usize) -> Result<Self> {
        if window < 1 {
            return Err(VprError::invalid("window must be >= 1"));
        }
        if train_len == 0 {
            return Err(VprError::invalid("training traverse is empty"));
        }
        let fits = (0..matches.len())
            .map(|j| (j >= window).then(|| index_window(matches, j, window)).transpose())
            .collect::<Result<_>>()?;
        Ok(Self {
            matches: matches.to_vec(),
            fits,
            train_len,
        })
    }

    /// Applies the slope gate with the given `sigma`/`phi`.
    pub fn finalize(&self, sigma: f64, phi: f64) -> Vec<FinalMatch> {
        let last = (self.train_len - 1) as i128;
        self.matches
            .iter()
            .zip(&self.fits)
            .map(|(m, fit)| {
                let (predicted, accepted) = match fit {
                    Some(f) => {
                        let predicted = f.predict_rounded(m.test_index).clamp(0, last);
                        (predicted as usize, m.plausible && slope_within(&f.fit, sigma, phi))
                    }
                    None => (m.train_index, false),
                };
                FinalMatch {
                    test_index: m.test_index,
                    predicted_train_index: predicted,
                    fit: fit.map(|f| f.fit),
                    plausible: m.plausible,
                    accepted,
                    distance: m.distance,
                }
            })
            .collect()
    }
}

/// Fits every complete window and accepts frame `j` when it is plausible and
/// the fitted slope angle is within `phi` of `sigma`. The prediction is the
/// fitted line at `j`, rounded and clamped to `0..train_len`.
pub fn sequential_filter(
    matches: &[MatchHypothesis],
    params: &FilterParams,
    train_len: usize,
) -> Result<Vec<FinalMatch>> {
    params.validate()?;
    Ok(WindowFits::new(matches, params.window, train_len)?.finalize(params.sigma, params.phi))
}

/// Both filters in sequence.
pub fn filter_matches(
    matches: &[MatchHypothesis],
    params: &FilterParams,
    train_len: usize,
) -> Result<Vec<FinalMatch>> {
    params.validate()?;
    let flagged = spatial_continuity(matches, params.epsilon, params.window);
    sequential_filter(&flagged, params, train_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hyps(m: &[usize]) -> Vec<MatchHypothesis> {
        m.iter()
            .enumerate()
            .map(|(j, &i)| MatchHypothesis {
                test_index: j,
                train_index: i,
                distance: 0.0,
                plausible: false,
            })
            .collect()
    }

    fn plausible_flags(m: &[usize], eps: usize, d: usize) -> Vec<bool> {
        spatial_continuity(&hyps(m), eps, d).iter().map(|h| h.plausible).collect()
    }

    fn definition(m: &[usize], eps: usize, d: usize, j: usize) -> bool {
        j >= d && (j + 1 - d..=j).all(|u| m[u - 1].abs_diff(m[u]) <= eps)
    }

    #[test]
    fn table_defaults() {
        let p = FilterParams::default();
        assert_eq!((p.epsilon, p.window), (3, 5));
        assert_eq!(p.sigma, std::f64::consts::PI / 4.0);
    }

    #[test]
    fn continuity_examples() {
        assert!(plausible_flags(&[10, 11, 12, 13, 14, 15], 3, 5)[5]);
        assert!(!plausible_flags(&[10, 11, 50, 13, 14, 15], 3, 5)[5]);
        // leading frames never have a full window
        assert!(plausible_flags(&[10, 11, 12, 13, 14, 15], 3, 5)[..5].iter().all(|p| !p));
    }

    #[test]
    fn continuity_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let len = rng.gen_range(1..40);
            let eps = rng.gen_range(0..5);
            let d = rng.gen_range(1..8);
            let mut m = vec![rng.gen_range(0..50usize)];
            for _ in 1..len {
                let prev = *m.last().unwrap() as i64;
                m.push((prev + rng.gen_range(-6..=6)).max(0) as usize);
            }
            let flags = plausible_flags(&m, eps, d);
            for j in 0..len {
                assert_eq!(flags[j], definition(&m, eps, d, j), "m={m:?} eps={eps} d={d} j={j}");
            }
        }
    }

    #[test]
    fn fit_examples() {
        let line: Vec<_> = (0..6).map(|x| (x as f64, 7.0 + x as f64)).collect();
        let fit = fit_sequence(&line).unwrap();
        assert_eq!((fit.alpha, fit.beta, fit.residual_rms), (1.0, 7.0, 0.0));
        let flat: Vec<_> = (0..6).map(|x| (x as f64, 4.0)).collect();
        let fit = fit_sequence(&flat).unwrap();
        assert_eq!((fit.alpha, fit.beta), (0.0, 4.0));
        assert!(fit_sequence(&[(1.0, 1.0)]).is_err());
        assert!(fit_sequence(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn fit_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let n = rng.gen_range(2..12);
            let x0 = rng.gen_range(0..1000) as f64;
            let pts: Vec<_> = (0..n)
                .map(|k| {
                    let x = x0 + k as f64;
                    (x, 2.0 * x + 1.0 + rng.gen_range(-3.0..3.0))
                })
                .collect();
            // [n  Sx ] [b]   [Sy ]
            // [Sx Sxx] [a] = [Sxy], solved in coordinates shifted by x0 for conditioning
            let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
            for &(x, y) in &pts {
                let x = x - x0;
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            let nf = n as f64;
            let det = nf * sxx - sx * sx;
            let a = (nf * sxy - sx * sy) / det;
            let b = (sxx * sy - sx * sxy) / det - a * x0;
            let fit = fit_sequence(&pts).unwrap();
            assert!((fit.alpha - a).abs() <= 1e-9 * a.abs().max(1.0), "{} vs {a}", fit.alpha);
            assert!((fit.beta - b).abs() <= 1e-9 * b.abs().max(1.0), "{} vs {b}", fit.beta);
        }
    }

    #[test]
    fn slope_gate_examples() {
        let aligned = hyps(&[7, 8, 9, 10, 11, 12]);
        let p = FilterParams::default();
        let out = filter_matches(&aligned, &p, 100).unwrap();
        assert!(out[5].accepted);
        assert_eq!(out[5].predicted_train_index, 12);
        assert_eq!(out[5].fit.unwrap().alpha, 1.0);
        assert!(out[..5].iter().all(|f| !f.accepted && f.fit.is_none()));

        let mut flat = hyps(&[4, 4, 4, 4, 4, 4]);
        flat.iter_mut().for_each(|h| h.plausible = true);
        let out = sequential_filter(&flat, &p, 100).unwrap();
        assert!(!out[5].accepted);
        assert_eq!(out[5].fit.unwrap().alpha, 0.0);
    }

    #[test]
    fn exact_rounding_of_predictions() {
        assert_eq!(round_ratio(5, 2), 3);
        assert_eq!(round_ratio(-5, 2), -3);
        assert_eq!(round_ratio(4, 3), 1);
        assert_eq!(round_ratio(-4, 3), -1);
        assert_eq!(round_ratio(0, 7), 0);
        // slope 27/105, value 8/7 at x = 5
        let f = index_window(&hyps(&[0, 0, 0, 1, 1, 1]), 5, 5).unwrap();
        assert_eq!((f.slope_num, f.slope_den), (27, 105));
        assert_eq!(f.predict_rounded(5), 1);
        // y = x/2 through (0,0),(2,1): ties at odd x round up
        let half = IndexFit::new([(0usize, 0usize), (2, 1)].into_iter()).unwrap();
        assert_eq!(half.predict_rounded(1), 1);
        assert_eq!(half.predict_rounded(3), 2);
        assert_eq!(half.predict_rounded(4), 2);
    }

    #[test]
    fn prediction_is_clamped() {
        let out = filter_matches(&hyps(&[7, 8, 9, 10, 11, 12]), &FilterParams::default(), 10).unwrap();
        assert_eq!(out[5].predicted_train_index, 9);
    }

    #[test]
    fn acceptance_is_conjunction_of_predicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let len = rng.gen_range(6..30);
            let slope = rng.gen_range(0.0..3.0);
            let m: Vec<usize> = (0..len)
                .map(|j| (slope * j as f64 + rng.gen_range(0.0..4.0)) as usize)
                .collect();
            let mut h = hyps(&m);
            h.iter_mut().for_each(|x| x.plausible = rng.gen_bool(0.7));
            let p = FilterParams {
                phi: rng.gen_range(0.0..0.6),
                ..FilterParams::default()
            };
            let out = sequential_filter(&h, &p, 200).unwrap();
            for j in 0..len {
                let expected = j >= p.window && h[j].plausible && {
                    let f = fit_window(&h, j, p.window).unwrap();
                    (f.alpha.atan() - p.sigma).abs() <= p.phi
                };
                assert_eq!(out[j].accepted, expected);
            }
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let h = hyps(&[1, 2, 3]);
        for p in [
            FilterParams { window: 0, ..Default::default() },
            FilterParams { phi: -0.1, ..Default::default() },
            FilterParams { sigma: 2.0, ..Default::default() },
        ] {
            assert!(sequential_filter(&h, &p, 10).is_err());
        }
    }
}
