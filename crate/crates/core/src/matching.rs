//! Pairwise distances, the training-by-testing confusion matrix and
//! per-column best-match extraction.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VprError};
use crate::features::{pixel_descriptor, FeatureSet, Image};

/// Horizontal search radius for offset SAD, in descriptor columns.
pub const DEFAULT_MAX_OFFSET: usize = 4;

const LANES: usize = 8;

fn check_dims(a: &[f32], b: &[f32]) -> Result<()> {
    if a.len() != b.len() {
        return Err(VprError::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Squared Euclidean distance with a 64-bit accumulator split over independent lanes.
#[inline]
pub fn squared_l2(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..LANES {
            let d = x[k] as f64 - y[k] as f64;
            acc[k] += d * d;
        }
    }
    for (k, (x, y)) in ra.iter().zip(rb).enumerate() {
        let d = *x as f64 - *y as f64;
        acc[k] += d * d;
    }
    acc.iter().sum()
}

#[inline]
fn l2_unchecked(a: &[f32], b: &[f32]) -> f32 {
    squared_l2(a, b).sqrt() as f32
}

pub fn euclidean_distance(a: &[f32], b: &[f32]) -> Result<f32> {
    check_dims(a, b)?;
    Ok(l2_unchecked(a, b))
}

fn sad_unchecked(a: &[f32], b: &[f32]) -> f32 {
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .sum();
    (sum / a.len() as f64) as f32
}

/// Mean absolute difference between two equally sized descriptors.
pub fn sad_distance(a: &[f32], b: &[f32]) -> Result<f32> {
    check_dims(a, b)?;
    if a.is_empty() {
        return Err(VprError::invalid("SAD of empty vectors"));
    }
    Ok(sad_unchecked(a, b))
}

fn sad_offset_unchecked(a: &[f32], b: &[f32], side: usize, max_offset: usize) -> f32 {
    let mut best = f64::INFINITY;
    let radius = max_offset as isize;
    for offset in -radius..=radius {
        // column x of `a` is compared with column x + offset of `b`
        let x_start = (-offset).max(0) as usize;
        let x_end = (side as isize - offset).min(side as isize) as usize;
        let mut sum = 0.0f64;
        for row in 0..side {
            let ra = &a[row * side..(row + 1) * side];
            let rb = &b[row * side..(row + 1) * side];
            for x in x_start..x_end {
                let xb = (x as isize + offset) as usize;
                sum += (ra[x] as f64 - rb[xb] as f64).abs();
            }
        }
        let mean = sum / (side * (x_end - x_start)) as f64;
        if mean < best {
            best = mean;
        }
    }
    best as f32
}

fn check_offset_args(dim_a: usize, dim_b: usize, side: usize, max_offset: usize) -> Result<()> {
    if side == 0 || dim_a != side * side || dim_b != side * side {
        return Err(VprError::invalid(format!(
            "offset SAD needs two {side}x{side} descriptors, got dimensions {dim_a} and {dim_b}"
        )));
    }
    if max_offset >= side {
        return Err(VprError::invalid(format!(
            "max_offset {max_offset} must be smaller than descriptor side {side}"
        )));
    }
    Ok(())
}

/// Minimum mean absolute difference over horizontal shifts of up to `max_offset`
/// columns between two row-major `side`x`side` descriptors, each shift averaged
/// over its overlapping columns only.
pub fn sad_offset_descriptors(a: &[f32], b: &[f32], side: usize, max_offset: usize) -> Result<f32> {
    check_offset_args(a.len(), b.len(), side, max_offset)?;
    Ok(sad_offset_unchecked(a, b, side, max_offset))
}

/// Offset SAD between two preprocessed images, compared at `side`x`side` resolution.
pub fn sad_offset_distance(a: &Image, b: &Image, side: usize, max_offset: usize) -> Result<f32> {
    if (a.width(), a.height(), a.channels()) != (b.width(), b.height(), b.channels()) {
        return Err(VprError::invalid(format!(
            "image size mismatch: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if max_offset >= side {
        return Err(VprError::invalid(format!(
            "max_offset {max_offset} must be smaller than descriptor side {side}"
        )));
    }
    let da = pixel_descriptor(a, side)?;
    let db = pixel_descriptor(b, side)?;
    sad_offset_descriptors(da.as_slice(), db.as_slice(), side, max_offset)
}

/// Frame comparator used to fill a confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Metric {
    L2,
    Sad,
    /// Offset SAD over square descriptors; the side is inferred from the dimension.
    SadOffset { max_offset: usize },
}

impl Metric {
    fn kernel(self, dim: usize) -> Result<impl Fn(&[f32], &[f32]) -> f32 + Sync> {
        let side = match self {
            Metric::SadOffset { max_offset } => {
                let side = (dim as f64).sqrt().round() as usize;
                check_offset_args(dim, dim, side, max_offset)?;
                side
            }
            _ => 0,
        };
        Ok(move |a: &[f32], b: &[f32]| match self {
            Metric::L2 => l2_unchecked(a, b),
            Metric::Sad => sad_unchecked(a, b),
            Metric::SadOffset { max_offset } => sad_offset_unchecked(a, b, side, max_offset),
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::L2 => f.write_str("l2"),
            Metric::Sad => f.write_str("sad"),
            Metric::SadOffset { max_offset } => write!(f, "sad-offset:{max_offset}"),
        }
    }
}

impl FromStr for Metric {
    type Err = VprError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(Metric::L2),
            "sad" => Ok(Metric::Sad),
            "sad-offset" => Ok(Metric::SadOffset {
                max_offset: DEFAULT_MAX_OFFSET,
            }),
            _ => match s.strip_prefix("sad-offset:").map(str::parse) {
                Some(Ok(max_offset)) => Ok(Metric::SadOffset { max_offset }),
                _ => Err(VprError::invalid(format!("unknown metric {s:?}"))),
            },
        }
    }
}

/// Distances between every training frame (row) and testing frame (column), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    rows: usize,
    cols: usize,
    distances: Vec<f32>,
}

impl ConfusionMatrix {
    pub fn new(rows: usize, cols: usize, distances: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(VprError::invalid("confusion matrix must be non-empty"));
        }
        if distances.len() != rows * cols {
            return Err(VprError::invalid(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                distances.len()
            )));
        }
        if let Some(i) = distances.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(VprError::invalid(format!(
                "entry ({}, {}) = {} is not a finite non-negative distance",
                i / cols,
                i % cols,
                distances[i]
            )));
        }
        Ok(Self {
            rows,
            cols,
            distances,
        })
    }

    /// Number of training frames.
    pub fn train_len(&self) -> usize {
        self.rows
    }

    /// Number of testing frames.
    pub fn test_len(&self) -> usize {
        self.cols
    }

    pub fn get(&self, train: usize, test: usize) -> f32 {
        self.distances[train * self.cols + test]
    }

    pub fn row(&self, train: usize) -> &[f32] {
        &self.distances[train * self.cols..(train + 1) * self.cols]
    }

    /// Copies out the distances of one testing frame to all training frames.
    pub fn column(&self, test: usize) -> Vec<f32> {
        self.distances
            .iter()
            .skip(test)
            .step_by(self.cols)
            .copied()
            .collect()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.distances
    }

    /// Smallest and largest entry.
    pub fn range(&self) -> (f32, f32) {
        self.distances
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &d| {
                (lo.min(d), hi.max(d))
            })
    }
}

pub fn build_confusion_matrix(train: &FeatureSet, test: &FeatureSet) -> Result<ConfusionMatrix> {
    build_confusion_matrix_with(train, test, Metric::L2)
}

/// Fills the matrix row by row in parallel; every entry is computed
/// independently, so the result does not depend on the thread count.
pub fn build_confusion_matrix_with(
    train: &FeatureSet,
    test: &FeatureSet,
    metric: Metric,
) -> Result<ConfusionMatrix> {
    if train.is_empty() || test.is_empty() {
        return Err(VprError::invalid(format!(
            "cannot match empty traverses ({} training, {} testing frames)",
            train.len(),
            test.len()
        )));
    }
    if train.dim() != test.dim() {
        return Err(VprError::invalid(format!(
            "training dimension {} differs from testing dimension {}",
            train.dim(),
            test.dim()
        )));
    }
    let kernel = metric.kernel(train.dim())?;
    let cols = test.len();
    let mut distances = vec![0.0f32; train.len() * cols];
    distances
        .par_chunks_mut(cols)
        .zip(train.frames().par_iter())
        .for_each(|(row, reference)| {
            for (out, query) in row.iter_mut().zip(test.frames()) {
                *out = kernel(reference.as_slice(), query.as_slice());
            }
        });
    ConfusionMatrix::new(train.len(), cols, distances)
}

/// Best training frame for one testing frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchHypothesis {
    pub test_index: usize,
    pub train_index: usize,
    pub distance: f32,
    /// Set by the spatial continuity check.
    pub plausible: bool,
}

/// Column-wise argmin; ties go to the lowest training index.
pub fn best_matches(cm: &ConfusionMatrix) -> Vec<MatchHypothesis> {
    let mut best_row = vec![0usize; cm.cols];
    let mut best = cm.row(0).to_vec();
    for i in 1..cm.rows {
        for (j, &d) in cm.row(i).iter().enumerate() {
            if d < best[j] {
                best[j] = d;
                best_row[j] = i;
            }
        }
    }
    best_row
        .into_iter()
        .zip(best)
        .enumerate()
        .map(|(test_index, (train_index, distance))| MatchHypothesis {
            test_index,
            train_index,
            distance,
            plausible: false,
        })
        .collect()
}
