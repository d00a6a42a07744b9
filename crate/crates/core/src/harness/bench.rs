use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VprError};
use crate::matching::euclidean_distance;
use crate::numfmt::serde_sig9;

/// Timing of one query matched against a flat block of references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dim: usize,
    pub ref_count: usize,
    pub repetitions: usize,
    pub threads: usize,
    #[serde(with = "serde_sig9")]
    pub wall_time: f64,
    #[serde(with = "serde_sig9")]
    pub seconds_per_query: f64,
    #[serde(with = "serde_sig9")]
    pub queries_per_second: f64,
    /// `dim * ref_count * queries_per_second`
    #[serde(with = "serde_sig9")]
    pub values_per_second: f64,
}

/// A random query and `count` random references, row-major, drawn from the
/// uint16 value range and stored as f32.
pub fn random_references(dim: usize, count: usize, seed: u64) -> (Vec<f32>, Vec<f32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<f32> { (0..n).map(|_| rng.gen::<u16>() as f32).collect() };
    let query = draw(dim);
    let refs = draw(dim * count);
    (query, refs)
}

/// Times `repetitions` full passes of `query` over `refs`, returning the
/// report and the distances from the last pass.
pub fn bench_matching_on(
    query: &[f32],
    refs: &[f32],
    repetitions: usize,
    parallel: bool,
) -> Result<(BenchReport, Vec<f32>)> {
    let dim = query.len();
    if repetitions == 0 {
        return Err(VprError::invalid("benchmark needs at least one repetition"));
    }
    if dim == 0 || refs.is_empty() || !refs.len().is_multiple_of(dim) {
        return Err(VprError::invalid(format!(
            "{} reference values do not split into vectors of dimension {dim}",
            refs.len()
        )));
    }
    let ref_count = refs.len() / dim;
    let mut distances = vec![0.0f32; ref_count];
    let start = Instant::now();
    for _ in 0..repetitions {
        if parallel {
            distances
                .par_iter_mut()
                .zip(refs.par_chunks_exact(dim))
                .try_for_each(|(out, r)| euclidean_distance(query, r).map(|d| *out = d))?;
        } else {
            for (out, r) in distances.iter_mut().zip(refs.chunks_exact(dim)) {
                *out = euclidean_distance(query, r)?;
            }
        }
    }
    let wall_time = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    let seconds_per_query = wall_time / repetitions as f64;
    let queries_per_second = seconds_per_query.recip();
    let report = BenchReport {
        dim,
        ref_count,
        repetitions,
        threads: if parallel { rayon::current_num_threads() } else { 1 },
        wall_time,
        seconds_per_query,
        queries_per_second,
        values_per_second: (dim * ref_count) as f64 * queries_per_second,
    };
    Ok((report, distances))
}

/// Generates seeded random data and times matching it; data generation is not timed.
pub fn bench_matching(
    dim: usize,
    ref_count: usize,
    repetitions: usize,
    parallel: bool,
    seed: u64,
) -> Result<BenchReport> {
    if dim == 0 || ref_count == 0 {
        return Err(VprError::invalid("dim and ref_count must be >= 1"));
    }
    if repetitions == 0 {
        return Err(VprError::invalid("benchmark needs at least one repetition"));
    }
    let (query, refs) = random_references(dim, ref_count, seed);
    bench_matching_on(&query, &refs, repetitions, parallel).map(|(r, _)| r)
}
