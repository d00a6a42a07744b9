use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VprError};
use crate::eval::GroundTruth;
use crate::features::{FeatureSet, FeatureVector};

/// Lowest and highest angular frequency of a signature component, in radians per frame.
const FREQ_RANGE: (f64, f64) = (0.05, 0.3);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub train_frames: usize,
    /// Training frames advanced per testing frame.
    pub velocity_ratio: f64,
    pub dim: usize,
    pub noise_sigma: f64,
    pub basis_count: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            train_frames: 200,
            velocity_ratio: 1.0,
            dim: 64,
            noise_sigma: 0.0,
            basis_count: 8,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn test_frames(&self) -> usize {
        (self.train_frames as f64 / self.velocity_ratio).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.velocity_ratio > 0.0 && self.velocity_ratio.is_finite()) {
            return Err(VprError::invalid("velocity ratio must be > 0"));
        }
        if self.dim == 0 || self.basis_count == 0 || self.train_frames == 0 {
            return Err(VprError::invalid(
                "train_frames, dim and basis_count must be >= 1",
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(VprError::invalid("noise sigma must be >= 0"));
        }
        if self.test_frames() == 0 {
            return Err(VprError::invalid("configuration yields no testing frames"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub train: FeatureSet,
    pub test: FeatureSet,
    /// True training frame of each testing frame.
    pub truth: Vec<usize>,
    pub ground_truth: GroundTruth,
}

struct Signature {
    // [dim][basis]
    freq: Vec<f64>,
    phase: Vec<f64>,
    amp: Vec<f64>,
    basis: usize,
}

impl Signature {
    fn sample(&self, position: f64) -> Vec<f64> {
        self.freq
            .chunks_exact(self.basis)
            .zip(self.phase.chunks_exact(self.basis))
            .zip(self.amp.chunks_exact(self.basis))
            .map(|((f, p), a)| {
                (0..self.basis)
                    .map(|b| a[b] * (f[b] * position + p[b]).sin())
                    .sum()
            })
            .collect()
    }
}

/// Two traverses of one route: training frame `i` sits at position `i`,
/// testing frame `j` at `velocity_ratio * j` with additive Gaussian noise.
/// Each feature component is a sum of `basis_count` seeded random sinusoids
/// of position, so nearby frames look alike.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.dim * cfg.basis_count;
    let amp_scale = (cfg.basis_count as f64).sqrt().recip();
    let freq = (0..n).map(|_| rng.gen_range(FREQ_RANGE.0..FREQ_RANGE.1)).collect();
    let phase = (0..n)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    let amp = (0..n).map(|_| amp_scale * rng.gen_range(0.5..1.0)).collect();
    let sig = Signature {
        freq,
        phase,
        amp,
        basis: cfg.basis_count,
    };
    let to_vector = |v: Vec<f64>| FeatureVector::new(v.into_iter().map(|x| x as f32).collect());

    let train = (0..cfg.train_frames)
        .map(|i| to_vector(sig.sample(i as f64)))
        .collect::<Result<Vec<_>>>()?;

    let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma validated");
    let test_len = cfg.test_frames();
    let mut test = Vec::with_capacity(test_len);
    for j in 0..test_len {
        let mut v = sig.sample(cfg.velocity_ratio * j as f64);
        if cfg.noise_sigma > 0.0 {
            v.iter_mut().for_each(|x| *x += noise.sample(&mut rng));
        }
        test.push(to_vector(v)?);
    }

    let last = (cfg.train_frames - 1) as f64;
    let truth: Vec<usize> = (0..test_len)
        .map(|j| (cfg.velocity_ratio * j as f64).round().clamp(0.0, last) as usize)
        .collect();
    let label = |which: &str| {
        format!(
            "synthetic {which} seed={} ratio={} noise={}",
            cfg.seed, cfg.velocity_ratio, cfg.noise_sigma
        )
    };
    Ok(SynthDataset {
        train: FeatureSet::from_frames(0, train, label("train"))?,
        test: FeatureSet::from_frames(0, test, label("test"))?,
        ground_truth: GroundTruth::frames(truth.clone(), 1.0)?,
        truth,
    })
}
