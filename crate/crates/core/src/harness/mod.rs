//! Synthetic traverses, a brute-force reference pipeline and the matching benchmark.

mod bench;
mod oracle;
mod synth;

pub use bench::{bench_matching, bench_matching_on, random_references, BenchReport};
pub use oracle::oracle_pipeline;
pub use synth::{generate_synthetic, SynthConfig, SynthDataset};
