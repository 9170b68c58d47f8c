//! Fixtures shared by the sampling benchmarks.

use tuplewise::SamplerConfig;

/// Window sizes exercised by the throughput benchmarks.
pub const WINDOW_SIZES: [i64; 3] = [1_000, 10_000, 100_000];

/// The configuration used for bulk statistics, with a fixed seed.
pub fn bench_config() -> SamplerConfig {
    SamplerConfig::fast(0xbe7c)
}
