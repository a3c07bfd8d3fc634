//! Image building and lookup-cost benchmarking.

pub mod bench;
pub mod builder;
pub mod manifest;

pub use bench::{bench_report, BenchConfig, BenchReport, CostCounters, PathCache, Workload};
pub use builder::{build_image, build_image_bytes, BuildError, BuildOptions};
pub use manifest::{Declaration, Manifest, ManifestError, PayloadSource};
