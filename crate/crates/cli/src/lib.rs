//! Benchmark harness and synthetic registration fixtures behind the `bench`
//! and `icp` binaries.

pub mod bench;
pub mod fixture;
