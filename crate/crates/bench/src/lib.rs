//! Benchmark-only crate; see the `benches/` directory.
//!
//! Run with `cargo bench -p ipmqp-bench`.
