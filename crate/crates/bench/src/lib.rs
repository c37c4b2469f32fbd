//! Benchmarks for the integrator and the optimal-control solvers. Run with
//! `cargo bench -p hivoc-bench`.
