//! Criterion benchmarks for the Lindblad engine and the fitting routines;
//! run with `cargo bench -p magnonlab-bench`.
