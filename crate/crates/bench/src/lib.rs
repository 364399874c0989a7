//! Benchmarks for the vassbound pipeline live in `benches/`.
