//! Benchmarks for the inversion pipeline live in `benches/`.
