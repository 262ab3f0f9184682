//! Criterion benchmarks for `lav-core` live in `benches/`.
