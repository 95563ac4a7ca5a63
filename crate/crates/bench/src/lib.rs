//! Criterion benchmarks for `coreg-core` live in `benches/`.
