//! Criterion benchmarks for the marker pipeline; see `benches/`.
