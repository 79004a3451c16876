//! Criterion benchmarks for the badeconv pipeline; see `benches/`.
