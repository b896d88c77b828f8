//! Criterion benchmarks for `monoshade`; see `benches/`.
