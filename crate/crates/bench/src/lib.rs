//! Criterion benchmarks for `horoflow`; see `benches/`.
