//! Criterion benchmarks for `qst-core`; see `benches/`.
