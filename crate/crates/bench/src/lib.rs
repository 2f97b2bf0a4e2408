//! Criterion benchmarks for `bohmnl-core`; see `benches/`.
