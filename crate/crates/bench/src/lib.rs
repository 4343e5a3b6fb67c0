//! Benchmarks for `linexsel`; see `benches/`.
