//! Criterion benchmarks for the learners and the augmenter; see `benches/`.
