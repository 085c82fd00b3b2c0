//! Library target kept empty; this crate exists for its criterion benchmarks.
