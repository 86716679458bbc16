//! Data generation, the predict-repair-optimize heuristic, and the
//! ablation/benchmark harness.

pub mod scenario;
