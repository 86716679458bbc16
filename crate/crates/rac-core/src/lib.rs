//! Learning-accelerated reliability assessment commitment.
//!
//! This crate builds and solves DC unit-commitment MILPs with lazily generated
//! transmission constraints, trains a graph neural network to predict
//! commitments and active line constraints, scores prediction confidence with
//! Monte-Carlo dropout, repairs predicted schedules to feasibility in
//! polynomial time, and benchmarks the resulting predict-repair-optimize
//! heuristic against the plain solver.

pub mod uc;

pub mod netcalc;
pub mod milp;
pub mod repair;
pub mod pipeline;
pub mod solver;
