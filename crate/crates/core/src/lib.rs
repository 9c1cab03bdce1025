//! Multi-agent path finding toolkit for grid rail networks.
//!
//! The crate bundles a deterministic train simulator with malfunctions and
//! competition scoring, a difficulty-scheduled environment generator,
//! centralized planners (prioritized planning over safe intervals, large
//! neighbourhood search) with robust execution, decentralized coordination
//! heuristics, observation builders, and an evaluation harness.

pub mod error;
pub mod exec;
pub mod fixtures;
pub mod gen;
pub mod graph;
pub mod harness;
pub mod obs;
pub mod rail;
pub mod sim;
pub mod solver;
