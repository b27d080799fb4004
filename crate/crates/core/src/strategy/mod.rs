//! Rank computation, prioritization, and node assignment.
//!
//! Everything here is a pure function of its inputs plus an explicit rng
//! or cursor owned by the caller.

mod assign;
mod name;
mod prioritize;
mod rank;

pub use assign::{assign, baseline_assign, baseline_pick, NodeSnapshot, RoundRobinCursor};
pub use name::{Assignment, Prioritization, StrategyName};
pub use prioritize::{prioritize, CandidateTask};
pub use rank::{compute_ranks, RankTable};
