//! Energy-management strategies: reactive policies, the efficiency-ranked
//! greedy optimizer and two optimality oracles.

mod greedy;
mod oracle;
mod policy;

pub use greedy::{
    efficiency_order, greedy_optimize, greedy_optimize_model, rank_efficiency,
    rank_efficiency_model, EfficiencyEntry, GreedyOutcome,
};
pub use oracle::{
    dp_fuel_tolerance, dp_optimize, dp_optimize_model, exhaustive_optimize,
    exhaustive_optimize_model, MAX_EXHAUSTIVE_STEPS,
};
pub use policy::{policy_step, PolicyKind, ReactivePolicy};
