//! Competitive equilibrium from random incomes (CERI) for combinatorial
//! assignment: market-clearing prices under random token budgets, lottery
//! decomposition into near-feasible ex-post allocations, ordinal efficiency
//! and fairness certification, and end-to-end assignment mechanisms.
//!
//! Start with the runnable programs under `examples/` — there is one per
//! major capability — or with the `ceri` binary's subcommands.

pub mod cli;
pub mod decompose;
pub mod demand;
pub mod equilibrium;
pub mod lp;
pub mod mechanisms;
pub mod model;
pub mod report;
pub mod scenario;
pub mod testgen;
pub mod verify;

pub use model::{
    AgentPreference, Bundle, BudgetDistribution, BudgetPiece, Economy, Lottery, LotteryAllocation,
    PriceVector,
};
